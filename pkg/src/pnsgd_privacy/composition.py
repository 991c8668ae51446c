"""Multi-epoch accounting through the RDP and Gaussian-DP currencies.

Each epoch of shuffled PNSGD yields one (epsilon, delta) guarantee; these
helpers convert it into a composable currency, compose across epochs and
convert back.
"""

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .errors import DomainError
from .privacy_bounds import PrivacyBudget
from .special_functions import theta

__all__ = [
    "RdpPoint",
    "GdpParam",
    "dp_to_rdp",
    "rdp_compose",
    "rdp_to_dp",
    "dp_to_gdp",
    "gdp_compose",
    "gdp_to_dp",
    "compose_epochs",
    "rdp_alpha_sweep",
    "DEFAULT_ALPHA_GRID",
]

DEFAULT_ALPHA_GRID = (1.5, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0)


@dataclass(frozen=True)
class RdpPoint:
    """Renyi-DP point (order alpha, divergence bound eps_rdp).

    eps_rdp may be negative: the DP-to-RDP transfer formula is applied
    verbatim, and small delta makes the log term dominate.
    """

    alpha: float
    eps_rdp: float

    def __post_init__(self):
        if self.alpha <= 1:
            raise DomainError("Renyi order alpha must exceed 1")


@dataclass(frozen=True)
class GdpParam:
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise DomainError("GDP parameter mu must be positive")


def dp_to_rdp(budget: PrivacyBudget, alpha: float) -> RdpPoint:
    """(eps, delta)-DP to (alpha, eps + log(delta)/(alpha - 1)) RDP."""
    if not 0 < budget.delta < 1:
        raise DomainError("dp_to_rdp requires delta strictly inside (0, 1)")
    return RdpPoint(alpha=alpha, eps_rdp=budget.epsilon + math.log(budget.delta) / (alpha - 1))


def rdp_compose(point: RdpPoint, epochs: int) -> RdpPoint:
    """Additive composition at fixed order."""
    if epochs < 1:
        raise DomainError("epochs must be >= 1")
    return RdpPoint(alpha=point.alpha, eps_rdp=epochs * point.eps_rdp)


def rdp_to_dp(point: RdpPoint, delta_target: float) -> PrivacyBudget:
    """(alpha, eps_rdp) RDP back to (eps_rdp - log(delta)/(alpha - 1), delta)-DP.

    A negative value of the transfer expression implies the epsilon = 0
    guarantee at the same delta, so the result is clamped at zero.
    """
    if not 0 < delta_target < 1:
        raise DomainError("delta_target must lie strictly inside (0, 1)")
    eps = point.eps_rdp - math.log(delta_target) / (point.alpha - 1)
    return PrivacyBudget(epsilon=max(0.0, eps), delta=delta_target)


def dp_to_gdp(budget: PrivacyBudget) -> GdpParam:
    """Invert delta = theta_{e^eps}(mu) for the unique mu > 0.

    theta is strictly increasing in its second argument, so bisection on a
    geometrically expanded bracket finds the single root.
    """
    if not 0 < budget.delta < 1:
        raise DomainError("dp_to_gdp requires delta strictly inside (0, 1)")
    gamma = math.exp(budget.epsilon)

    def resid(mu: float) -> float:
        return theta(gamma, mu) - budget.delta

    lo, hi = 1e-8, 100.0
    for _ in range(60):
        if resid(lo) < 0:
            break
        lo /= 4
    else:
        raise DomainError("delta too small to bracket a GDP parameter")
    for _ in range(60):
        if resid(hi) > 0:
            break
        hi *= 4
    else:
        raise DomainError("delta too close to 1 to bracket a GDP parameter")
    mu = brentq(resid, lo, hi, rtol=1e-12, maxiter=200)
    return GdpParam(mu=float(mu))


def gdp_compose(param: GdpParam, epochs: int) -> GdpParam:
    """mu-GDP composed over E epochs is sqrt(E)*mu-GDP."""
    if epochs < 1:
        raise DomainError("epochs must be >= 1")
    return GdpParam(mu=param.mu * math.sqrt(epochs))


def gdp_to_dp(param: GdpParam, epsilon: float) -> PrivacyBudget:
    """mu-GDP read off at a fixed epsilon: delta = theta_{e^eps}(mu)."""
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    return PrivacyBudget(epsilon=epsilon, delta=theta(math.exp(epsilon), param.mu))


@dataclass(frozen=True)
class CompositionResult:
    budget: PrivacyBudget
    diagnostics: dict = field(default_factory=dict)


def compose_epochs(
    per_epoch: PrivacyBudget,
    epochs: int,
    method: str,
    alpha: float | None = None,
    delta_target: float | None = None,
    epsilon_target: float | None = None,
) -> CompositionResult:
    """Full dp -> currency -> compose -> dp pipeline.

    method="rdp" needs alpha and delta_target; method="gdp" needs
    epsilon_target.  Intermediate currency values are recorded in the
    diagnostics for auditability.
    """
    if method == "rdp":
        if alpha is None or delta_target is None:
            raise DomainError("rdp composition requires alpha and delta_target")
        point = dp_to_rdp(per_epoch, alpha)
        composed = rdp_compose(point, epochs)
        final = rdp_to_dp(composed, delta_target)
        diag = {
            "method": "rdp",
            "alpha": alpha,
            "eps_rdp_per_epoch": point.eps_rdp,
            "eps_rdp_composed": composed.eps_rdp,
            "negative_eps_rdp": point.eps_rdp < 0,
        }
        return CompositionResult(budget=final, diagnostics=diag)
    if method == "gdp":
        if epsilon_target is None:
            raise DomainError("gdp composition requires epsilon_target")
        param = dp_to_gdp(per_epoch)
        composed = gdp_compose(param, epochs)
        final = gdp_to_dp(composed, epsilon_target)
        diag = {
            "method": "gdp",
            "mu_per_epoch": param.mu,
            "mu_composed": composed.mu,
        }
        return CompositionResult(budget=final, diagnostics=diag)
    raise DomainError(f"unknown composition method {method!r}")


def rdp_alpha_sweep(
    per_epoch: PrivacyBudget,
    epochs: int,
    delta_target: float,
    alphas=DEFAULT_ALPHA_GRID,
) -> tuple[float, CompositionResult]:
    """Pick the order on a standard grid that minimizes the final epsilon."""
    best_alpha, best = None, None
    for a in alphas:
        result = compose_epochs(per_epoch, epochs, "rdp", alpha=a, delta_target=delta_target)
        if best is None or result.budget.epsilon < best.budget.epsilon:
            best_alpha, best = a, result
    return best_alpha, best
