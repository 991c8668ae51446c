"""Scalar numerical building blocks for the privacy bounds.

Everything in this module is a pure function of its arguments, with no
global state, so all routines are safe to call concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr, ndtr

from .errors import DomainError, NonconvergenceError, QuadratureError

__all__ = [
    "LossProfile",
    "q_function",
    "log_q_function",
    "theta",
    "theta_complement",
    "theta_asymptotic",
    "theta_asymptotic_deficit",
    "divergence_oracle",
    "lambert_w0",
    "contraction_m",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class LossProfile:
    """Loss regularity constants and the SGD learning rate.

    L: Lipschitz constant of the loss; beta: Lipschitz constant of its
    gradient; rho: strong convexity (0 for merely convex); eta: learning
    rate.
    """

    L: float
    beta: float
    rho: float
    eta: float

    def __post_init__(self):
        if not (self.L > 0 and self.beta > 0 and self.eta > 0):
            raise DomainError("L, beta and eta must be positive")
        if self.rho < 0:
            raise DomainError("rho must be nonnegative")
        ratio = 0.0 if self.rho == 0 else 2 * self.eta * self.beta * self.rho / (self.beta + self.rho)
        if ratio > 1:
            raise DomainError("2*eta*beta*rho/(beta+rho) must be <= 1 for a real contraction constant")


def q_function(t: float) -> float:
    """Upper tail of the standard normal, 1 - Phi(t).

    Evaluated through the complementary error function so that relative
    accuracy survives far into the tail (no cancellation for t > 8).  Once
    the direct route underflows (t > ~37.5) the value is recovered from
    the log tail, which stretches the range down to the subnormal floor;
    past that the true value is below the smallest positive double and 0
    is returned.  Use log_q_function when the magnitude itself matters.
    """
    value = float(ndtr(-t))
    if value == 0.0 and math.isfinite(t):
        log_tail = float(log_ndtr(-t))
        if log_tail > -760.0:
            value = math.exp(log_tail)
    return value


def log_q_function(t):
    """log(1 - Phi(t)), stable for large positive t."""
    return log_ndtr(-t)


def _check_theta_args(gamma, r, allow_inf_r: bool = False) -> None:
    if not np.all(np.isfinite(gamma)):
        raise DomainError("gamma must be finite")
    if not allow_inf_r and not np.all(np.isfinite(r)):
        raise DomainError("r must be finite")
    if np.any(np.isnan(r)):
        raise DomainError("r must not be NaN")
    if np.any(np.asarray(gamma) < 1):
        raise DomainError("gamma must be >= 1")
    if np.any(np.asarray(r) <= 0):
        raise DomainError("r must be positive")


def theta(gamma: float, r: float) -> float:
    """Hockey-stick divergence between N(0,1) and N(r,1) at level gamma.

    theta_gamma(r) = Q(log(gamma)/r - r/2) - gamma * Q(log(gamma)/r + r/2).
    The second term is formed in log space: gamma = e^eps can be huge while
    the Q factor underflows, and only the product is well scaled.
    """
    _check_theta_args(gamma, r)
    log_gamma = np.log(gamma)
    z1 = log_gamma / r - r / 2
    z2 = log_gamma / r + r / 2
    value = ndtr(-z1) - np.exp(log_gamma + log_ndtr(-z2))
    # absorb last-ulp noise only
    return float(np.clip(value, 0.0, 1.0))


def theta_complement(gamma, r):
    """1 - theta_gamma(r), accurate when theta is close to 1.

    Both contributions are small positive tail quantities, so the
    complement keeps full relative accuracy where the direct 1 - theta
    would cancel.  Accepts scalars or arrays; r = +inf maps to 0.
    """
    _check_theta_args(gamma, r, allow_inf_r=True)
    gamma = np.asarray(gamma, dtype=float)
    r = np.asarray(r, dtype=float)
    log_gamma = np.log(gamma)
    z1 = log_gamma / r - r / 2
    z2 = log_gamma / r + r / 2
    out = ndtr(z1) + np.exp(log_gamma + log_ndtr(-z2))
    if out.ndim == 0:
        return float(out)
    return out


def theta_asymptotic(epsilon: float, c: float, sigma: float) -> float:
    """Leading-order small-sigma expansion of theta_{e^eps}(c / sigma).

    Returns 1 - e^{eps/2} e^{-c^2/(8 sigma^2)} (4 sigma / c) / sqrt(2 pi).
    Test comparator only; never used inside the production bounds.
    """
    return 1.0 - theta_asymptotic_deficit(epsilon, c, sigma)


def theta_asymptotic_deficit(epsilon: float, c: float, sigma: float) -> float:
    """The small-sigma deficit 1 - theta_asymptotic, kept at full precision.

    The deficit can be far below machine epsilon, where forming it from
    1 - theta_asymptotic would lose everything.
    """
    if c <= 0 or sigma <= 0:
        raise DomainError("c and sigma must be positive")
    return math.exp(epsilon / 2 - c * c / (8 * sigma * sigma)) * (4 * sigma / c) / _SQRT_2PI


def divergence_oracle(gamma: float, shift: float, sigma: float) -> float:
    """Brute-force hockey-stick divergence between N(0, s^2) and N(shift, s^2).

    Integrates (p - gamma*q)_+ by adaptive quadrature, splitting at the
    closed-form crossing point of p = gamma*q where the integrand has a
    kink.  Independent test oracle for theta(gamma, shift/sigma).
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if gamma < 1:
        raise DomainError("gamma must be >= 1")
    s = abs(float(shift))
    if s == 0.0:
        return 0.0  # p = q, positive part of (1 - gamma) p vanishes for gamma >= 1

    def integrand(x):
        lp = -0.5 * (x / sigma) ** 2
        lq = -0.5 * ((x - s) / sigma) ** 2
        val = (math.exp(lp) - gamma * math.exp(lq)) / (_SQRT_2PI * sigma)
        return val if val > 0 else 0.0

    lo = min(0.0, s) - 12 * sigma
    hi = max(0.0, s) + 12 * sigma
    # equal variances: p(x) = gamma q(x) at a single point
    crossing = s / 2 - sigma * sigma * math.log(gamma) / s
    points = [crossing] if lo < crossing < hi else None
    value, abserr = integrate.quad(
        integrand, lo, hi, points=points, epsabs=1e-12, epsrel=1e-12, limit=500
    )
    if abserr > 1e-10:
        raise QuadratureError(f"divergence quadrature error estimate {abserr:.2e} exceeds 1e-10")
    return float(min(max(value, 0.0), 1.0))


def lambert_w0(x):
    """Principal branch of the Lambert W function on the nonnegative axis.

    Halley iteration from a logarithmic seed; residual |w e^w - x| is
    driven below 1e-12 * max(1, x).  Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("lambert_w0 requires x >= 0")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).copy()
    out = np.full_like(arr, np.inf)  # W(inf) = inf; overflowed arguments pass through
    finite = np.isfinite(arr)
    v = arr[finite]
    w = np.where(v < math.e, np.log1p(v), 0.0)
    big = v >= math.e
    if np.any(big):
        lx = np.log(v[big])
        w[big] = lx - np.log(lx)
    tol = 1e-12 * np.maximum(1.0, v)
    for _ in range(50):
        ew = np.exp(w)
        f = w * ew - v
        if np.all(np.abs(f) <= tol):
            break
        # Halley step for f(w) = w e^w - x
        denom = ew * (w + 1) - (w + 2) * f / (2 * w + 2)
        w = w - f / denom
    else:
        raise NonconvergenceError("lambert_w0 did not converge within 50 iterations")
    out[finite] = w
    return float(out[0]) if scalar else out


def contraction_m(profile: LossProfile) -> float:
    """Per-step contraction constant sqrt(1 - 2*eta*beta*rho/(beta+rho))."""
    ratio = 0.0 if profile.rho == 0 else 2 * profile.eta * profile.beta * profile.rho / (profile.beta + profile.rho)
    radicand = 1.0 - ratio
    if radicand < 0:
        raise DomainError("negative radicand in contraction constant")
    return math.sqrt(radicand)
