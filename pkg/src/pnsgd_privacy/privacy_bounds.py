"""(epsilon, delta) guarantees for projected noisy SGD.

Covers the per-index, randomly-stopped and shuffled bounds, the fixed
noise schedules with their large-n limits, and the online decaying-noise
bounds with their integral limits.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError
from .special_functions import (
    LossProfile,
    contraction_m,
    lambert_w0,
    theta,
    theta_complement,
)

__all__ = [
    "PrivacyBudget",
    "GeometrySpec",
    "NoiseModel",
    "ScheduleSpec",
    "BoundConstants",
    "ab_constants",
    "per_index_delta",
    "randomly_stopped_delta",
    "shuffled_delta",
    "fixed_laplace_scale",
    "fixed_gaussian_scale",
    "delta_star_fixed_laplace",
    "delta_star_fixed_gaussian",
    "shuffled_delta_fixed_noise",
    "online_scale",
    "online_delta_finite",
    "online_delta_limit_upper",
    "online_delta_limit_lower",
]


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative")
        if not 0 <= self.delta <= 1:
            raise DomainError("delta must lie in [0, 1]")


@dataclass(frozen=True)
class GeometrySpec:
    """Projection-set geometry: a ball of given diameter or an interval [a, b]."""

    kind: str
    diameter: float | None = None
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind == "ball":
            if self.diameter is None or self.diameter <= 0:
                raise DomainError("ball geometry requires a positive diameter")
        elif self.kind == "interval":
            if self.bounds is None or self.bounds[0] >= self.bounds[1]:
                raise DomainError("interval geometry requires bounds (a, b) with a < b")
        else:
            raise DomainError(f"unknown geometry kind {self.kind!r}")

    @property
    def width(self) -> float:
        if self.kind != "interval":
            raise DomainError("width is defined only for interval geometry")
        return self.bounds[1] - self.bounds[0]


@dataclass(frozen=True)
class NoiseModel:
    """Tagged noise distribution: Gaussian standard deviation or Laplace scale."""

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "laplace"):
            raise DomainError(f"unknown noise kind {self.kind!r}")
        if self.scale <= 0:
            raise DomainError("noise scale must be positive")


@dataclass(frozen=True)
class ScheduleSpec:
    """Constants of the noise-decay schedules.

    mode="fixed" calibrates one scale per dataset size n; mode="online"
    decays the scale per update index with exponent alpha > 1.
    """

    C1: float
    C2: float
    mode: str
    alpha: float | None = None

    def __post_init__(self):
        if self.C1 <= 0:
            raise DomainError("C1 must be positive")
        if self.mode not in ("fixed", "online"):
            raise DomainError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "online" and (self.alpha is None or self.alpha <= 1):
            raise DomainError("online mode requires alpha > 1")


@dataclass(frozen=True)
class BoundConstants:
    A: float
    B: float

    def __post_init__(self):
        if not (0 <= self.A <= 1 and 0 <= self.B <= 1):
            raise DomainError("A and B must lie in [0, 1]")


def _clamp_delta(value: float) -> float:
    clamped = min(max(value, 0.0), 1.0)
    if abs(clamped - value) > 1e-12:
        warnings.warn(f"delta clamped by {abs(clamped - value):.3e}", RuntimeWarning)
    return clamped


def ab_constants(
    noise: NoiseModel, profile: LossProfile, geom: GeometrySpec, epsilon: float
) -> BoundConstants:
    """Per-step constants of the delta = A * B^(n-i) bound."""
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    m = contraction_m(profile)
    if noise.kind == "gaussian":
        if geom.kind != "ball":
            raise DomainError("gaussian noise requires ball geometry")
        a = theta(math.exp(epsilon), 2 * profile.L / noise.scale)
        b = theta(math.exp(epsilon), m * geom.diameter / (profile.eta * noise.scale))
    else:
        if geom.kind != "interval":
            raise DomainError("laplace noise requires interval geometry")
        a = max(0.0, -math.expm1(epsilon / 2 - profile.L / noise.scale))
        b = max(0.0, -math.expm1(epsilon / 2 - m * geom.width / (2 * profile.eta * noise.scale)))
    return BoundConstants(A=a, B=b)


def _check_index(n: int, i: int) -> None:
    if n < 1:
        raise DomainError("n must be a positive integer")
    if not 1 <= i <= n:
        raise DomainError(f"index i={i} out of range [1, {n}]")


def per_index_delta(consts: BoundConstants, n: int, i: int) -> float:
    """delta = A * B^(n-i), accumulated in log space."""
    _check_index(n, i)
    if consts.A == 0:
        return 0.0
    if consts.B == 0:
        return consts.A if i == n else 0.0
    return _clamp_delta(math.exp(math.log(consts.A) + (n - i) * math.log(consts.B)))


def _avg_geom(b: float, k: int) -> float:
    """sum_{j=0}^{k-1} b^j, stable as b -> 1 via the log1p form."""
    u = 1.0 - b
    if u <= 0:
        return float(k)
    if b == 0:
        return 1.0
    return -math.expm1(k * math.log1p(-u)) / u


def randomly_stopped_delta(consts: BoundConstants, n: int, i: int) -> float:
    """delta = A * (1 - B^(n-i+1)) / (n * (1 - B)) for the uniform stopping time."""
    _check_index(n, i)
    return _clamp_delta(consts.A * _avg_geom(consts.B, n - i + 1) / n)


def shuffled_delta(consts: BoundConstants, n: int) -> float:
    """delta = A * (1 - B^n) / (n * (1 - B)), index independent."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    return _clamp_delta(consts.A * _avg_geom(consts.B, n) / n)


def fixed_laplace_scale(
    n: int, sched: ScheduleSpec, profile: LossProfile, geom: GeometrySpec
) -> float:
    """Calibrated Laplace scale v(n) = M(b-a) / (2 eta log(n/C1 + C2))."""
    if geom.kind != "interval":
        raise DomainError("fixed Laplace schedule requires interval geometry")
    arg = n / sched.C1 + sched.C2
    if arg <= 1:
        raise DomainError(f"schedule argument n/C1 + C2 = {arg} must exceed 1")
    return contraction_m(profile) * geom.width / (2 * profile.eta * math.log(arg))


def fixed_gaussian_scale(
    n: int, sched: ScheduleSpec, profile: LossProfile, geom: GeometrySpec
) -> float:
    """Calibrated Gaussian scale sigma(n) = M D_K / (2 eta sqrt(W(n^2/(2 C1^2 pi) + C2)))."""
    if geom.kind != "ball":
        raise DomainError("fixed Gaussian schedule requires ball geometry")
    arg = n * n / (2 * sched.C1**2 * math.pi) + sched.C2
    if arg <= 0:
        raise DomainError(f"Lambert W argument {arg} must be positive")
    w = lambert_w0(arg)
    if w <= 0:
        raise DomainError("Lambert W argument too small for a positive scale")
    return contraction_m(profile) * geom.diameter / (2 * profile.eta * math.sqrt(w))


def delta_star_fixed_laplace(epsilon: float, C1: float) -> float:
    """Large-n limit (1 - e^{-C1 e^{eps/2}}) / (C1 e^{eps/2}) of the fixed Laplace schedule."""
    if C1 <= 0:
        raise DomainError("C1 must be positive")
    x = C1 * math.exp(epsilon / 2)
    return -math.expm1(-x) / x


def delta_star_fixed_gaussian(epsilon: float, C1: float) -> float:
    """Large-n limit of the fixed Gaussian schedule; equals the Laplace limit at 2*C1."""
    return delta_star_fixed_laplace(epsilon, 2 * C1)


def shuffled_delta_fixed_noise(
    n: int,
    epsilon: float,
    sched: ScheduleSpec,
    profile: LossProfile,
    geom: GeometrySpec,
    noise_kind: str,
) -> float:
    """Finite-n shuffled delta under the calibrated fixed-noise schedule."""
    if sched.mode != "fixed":
        raise DomainError("shuffled_delta_fixed_noise requires a fixed-mode schedule")
    if noise_kind == "laplace":
        scale = fixed_laplace_scale(n, sched, profile, geom)
    elif noise_kind == "gaussian":
        scale = fixed_gaussian_scale(n, sched, profile, geom)
    else:
        raise DomainError(f"unknown noise kind {noise_kind!r}")
    consts = ab_constants(NoiseModel(kind=noise_kind, scale=scale), profile, geom, epsilon)
    return shuffled_delta(consts, n)


def online_scale(
    j: int,
    sched: ScheduleSpec,
    profile: LossProfile,
    geom: GeometrySpec,
    noise_kind: str,
) -> float:
    """Per-update decayed noise scale v_j or sigma_j."""
    if sched.mode != "online":
        raise DomainError("online_scale requires an online-mode schedule")
    if j < 1:
        raise DomainError("update index j must be >= 1")
    m = contraction_m(profile)
    if noise_kind == "laplace":
        if geom.kind != "interval":
            raise DomainError("laplace online schedule requires interval geometry")
        arg = j**sched.alpha / sched.C1 + sched.C2
        if arg <= 1:
            raise DomainError(f"schedule argument j^alpha/C1 + C2 = {arg} must exceed 1")
        return m * geom.width / (2 * profile.eta * math.log(arg))
    if noise_kind == "gaussian":
        if geom.kind != "ball":
            raise DomainError("gaussian online schedule requires ball geometry")
        arg = j ** (2 * sched.alpha) / (2 * math.pi * sched.C1**2) + sched.C2
        w = lambert_w0(arg)
        if w <= 0:
            raise DomainError("Lambert W argument too small for a positive scale")
        return m * geom.diameter / (2 * profile.eta * math.sqrt(w))
    raise DomainError(f"unknown noise kind {noise_kind!r}")


def _online_a(
    i: int,
    epsilon: float,
    sched: ScheduleSpec,
    profile: LossProfile,
    geom: GeometrySpec,
    noise_kind: str,
) -> float:
    scale = online_scale(i, sched, profile, geom, noise_kind)
    return ab_constants(NoiseModel(kind=noise_kind, scale=scale), profile, geom, epsilon).A


def _online_log_b(
    t: np.ndarray,
    epsilon: float,
    sched: ScheduleSpec,
    geom: GeometrySpec,
    noise_kind: str,
) -> np.ndarray:
    """log B_t for an array of update indices; -inf where the clamp hits 0.

    After substituting the calibrated scales the constants simplify: the
    Laplace factor is 1 - C1 e^{eps/2} / (t^alpha + C1 C2) and the Gaussian
    factor is theta_{e^eps}(2 sqrt(W(t^{2 alpha}/(2 pi C1^2) + C2))), so M,
    eta and the geometry cancel out of B_t.
    """
    if noise_kind == "laplace":
        comp = sched.C1 * np.exp(epsilon / 2) / (t**sched.alpha + sched.C1 * sched.C2)
    else:
        arg = t ** (2 * sched.alpha) / (2 * math.pi * sched.C1**2) + sched.C2
        comp = theta_complement(math.exp(epsilon), 2 * np.sqrt(lambert_w0(arg)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(comp < 1, np.log1p(-np.minimum(comp, 1.0)), -np.inf)
    return out


def online_delta_finite(
    n: int,
    i: int,
    epsilon: float,
    sched: ScheduleSpec,
    profile: LossProfile,
    geom: GeometrySpec,
    noise_kind: str,
) -> float:
    """delta = A_i * prod_{t=i+1}^n B_t with per-index decayed noise."""
    _check_index(n, i)
    if sched.mode != "online":
        raise DomainError("online_delta_finite requires an online-mode schedule")
    a_i = _online_a(i, epsilon, sched, profile, geom, noise_kind)
    if a_i == 0 or n == i:
        return _clamp_delta(a_i)
    log_prod = 0.0
    chunk = 1_000_000
    for start in range(i + 1, n + 1, chunk):
        t = np.arange(start, min(start + chunk, n + 1), dtype=float)
        log_b = _online_log_b(t, epsilon, sched, geom, noise_kind)
        if np.any(np.isneginf(log_b)):
            return 0.0
        log_prod += float(np.sum(log_b))
    return _clamp_delta(math.exp(math.log(a_i) + log_prod))


def _online_limit(
    i: int,
    epsilon: float,
    sched: ScheduleSpec,
    profile: LossProfile,
    geom: GeometrySpec,
    noise_kind: str,
    lower_limit: float,
) -> float:
    if sched.mode != "online":
        raise DomainError("online limits require an online-mode schedule")
    a_i = _online_a(i, epsilon, sched, profile, geom, noise_kind)
    if a_i == 0:
        return 0.0

    cache: dict[float, float] = {}  # W evaluation dominates the Gaussian integrand

    def g(x: float) -> float:
        if x in cache:
            return cache[x]
        val = float(_online_log_b(np.asarray([x]), epsilon, sched, geom, noise_kind)[0])
        cache[x] = val
        return val

    if not math.isfinite(g(lower_limit)):
        return 0.0  # a zero factor annihilates the whole product

    # Finite leading panel plus SciPy's semi-infinite transform for the
    # x^(-alpha) tail; the analytic envelope |g| <= 4 C1 e^(eps/2) x^(-alpha)
    # guarantees the tail is integrable for alpha > 1.
    split = max(10.0 * lower_limit, 1e4)
    with warnings.catch_warnings():
        # roundoff-level IntegrationWarnings are re-checked against the
        # error estimates below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, err_head = integrate.quad(g, lower_limit, split, limit=500, epsabs=1e-13, epsrel=1e-12)
        tail, err_tail = integrate.quad(g, split, np.inf, limit=500, epsabs=1e-13, epsrel=1e-12)
    total = head + tail
    if err_head + err_tail > 1e-8 * max(1.0, abs(total)):
        raise QuadratureError(
            f"online limit quadrature error {err_head + err_tail:.2e} too large"
        )
    return _clamp_delta(a_i * math.exp(total))


def online_delta_limit_upper(
    i: int,
    epsilon: float,
    sched: ScheduleSpec,
    profile: LossProfile,
    geom: GeometrySpec,
    noise_kind: str,
) -> float:
    """n -> infinity upper limit A_i * exp(int_{i+1}^inf log B_x dx)."""
    return _online_limit(i, epsilon, sched, profile, geom, noise_kind, lower_limit=i + 1.0)


def online_delta_limit_lower(
    i: int,
    epsilon: float,
    sched: ScheduleSpec,
    profile: LossProfile,
    geom: GeometrySpec,
    noise_kind: str,
) -> float:
    """Companion lower limit with the integral taken from i instead of i+1."""
    return _online_limit(i, epsilon, sched, profile, geom, noise_kind, lower_limit=float(i))
