"""Seeded projected noisy SGD execution engine.

One trajectory is one pass over the data (single epoch), either on a
shuffled dataset or stopped at a uniform random time.  All randomness is
drawn from counter-based Philox streams keyed by (seed, replica, purpose)
so that the permutation, the stopping time and the injected noise are
independent and runs are bit-reproducible; paired variants share the same
noise stream.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .privacy_bounds import NoiseModel
from .special_functions import LossProfile

__all__ = [
    "PnsgdConfig",
    "TrajectoryResult",
    "project_ball",
    "pnsgd_step",
    "generate_synthetic",
    "sample_noise",
    "run",
    "paired_losses",
]

_PURPOSE_PERMUTATION = 0
_PURPOSE_STOPPING = 1
_PURPOSE_NOISE = 2
_PURPOSE_DATA = 3


@dataclass(frozen=True)
class PnsgdConfig:
    n: int
    d: int
    noise: NoiseModel
    profile: LossProfile
    radius: float
    loss_kind: str
    seed: int
    variant: str
    replicas: int = 1

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.replicas < 1:
            raise DomainError("n, d and replicas must be positive")
        if self.radius <= 0:
            raise DomainError("projection radius must be positive")
        if self.loss_kind not in ("linear", "logistic"):
            raise DomainError(f"unknown loss kind {self.loss_kind!r}")
        if self.variant not in ("shuffled", "randomly_stopped"):
            raise DomainError(f"unknown variant {self.variant!r}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")


@dataclass
class TrajectoryResult:
    final_parameter: np.ndarray
    per_epoch_loss: list = field(default_factory=list)
    steps_executed: int = 0


def _stream(seed: int, replica: int, purpose: int) -> np.random.Generator:
    key = np.array([seed, (replica << 8) | purpose], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def project_ball(u: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(u))
    if norm <= radius:
        return u
    return u * (radius / norm)


def _gradient(w, x, y, loss_kind):
    z = float(w @ x)
    if loss_kind == "linear":
        return x * (z - y)
    return x * (1.0 / (1.0 + math.exp(-z)) - y)


def _dataset_loss(w, X, y, loss_kind):
    z = X @ w
    if loss_kind == "linear":
        return float(np.mean((z - y) ** 2) / 2)
    # log loss: log(1 + e^z) - y*z, evaluated stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def pnsgd_step(
    w: np.ndarray,
    x: np.ndarray,
    y: float,
    noise_sample: np.ndarray,
    profile: LossProfile,
    radius: float,
    loss_kind: str = "linear",
) -> np.ndarray:
    """One projected noisy gradient update on a single example."""
    if x.shape != w.shape or noise_sample.shape != w.shape:
        raise DomainError("dimension mismatch between parameter, example and noise")
    grad = _gradient(w, x, y, loss_kind)
    return project_ball(w - profile.eta * (grad + noise_sample), radius)


def sample_noise(noise: NoiseModel, d: int, stream: np.random.Generator) -> np.ndarray:
    """d i.i.d. noise coordinates from the given stream."""
    if noise.kind == "gaussian":
        return noise.scale * stream.standard_normal(d)
    # Laplace by inverse CDF of a uniform on (-1/2, 1/2)
    u = stream.random(d) - 0.5
    return -noise.scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def generate_synthetic(
    loss_kind: str, n: int, d: int, theta_star: np.ndarray, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Standard-normal covariates with linear or logistic responses."""
    rng = _stream(seed, 0, _PURPOSE_DATA)
    X = rng.standard_normal((n, d))
    z = X @ theta_star
    if loss_kind == "linear":
        y = z + rng.standard_normal(n)
    else:
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-z))).astype(float)
    return X, y


def run(config: PnsgdConfig, data: tuple[np.ndarray, np.ndarray], replica: int = 0) -> TrajectoryResult:
    """Execute one seeded trajectory for the given replica index."""
    X, y = data
    if X.shape != (config.n, config.d) or y.shape != (config.n,):
        raise DomainError("dataset shape does not match the configuration")
    noise_stream = _stream(config.seed, replica, _PURPOSE_NOISE)
    if config.variant == "shuffled":
        order = _stream(config.seed, replica, _PURPOSE_PERMUTATION).permutation(config.n)
        steps = config.n
    else:
        stop = int(_stream(config.seed, replica, _PURPOSE_STOPPING).integers(1, config.n + 1))
        order = np.arange(config.n)
        steps = stop
    w = np.zeros(config.d)
    losses = [_dataset_loss(w, X, y, config.loss_kind)]
    for t in range(steps):
        idx = order[t]
        z = sample_noise(config.noise, config.d, noise_stream)
        w = pnsgd_step(w, X[idx], float(y[idx]), z, config.profile, config.radius, config.loss_kind)
    losses.append(_dataset_loss(w, X, y, config.loss_kind))
    return TrajectoryResult(final_parameter=w, per_epoch_loss=losses, steps_executed=steps)


def _replica_pair(args):
    config, data, replica = args
    out = []
    for variant in ("shuffled", "randomly_stopped"):
        cfg = PnsgdConfig(
            n=config.n,
            d=config.d,
            noise=config.noise,
            profile=config.profile,
            radius=config.radius,
            loss_kind=config.loss_kind,
            seed=config.seed,
            variant=variant,
            replicas=config.replicas,
        )
        out.append(run(cfg, data, replica=replica).per_epoch_loss[-1])
    return tuple(out)


def paired_losses(
    config: PnsgdConfig, data: tuple[np.ndarray, np.ndarray], workers: int = 1
) -> np.ndarray:
    """Final losses of both variants under shared noise streams.

    Returns an array of shape (replicas, 2) with columns
    (shuffled, randomly_stopped), ordered by replica index regardless of
    worker completion order.
    """
    jobs = [(config, data, r) for r in range(config.replicas)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replica_pair, jobs))
    else:
        results = [_replica_pair(j) for j in jobs]
    return np.asarray(results)
