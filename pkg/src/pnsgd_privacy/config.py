"""Declarative configuration files for the CLI.

A config is a YAML mapping whose sections map 1:1 onto the domain types;
physical parameters keep their conventional symbols (L, beta, rho, eta,
epsilon, C1, C2, alpha, D_K, a, b).
"""

import hashlib
import json

import numpy as np
import yaml

from .errors import ConfigError
from .privacy_bounds import GeometrySpec, NoiseModel, ScheduleSpec
from .simulator import PnsgdConfig, project_ball
from .special_functions import LossProfile


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be a mapping")
    return cfg


def _require(cfg: dict, field: str, section: str = ""):
    path = f"{section}.{field}" if section else field
    node = cfg
    if field not in node:
        raise ConfigError(path, "missing required field")
    return node[field]


def _number(cfg: dict, field: str, section: str = "") -> float:
    value = _require(cfg, field, section)
    path = f"{section}.{field}" if section else field
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number, got {value!r}") from None


def parse_profile(cfg: dict) -> LossProfile:
    section = _require(cfg, "profile")
    if not isinstance(section, dict):
        raise ConfigError("profile", "must be a mapping")
    try:
        return LossProfile(
            L=_number(section, "L", "profile"),
            beta=_number(section, "beta", "profile"),
            rho=_number(section, "rho", "profile"),
            eta=_number(section, "eta", "profile"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("profile", str(exc)) from exc


def parse_geometry(cfg: dict) -> GeometrySpec:
    section = _require(cfg, "geometry")
    if not isinstance(section, dict):
        raise ConfigError("geometry", "must be a mapping")
    kind = _require(section, "kind", "geometry")
    try:
        if kind == "ball":
            return GeometrySpec(kind="ball", diameter=_number(section, "D_K", "geometry"))
        if kind == "interval":
            return GeometrySpec(
                kind="interval",
                bounds=(_number(section, "a", "geometry"), _number(section, "b", "geometry")),
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("geometry", str(exc)) from exc
    raise ConfigError("geometry.kind", f"must be 'ball' or 'interval', got {kind!r}")


def parse_noise(cfg: dict, section_name: str = "noise") -> NoiseModel:
    section = _require(cfg, section_name)
    if not isinstance(section, dict):
        raise ConfigError(section_name, "must be a mapping")
    kind = _require(section, "kind", section_name)
    try:
        return NoiseModel(kind=kind, scale=_number(section, "scale", section_name))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(section_name, str(exc)) from exc


def parse_schedule(cfg: dict) -> ScheduleSpec:
    section = _require(cfg, "schedule")
    if not isinstance(section, dict):
        raise ConfigError("schedule", "must be a mapping")
    alpha = section.get("alpha")
    try:
        return ScheduleSpec(
            C1=_number(section, "C1", "schedule"),
            C2=_number(section, "C2", "schedule"),
            mode=_require(section, "mode", "schedule"),
            alpha=float(alpha) if alpha is not None else None,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("schedule", str(exc)) from exc


def parse_epsilon(cfg: dict) -> float:
    eps = _number(cfg, "epsilon")
    if eps < 0:
        raise ConfigError("epsilon", "must be nonnegative")
    return eps


def parse_n(cfg: dict) -> int:
    n = _require(cfg, "n")
    if not isinstance(n, (int, float)) or int(n) != n or n < 1:
        raise ConfigError("n", f"must be a positive integer, got {n!r}")
    return int(n)


def parse_index(cfg: dict, n: int, default: int | None = None) -> int:
    i = cfg.get("index", default)
    if i is None:
        raise ConfigError("index", "missing required field")
    if not isinstance(i, (int, float)) or int(i) != i or not 1 <= i <= n:
        raise ConfigError("index", f"must be an integer in [1, {n}], got {i!r}")
    return int(i)


def parse_simulate(cfg: dict, seed: int) -> tuple[PnsgdConfig, np.ndarray]:
    section = _require(cfg, "simulate")
    if not isinstance(section, dict):
        raise ConfigError("simulate", "must be a mapping")
    n = int(_number(section, "n", "simulate"))
    d = int(_number(section, "d", "simulate"))
    radius = _number(section, "radius", "simulate")
    loss = _require(section, "loss", "simulate")
    replicas = int(section.get("replicas", 1))
    theta_star = section.get("theta_star")
    if theta_star is None or len(theta_star) != d:
        raise ConfigError("simulate.theta_star", f"must be a vector of length d={d}")
    theta_star = project_ball(np.asarray(theta_star, dtype=float), radius)
    noise = parse_noise(cfg)
    profile = parse_profile(cfg)
    try:
        pc = PnsgdConfig(
            n=n,
            d=d,
            noise=noise,
            profile=profile,
            radius=radius,
            loss_kind=loss,
            seed=seed,
            variant="shuffled",
            replicas=replicas,
        )
    except ValueError as exc:
        raise ConfigError("simulate", str(exc)) from exc
    return pc, theta_star


def config_hash(cfg: dict, seed: int) -> str:
    payload = json.dumps({"config": cfg, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()
