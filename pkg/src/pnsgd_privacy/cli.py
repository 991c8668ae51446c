"""Command-line surface: accounting, calibration, sweeps, composition, simulation.

Every command reads one declarative YAML config, writes a deterministic
machine-readable payload (JSON or CSV) and, when an output path is given,
a `.manifest.json` sidecar recording the invocation.  Exit codes: 0
success, 1 numerical failure, 2 invalid config.
"""

import csv
import functools
import io
import json
import math
import os
import sys
from datetime import datetime, timezone

import click
import numpy as np

from . import __version__
from . import composition as comp
from . import privacy_bounds as pb
from .config import (
    config_hash,
    load_config,
    parse_epsilon,
    parse_geometry,
    parse_index,
    parse_n,
    parse_noise,
    parse_profile,
    parse_schedule,
    parse_simulate,
)
from .errors import ConfigError, DomainError, NonconvergenceError, QuadratureError
from .simulator import generate_synthetic, paired_losses


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _noise_kind(cfg: dict) -> str:
    kind = cfg.get("noise_kind") or (cfg.get("noise") or {}).get("kind")
    if kind not in ("gaussian", "laplace"):
        raise ConfigError("noise_kind", "must be 'gaussian' or 'laplace'")
    return kind


def _resolve_seed(cfg: dict, seed) -> int:
    if seed is not None:
        return int(seed)
    return int(cfg.get("seed", 0))


def _csv_payload(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _write_output(payload: str, out: str | None, cfg: dict, seed: int) -> None:
    if out is None:
        click.echo(payload, nl=False)
        return
    with open(out, "w") as fh:
        fh.write(payload)
    manifest = {
        "command": " ".join(sys.argv),
        "config_hash": config_hash(cfg, seed),
        "seed": seed,
        "artifact_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with open(out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _fig_path(out: str | None, command: str) -> str:
    if out is None:
        return command + ".png"
    stem, _ = os.path.splitext(out)
    return stem + ".png"


def _handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, DomainError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except (NonconvergenceError, QuadratureError, FloatingPointError, OverflowError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _common_options(func):
    func = click.option("--config", "config_path", required=True, type=click.Path())(func)
    func = click.option("--seed", type=int, default=None, help="overrides the config seed")(func)
    func = click.option("--out", type=click.Path(), default=None)(func)
    func = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None)(func)
    func = click.option("--workers", type=int, default=1)(func)
    return func


@click.group()
@click.version_option(__version__)
def main():
    """Privacy accounting and simulation for shuffled / online PNSGD."""


@main.command()
@_common_options
@_handle_errors
def account(config_path, seed, out, fmt, workers):
    """Per-index, randomly-stopped and shuffled (epsilon, delta) guarantees."""
    cfg = load_config(config_path)
    seed = _resolve_seed(cfg, seed)
    epsilon = parse_epsilon(cfg)
    n = parse_n(cfg)
    noise = parse_noise(cfg)
    profile = parse_profile(cfg)
    geom = parse_geometry(cfg)
    consts = pb.ab_constants(noise, profile, geom, epsilon)
    report = {
        "epsilon": epsilon,
        "n": n,
        "noise_kind": noise.kind,
        "noise_scale": noise.scale,
        "A": consts.A,
        "B": consts.B,
        "shuffled_delta": pb.shuffled_delta(consts, n),
    }
    if "index" in cfg:
        i = parse_index(cfg, n)
        report["index"] = i
        report["per_index_delta"] = pb.per_index_delta(consts, n, i)
        report["randomly_stopped_delta"] = pb.randomly_stopped_delta(consts, n, i)
    if fmt == "csv":
        payload = _csv_payload(["key", "value"], [[k, v] for k, v in report.items()])
    else:
        payload = json.dumps(report, indent=2) + "\n"
    for key in ("shuffled_delta", "per_index_delta", "randomly_stopped_delta"):
        if key in report:
            click.echo(f"{key.replace('_', ' ')}: (eps={epsilon:g}, delta={report[key]:.6e})", err=True)
    _write_output(payload, out, cfg, seed)


@main.command()
@_common_options
@_handle_errors
def calibrate(config_path, seed, out, fmt, workers):
    """Noise schedules v(n) / sigma(n) and their limiting delta values."""
    cfg = load_config(config_path)
    seed = _resolve_seed(cfg, seed)
    epsilon = parse_epsilon(cfg)
    profile = parse_profile(cfg)
    geom = parse_geometry(cfg)
    sched = parse_schedule(cfg)
    kind = _noise_kind(cfg)

    if sched.mode == "fixed":
        n = parse_n(cfg)
        if kind == "laplace":
            scale = pb.fixed_laplace_scale(n, sched, profile, geom)
            dstar = pb.delta_star_fixed_laplace(epsilon, sched.C1)
        else:
            scale = pb.fixed_gaussian_scale(n, sched, profile, geom)
            dstar = pb.delta_star_fixed_gaussian(epsilon, sched.C1)
        report = {
            "mode": "fixed",
            "noise_kind": kind,
            "n": n,
            "scale": scale,
            "delta_star": dstar,
            "delta_n": pb.shuffled_delta_fixed_noise(n, epsilon, sched, profile, geom, kind),
        }
        rows = [[n, scale]]
    else:
        n = parse_n(cfg)
        i = parse_index(cfg, n)
        indices = cfg.get("indices") or sorted({i, *np.unique(np.geomspace(1, n, 25).astype(int)).tolist()})
        rows = [[int(j), pb.online_scale(int(j), sched, profile, geom, kind)] for j in indices]
        upper = pb.online_delta_limit_upper(i, epsilon, sched, profile, geom, kind)
        lower = pb.online_delta_limit_lower(i, epsilon, sched, profile, geom, kind)
        report = {
            "mode": "online",
            "noise_kind": kind,
            "index": i,
            "delta_limit_upper": upper,
            "delta_limit_lower": lower,
            "bracket_relative_gap": (upper - lower) / upper if upper > 0 else 0.0,
            "scales": {int(j): s for j, s in rows},
        }
        click.echo(f"delta limit bracket: [{lower:.6e}, {upper:.6e}]", err=True)

    if fmt == "csv":
        payload = _csv_payload(["index", "scale"], rows)
    else:
        payload = json.dumps(report, indent=2) + "\n"
    _write_output(payload, out, cfg, seed)


_FIGURES = {
    "laplace-fixed": ("laplace", "fixed"),
    "gaussian-fixed": ("gaussian", "fixed"),
    "laplace-online": ("laplace", "online"),
    "gaussian-online": ("gaussian", "online"),
}


@main.command()
@_common_options
@click.option("--plot", is_flag=True, help="render a convergence figure next to the output")
@_handle_errors
def sweep(config_path, seed, out, fmt, workers, plot):
    """Reproduce a delta(n) convergence dataset over a geometric n-grid."""
    cfg = load_config(config_path)
    seed = _resolve_seed(cfg, seed)
    section = cfg.get("sweep")
    if not isinstance(section, dict):
        raise ConfigError("sweep", "missing sweep section")
    figure = section.get("figure")
    if figure not in _FIGURES:
        raise ConfigError("sweep.figure", f"must be one of {sorted(_FIGURES)}, got {figure!r}")
    grid = [int(v) for v in section.get("n_grid") or []]
    if not grid:
        raise ConfigError("sweep.n_grid", "grid must be a nonempty list of sizes")
    kind, mode = _FIGURES[figure]
    epsilon = parse_epsilon(cfg)
    profile = parse_profile(cfg)
    geom = parse_geometry(cfg)
    sched = parse_schedule(cfg)
    if sched.mode != mode:
        raise ConfigError("schedule.mode", f"figure {figure} requires mode={mode!r}")

    rows = []
    if mode == "fixed":
        dstar = (
            pb.delta_star_fixed_laplace(epsilon, sched.C1)
            if kind == "laplace"
            else pb.delta_star_fixed_gaussian(epsilon, sched.C1)
        )
        rate_label = "n*(delta-delta_star)" if kind == "laplace" else "log(n)*(delta-delta_star)"
        for n in grid:
            scale = (
                pb.fixed_laplace_scale(n, sched, profile, geom)
                if kind == "laplace"
                else pb.fixed_gaussian_scale(n, sched, profile, geom)
            )
            delta = pb.shuffled_delta_fixed_noise(n, epsilon, sched, profile, geom, kind)
            rate = (n if kind == "laplace" else math.log(n)) * (delta - dstar)
            rows.append(
                {"n": n, "scale": scale, "delta": delta, "delta_star": dstar,
                 "rate": rate, "rate_label": rate_label}
            )
        header = ["n", "scale", "delta", "delta_star", "rate"]
    else:
        i = parse_index(cfg, min(grid))
        upper = pb.online_delta_limit_upper(i, epsilon, sched, profile, geom, kind)
        lower = pb.online_delta_limit_lower(i, epsilon, sched, profile, geom, kind)
        rate_label = "log(n)*(delta-delta_star)"
        for n in grid:
            scale = pb.online_scale(n, sched, profile, geom, kind)
            delta = pb.online_delta_finite(n, i, epsilon, sched, profile, geom, kind)
            rows.append(
                {"n": n, "scale": scale, "delta": delta, "delta_star": upper,
                 "bracket_lower": lower, "bracket_upper": upper,
                 "rate": math.log(n) * (delta - upper), "rate_label": rate_label}
            )
        header = ["n", "scale", "delta", "delta_star", "bracket_lower", "bracket_upper", "rate"]

    if fmt == "json":
        payload = json.dumps([{k: r[k] for k in header} for r in rows], indent=2) + "\n"
    else:
        payload = _csv_payload(header, [[r[k] for k in header] for r in rows])
    _write_output(payload, out, cfg, seed)
    if plot:
        from .plotting import plot_sweep

        plot_sweep(rows, figure, _fig_path(out, "sweep"))


@main.command()
@_common_options
@_handle_errors
def compose(config_path, seed, out, fmt, workers):
    """Multi-epoch accounting through the RDP or GDP currency."""
    cfg = load_config(config_path)
    seed = _resolve_seed(cfg, seed)
    section = cfg.get("compose")
    if not isinstance(section, dict):
        raise ConfigError("compose", "missing compose section")
    epochs = section.get("epochs")
    if not isinstance(epochs, int) or epochs < 1:
        raise ConfigError("compose.epochs", "must be a positive integer")
    method = section.get("method")

    if "per_epoch" in section:
        pe = section["per_epoch"]
        per_epoch = pb.PrivacyBudget(epsilon=float(pe["epsilon"]), delta=float(pe["delta"]))
    else:
        epsilon = parse_epsilon(cfg)
        profile = parse_profile(cfg)
        geom = parse_geometry(cfg)
        sched = parse_schedule(cfg)
        delta = pb.shuffled_delta_fixed_noise(
            parse_n(cfg), epsilon, sched, profile, geom, _noise_kind(cfg)
        )
        per_epoch = pb.PrivacyBudget(epsilon=epsilon, delta=delta)

    if method == "rdp":
        alpha = section.get("alpha")
        delta_target = section.get("delta_target")
        if alpha == "sweep" or alpha is None:
            best_alpha, result = comp.rdp_alpha_sweep(per_epoch, epochs, float(delta_target))
            result.diagnostics["alpha_minimizer"] = best_alpha
        else:
            result = comp.compose_epochs(
                per_epoch, epochs, "rdp", alpha=float(alpha), delta_target=float(delta_target)
            )
    elif method == "gdp":
        result = comp.compose_epochs(
            per_epoch, epochs, "gdp", epsilon_target=float(section.get("epsilon_target"))
        )
    else:
        raise ConfigError("compose.method", f"must be 'rdp' or 'gdp', got {method!r}")

    report = {
        "per_epoch": {"epsilon": per_epoch.epsilon, "delta": per_epoch.delta},
        "epochs": epochs,
        "final": {"epsilon": result.budget.epsilon, "delta": result.budget.delta},
        "diagnostics": result.diagnostics,
    }
    if fmt == "csv":
        flat = {
            "per_epoch_epsilon": per_epoch.epsilon,
            "per_epoch_delta": per_epoch.delta,
            "epochs": epochs,
            "final_epsilon": result.budget.epsilon,
            "final_delta": result.budget.delta,
        }
        payload = _csv_payload(["key", "value"], [[k, v] for k, v in flat.items()])
    else:
        payload = json.dumps(report, indent=2) + "\n"
    click.echo(
        f"after {epochs} epochs: (eps={result.budget.epsilon:.6g}, delta={result.budget.delta:.6e})",
        err=True,
    )
    _write_output(payload, out, cfg, seed)


@main.command()
@_common_options
@click.option("--plot", is_flag=True, help="render a loss-distribution figure next to the output")
@click.option("--data", "data_path", type=click.Path(), default=None,
              help="CSV dataset (d feature columns then the response), overrides synthetic data")
@_handle_errors
def simulate(config_path, seed, out, fmt, workers, plot, data_path):
    """Paired shuffled vs randomly-stopped PNSGD replicas."""
    cfg = load_config(config_path)
    seed = _resolve_seed(cfg, seed)
    pc, theta_star = parse_simulate(cfg, seed)
    data_path = data_path or (cfg.get("simulate") or {}).get("data")
    if data_path:
        raw = np.loadtxt(data_path, delimiter=",", ndmin=2)
        if raw.shape != (pc.n, pc.d + 1):
            raise ConfigError("simulate.data", f"expected shape {(pc.n, pc.d + 1)}, got {raw.shape}")
        data = (np.ascontiguousarray(raw[:, : pc.d]), np.ascontiguousarray(raw[:, pc.d]))
    else:
        data = generate_synthetic(pc.loss_kind, pc.n, pc.d, theta_star, seed)

    losses = paired_losses(pc, data, workers=workers)
    rows = [[str(r), float(losses[r, 0]), float(losses[r, 1])] for r in range(pc.replicas)]
    if pc.replicas > 1:
        rows.append(["mean", float(losses[:, 0].mean()), float(losses[:, 1].mean())])
        rows.append(["std", float(losses[:, 0].std(ddof=1)), float(losses[:, 1].std(ddof=1))])
    else:
        rows.append(["mean", float(losses[:, 0].mean()), float(losses[:, 1].mean())])
    header = ["replica", "shuffled_loss", "randomly_stopped_loss"]
    if fmt == "json":
        payload = json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    else:
        payload = _csv_payload(header, rows)
    _write_output(payload, out, cfg, seed)
    if plot:
        from .plotting import plot_simulate

        plot_simulate(losses, pc.loss_kind, _fig_path(out, "simulate"))


if __name__ == "__main__":
    main()
