"""Figure rendering for the CLI report paths.

Figures are written to files next to the delimited output; no interactive
backend is ever required.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_sweep(rows: list[dict], figure_id: str, path: str) -> None:
    """Convergence plot: delta(n) against its limit, with the noise scale."""
    n = np.array([r["n"] for r in rows], dtype=float)
    delta = np.array([r["delta"] for r in rows])
    dstar = np.array([r["delta_star"] for r in rows])
    scale = np.array([r["scale"] for r in rows])

    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax.loglog(n, delta, "k.-", label="delta(n)")
    ax.loglog(n, dstar, "r--", label="limit")
    if "bracket_lower" in rows[0]:
        lower = np.array([r["bracket_lower"] for r in rows])
        ax.loglog(n, lower, "r:", label="lower limit")
    axs = ax.twinx()
    axs.loglog(n, scale, "b-", alpha=0.6, label="noise scale")
    axs.set_ylabel("noise scale", color="b")
    ax.set_xlabel("n")
    ax.set_ylabel("delta")
    ax.set_title(figure_id)
    ax.legend(loc="best", fontsize=8)

    rate = np.array([r["rate"] for r in rows])
    ax2.semilogx(n, rate, "k.-")
    ax2.set_xlabel("n")
    ax2.set_ylabel(rows[0]["rate_label"] if "rate_label" in rows[0] else "rate")
    ax2.set_title("convergence rate diagnostic")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_simulate(losses: np.ndarray, loss_kind: str, path: str) -> None:
    """Replica loss distributions for the two PNSGD variants."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.boxplot(
        [losses[:, 0], losses[:, 1]],
        tick_labels=["shuffled", "randomly stopped"],
    )
    ax.set_ylabel("final %s loss" % ("squared" if loss_kind == "linear" else "log"))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
