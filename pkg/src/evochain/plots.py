"""Figure rendering for verification and sweep reports.

Figures are a convenience layer next to the CSV/JSON outputs: the CLI writes
them alongside the delimited files unless asked not to.  Everything here is
headless (Agg backend) and file-based.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import SweepReport
from .chain import ChainFamily, CkReport

_RESIDUAL_FLOOR = 1e-18


def render_verify_figure(report: CkReport, chain: ChainFamily, path) -> None:
    """Residual scatter over the sampled triples, with thresholds marked."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    mids = report.triples[:, 1]
    vals = np.maximum(np.asarray(report.residuals, dtype=float), _RESIDUAL_FLOOR)
    ax.scatter(mids, vals, s=9, alpha=0.6, linewidths=0, label="relative residual")
    ax.axhline(report.tol, color="crimson", lw=1.0, ls="--", label=f"tolerance {report.tol:g}")
    for k, c in enumerate(chain.thresholds):
        ax.axvline(
            c, color="gray", lw=0.8, ls=":", label="entry switching time" if k == 0 else None
        )
    ax.set_yscale("log")
    ax.set_xlabel("intermediate time in the sampled triple")
    ax.set_ylabel("composition residual")
    status = "pass" if report.passed else "FAIL"
    ax.set_title(
        f"{report.chain_name}: {report.n_triples} triples, "
        f"max residual {report.max_residual:.3e} ({status})"
    )
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _grid_of(report: SweepReport, getter) -> np.ndarray:
    ns, nt = len(report.s_values), len(report.t_values)
    out = np.full((ns, nt), np.nan)
    for cell in report.cells:
        value = getter(cell)
        if value is not None:
            out[cell.i, cell.j] = float(value)
    return out


def render_sweep_figure(report: SweepReport, path) -> None:
    """Two-panel map of the sweep grid.

    Left: sign of the first discriminant (the quantity whose zero set carries
    the extra idempotents).  Right: idempotent count per cell.  Cells outside
    the analyzable region stay blank.
    """
    sign1 = _grid_of(report, lambda c: c.signs[0] if c.signs else None)
    counts = _grid_of(report, lambda c: c.idempotent_count)

    extent = (
        float(report.t_values[0]),
        float(report.t_values[-1]),
        float(report.s_values[0]),
        float(report.s_values[-1]),
    )
    fig, axes = plt.subplots(1, 2, figsize=(11.0, 4.6), sharey=True)

    im0 = axes[0].imshow(
        sign1,
        origin="lower",
        extent=extent,
        aspect="auto",
        cmap="coolwarm",
        vmin=-1,
        vmax=1,
    )
    axes[0].set_title("sign of discriminant 1")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("s")
    fig.colorbar(im0, ax=axes[0], ticks=(-1, 0, 1), shrink=0.85)

    im1 = axes[1].imshow(
        counts,
        origin="lower",
        extent=extent,
        aspect="auto",
        cmap="viridis",
    )
    axes[1].set_title("idempotent count")
    axes[1].set_xlabel("t")
    fig.colorbar(im1, ax=axes[1], shrink=0.85)

    n_cross = sum(len(v) for v in report.crossings.values())
    fig.suptitle(f"{report.chain_name}: {n_cross} crossing edges", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
