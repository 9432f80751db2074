"""PNG renderings of protocol results, written next to the CSV output.

Uses the object-oriented matplotlib API with an Agg canvas, so nothing here
touches global pyplot state or needs a display.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    FigureCanvasAgg(fig)
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    return path


def protocol_figure(result, path, title: str = "") -> Path:
    """Visibility, clock phase and (for projected readouts) success probability vs omega*t."""
    projected = result.protocol != "ramsey"
    rows = 3 if projected else 2
    fig = Figure(figsize=(6.4, 2.2 * rows), layout="constrained")
    axes = fig.subplots(rows, 1, sharex=True)
    t = result.omega_t
    axes[0].plot(t, result.visibility, lw=1.2)
    axes[0].set_ylabel("visibility")
    axes[1].plot(t, result.phase_unwrapped, lw=1.2, color="tab:red")
    fit = result.summary.fit
    if fit is not None:
        axes[1].plot(t, fit.intercept + fit.slope * t, lw=0.8, ls="--", color="k", label="linear fit")
        axes[1].legend(loc="best", fontsize="small")
    axes[1].set_ylabel("clock phase (rad)")
    if projected:
        axes[2].plot(t, result.success_prob, lw=1.2, color="tab:green")
        axes[2].set_ylabel("success prob.")
    axes[-1].set_xlabel(r"$\omega t$")
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def sweep_figure(rows, path, x: str, quantity: str) -> Path:
    """One line of ``quantity`` against grid variable ``x`` per combination of the others."""
    groups: dict = {}
    for row in rows:
        if row["quantity"] != quantity:
            continue
        key = tuple((k, v) for k, v in row["inputs"].items() if k != x)
        groups.setdefault(key, []).append((row["inputs"][x], row["value"]))
    fig = Figure(figsize=(6.4, 4.0), layout="constrained")
    ax = fig.subplots()
    for key, pts in groups.items():
        pts = np.array(sorted(pts))
        label = ", ".join(f"{k}={v:g}" for k, v in key) or None
        ax.plot(pts[:, 0], pts[:, 1], marker="o", ms=3, lw=1, label=label)
    ax.set_xlabel(x)
    ax.set_ylabel(quantity)
    if 1 < len(groups) <= 8:
        ax.legend(fontsize="small")
    return _save(fig, path)
