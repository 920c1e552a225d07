"""Figures for fidelity landscapes and line cuts.

Everything renders off-screen (Agg) and SVG output is made reproducible by a
fixed hash salt and an empty date field.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .scan import INFIDELITY_FLOOR, CrossSection, FidelityMap  # noqa: E402

STYLE = {
    "svg.hashsalt": "ucpg",
    "svg.fonttype": "path",
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "figure.dpi": 100,
}

LINESTYLES = ("-", "--", "-.", ":")


def _save(fig, path, description: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    metadata = None
    if fmt == "svg":
        metadata = {"Date": None, "Creator": "ucpg", "Description": description or None}
    elif fmt == "pdf":
        metadata = {"CreationDate": None, "Creator": "ucpg"}
    elif fmt == "png":
        metadata = {"Software": "ucpg"}
    fig.savefig(path, format=fmt, metadata=metadata, bbox_inches="tight")
    plt.close(fig)
    return path


def _levels_m(levels: Sequence[float]) -> list:
    return sorted({int(round(-math.log10(v))) for v in levels})


def draw_map(ax, fmap: FidelityMap, levels: Sequence[float] = (1e-2, 1e-3, 1e-4), title: Optional[str] = None):
    """Filled ``-log10(1 - F)`` bands with labelled iso-infidelity lines ``m``."""
    ms = _levels_m(levels)
    eps, delta = fmap.grid.eps_a, fmap.grid.delta
    top = ms[-1] + 2
    score = np.clip(-np.log10(np.maximum(fmap.infidelity, INFIDELITY_FLOOR)), 0.0, top).T
    cf = ax.contourf(eps, delta, score, levels=np.arange(0, top + 1), cmap="viridis")
    cs = ax.contour(eps, delta, score, levels=ms, colors="white", linewidths=0.8)
    if cs.allsegs and any(len(s) for s in cs.allsegs):
        ax.clabel(cs, fmt=lambda v: f"{v:.0f}", fontsize=8)
    ax.set_xlabel(r"$\epsilon_A$")
    ax.set_ylabel(r"$\delta$")
    ax.set_title(title if title is not None else fmap.sequence_id)
    return cf


def plot_fidelity_map(fmap: FidelityMap, path, levels: Sequence[float] = (1e-2, 1e-3, 1e-4),
                      title: Optional[str] = None, description: str = "") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.0))
        cf = draw_map(ax, fmap, levels, title)
        fig.colorbar(cf, ax=ax, label=r"$-\log_{10}(1-F)$")
        return _save(fig, path, description)


def plot_map_panels(maps: Sequence[FidelityMap], path, levels: Sequence[float] = (1e-2, 1e-3, 1e-4),
                    description: str = "") -> Path:
    n = len(maps)
    cols = min(n, 2)
    rows = math.ceil(n / cols)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 3.8 * rows), squeeze=False)
        for ax, fmap in zip(axes.flat, maps):
            draw_map(ax, fmap, levels)
        for ax in list(axes.flat)[n:]:
            ax.set_visible(False)
        fig.tight_layout()
        return _save(fig, path, description)


def plot_cross_sections(cuts: Sequence[CrossSection], path, thresholds: Sequence[float] = (1e-4,),
                        description: str = "") -> Path:
    """Infidelity cuts on a log scale, one panel per axis present in ``cuts``."""
    axes_present = [a for a in ("eps_a", "delta") if any(c.axis == a for c in cuts)]
    xlabels = {"eps_a": r"$\epsilon_A$ ($\delta = 0$)", "delta": r"$\delta$ ($\epsilon_A = 0$)"}
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(axes_present), figsize=(4.2 * len(axes_present), 3.4), squeeze=False)
        for ax, axis in zip(axes.flat, axes_present):
            for k, cut in enumerate(c for c in cuts if c.axis == axis):
                ax.semilogy(cut.coords, np.maximum(cut.infidelity, INFIDELITY_FLOOR),
                            LINESTYLES[k % len(LINESTYLES)], label=cut.label)
            for t in thresholds:
                ax.axhline(t, color="0.6", lw=0.6)
            ax.set_xlabel(xlabels[axis])
            ax.set_ylabel(r"$1 - F$")
            ax.set_ylim(INFIDELITY_FLOOR * 10, 1.5)
            ax.legend(fontsize=8, loc="lower right")
        fig.tight_layout()
        return _save(fig, path, description)
