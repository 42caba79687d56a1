"""Static SVG emission for fields, tracks, and fit curves.

Every plot is written with empty date metadata so identical runs produce
identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

__all__ = ["save_heatmap_svg", "save_lines_svg"]

_SVG_METADATA = {"Date": None}


def save_heatmap_svg(field, path, title=None, max_rows=800) -> None:
    """Heatmap of a field (space horizontal, time upward).

    Long records are strided down to ``max_rows`` rows so files stay small.
    """
    values = np.asarray(getattr(field, "values", field), dtype=float)
    stride = max(1, int(np.ceil(values.shape[0] / max_rows)))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.imshow(values[::stride], aspect="auto", origin="lower", cmap="inferno",
              interpolation="nearest")
    ax.set_xlabel("space (px)")
    ax.set_ylabel(f"time row / {stride}" if stride > 1 else "time row")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def save_lines_svg(path, x, series, title=None, xlabel="t", ylabel="value") -> None:
    """Line plot of one or more named series against a shared x axis."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, y in series.items():
        ax.plot(np.asarray(x), np.asarray(y), label=label, linewidth=1.0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(path), format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
