"""Log-log convergence figures for hdiv-plus."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.axes import Axes  # noqa: E402

from ..models import StudyResult  # noqa: E402

_KIND_LABELS = {
    "flux": r"$\|\sigma - \sigma_h\|_{L^2}$",
    "pot": r"$\|u - u_h\|_{L^2}$",
    "div": r"$\|\nabla\cdot(\sigma - \sigma_h)\|_{L^2}$",
}


def _slope_triangle(ax: Axes, h: np.ndarray, errors: np.ndarray, order: float) -> None:
    """Draw a reference triangle of the given slope below the finest segment."""
    x0, x1 = h[-1], h[-2]
    y0 = errors[-1] * 0.5
    y1 = y0 * (x1 / x0) ** order
    color = ax.lines[-1].get_color()
    ax.plot([x0, x1, x1, x0], [y0, y0, y1, y0], color=color, lw=0.8, ls=":")
    ax.annotate(
        f"{order:g}",
        xy=(x1, np.sqrt(y0 * y1)),
        xytext=(3, 0),
        textcoords="offset points",
        fontsize=8,
        color=color,
        va="center",
    )


def plot_convergence(
    results: Sequence[StudyResult],
    kind: str,
    expected: Mapping[int, float],
    path: str | Path,
) -> Path:
    """Write one SVG with an error curve per enrichment level.

    Args:
        results: Study results sharing mesh family, space family and k.
        kind: Error kind, one of "flux", "pot", "div".
        expected: Expected slope per enrichment n for the reference triangles.
        path: Output file.

    Returns:
        The written path.
    """
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    for result in results:
        h = np.asarray(result.spacings)
        errors = np.asarray(result.series(kind))
        if h.size == 0:
            continue
        ax.loglog(h, errors, marker="o", lw=1.2, label=result.config.label())
        if h.size >= 2 and np.all(errors > 0.0) and result.config.n in expected:
            _slope_triangle(ax, h, errors, expected[result.config.n])

    ax.set_xlabel("h")
    ax.set_ylabel(_KIND_LABELS.get(kind, kind))
    ax.grid(True, which="both", alpha=0.3)
    if ax.lines:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
