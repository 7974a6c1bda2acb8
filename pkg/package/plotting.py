from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.axes import Axes
from matplotlib.figure import Figure

from package.ellipsoid import Ellipsoid
from package.results import MethodResult
from package.tracking import TrackMetrics

BOUNDARY_POINTS = 256

# Fixed ids and no timestamp so equal inputs give byte-identical files
matplotlib.rcParams["svg.hashsalt"] = "ellipsoid-fusion"
matplotlib.rcParams["svg.fonttype"] = "none"
matplotlib.rcParams["path.simplify"] = False


def setup_plot(title: str | None = None) -> tuple[Figure, Axes]:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    if title is not None:
        fig.suptitle(title)
    return fig, ax


def save_svg(fig: Figure, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def draw_ellipsoid(ax: Axes, e: Ellipsoid, label: str, **kwargs):
    """Boundary as a closed polyline through the projection onto the first two coordinates"""
    points = e.project().boundary(BOUNDARY_POINTS) if e.dimension >= 2 else None
    if points is None:
        lo, hi = float(e.center[0] - e.shape[0, 0] ** 0.5), float(e.center[0] + e.shape[0, 0] ** 0.5)
        ax.plot([lo, hi], [0.0, 0.0], label=label, **kwargs)
        return
    ax.plot(points[:, 0], points[:, 1], label=label, **kwargs)


def plot_ellipsoids(
    members: Sequence[Ellipsoid], results: Sequence[MethodResult], path: Path, title: str | None = None
):
    fig, ax = setup_plot(title)
    for i, e in enumerate(members):
        draw_ellipsoid(ax, e, f"E{i + 1}", color="0.5", linewidth=1.0, linestyle="--")
    for r in results:
        draw_ellipsoid(ax, r.ellipsoid, r.method, linewidth=1.5)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.legend(loc="best", fontsize="small")
    save_svg(fig, path)


def plot_metric(metrics: TrackMetrics, kind: str, path: Path):
    """One line per series of the per-step RMSE or mean log-volume"""
    fig, ax = setup_plot("RMSE per step" if kind == "rmse" else "Mean log volume per step")
    steps = list(range(1, metrics.steps + 1))
    for name in metrics.series:
        ax.plot(steps, metrics.column(kind, name), label=name, linewidth=1.2)
    ax.set_xlabel("step")
    ax.set_ylabel("rmse" if kind == "rmse" else "logdet")
    ax.grid(True, linewidth=0.3)
    ax.legend(loc="best", fontsize="small")
    save_svg(fig, path)
