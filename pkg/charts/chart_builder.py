"""Chart builder for rendering entropy traces and sweep summaries."""
import io
import math
from typing import Dict, List, Sequence

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _finite(xs: Sequence[float], ys: Sequence[float], transform=None):
    out_x, out_y = [], []
    for x, y in zip(xs, ys):
        if isinstance(y, float) and math.isfinite(y):
            out_x.append(x)
            out_y.append(transform(y) if transform else y)
    return out_x, out_y


def _new_figure(figsize) -> Figure:
    # Not registered with pyplot; safe to build from worker threads
    fig = Figure(figsize=figsize)
    FigureCanvasAgg(fig)
    return fig


def _render(fig: Figure) -> io.BytesIO:
    buf = io.BytesIO()
    try:
        fig.tight_layout()
        fig.savefig(buf, format='png', dpi=100, bbox_inches='tight')
    finally:
        fig.clear()
    buf.seek(0)
    return buf


def create_trace_chart(rows: List[Dict], title: str = "") -> io.BytesIO:
    """
    Three stacked panels against time: h density per volume, DLR residual, |entropy loss|.

    Returns:
        BytesIO with a PNG image
    """
    if not rows:
        raise ValueError("Empty trace for chart")

    volumes = sorted({row["volume"] for row in rows})
    largest = volumes[-1]
    fig = _new_figure((7, 9))
    axes = fig.subplots(3, 1, sharex=True)

    for volume in volumes:
        sub = [row for row in rows if row["volume"] == volume]
        xs, ys = _finite([r["t"] for r in sub], [r["h_density"] for r in sub])
        axes[0].plot(xs, ys, marker="o", markersize=3, label=f"|V|={volume}")
    axes[0].set_ylabel("h / |V|")
    axes[0].legend(loc="upper right", fontsize=8)

    top = [row for row in rows if row["volume"] == largest]
    times = [r["t"] for r in top]

    # Log axes need strictly positive values
    xs, ys = _finite(times, [r["dlr_residual"] for r in top], lambda v: max(v, 1e-16))
    axes[1].semilogy(xs, ys, color="tab:red", marker="o", markersize=3)
    axes[1].set_ylabel("DLR residual")

    xs, ys = _finite(times, [r["g_direct"] for r in top], lambda v: max(abs(v), 1e-16))
    axes[2].semilogy(xs, ys, color="tab:green", marker="o", markersize=3)
    axes[2].set_ylabel("|entropy loss|")
    axes[2].set_xlabel("t")

    if title:
        axes[0].set_title(title, fontsize=12, fontweight='bold')
    return _render(fig)


def create_sweep_chart(rows: List[Dict], parameter: str, value: str = "h_density") -> io.BytesIO:
    points = [(row[parameter], row[value]) for row in rows
              if isinstance(row.get(parameter), (int, float)) and isinstance(row.get(value), float)]
    if not points:
        raise ValueError("No numeric sweep points for chart")
    points.sort()

    fig = _new_figure((6, 4))
    ax = fig.subplots()
    xs, ys = _finite([p for p, _ in points], [v for _, v in points])
    ax.plot(xs, ys, marker="o")
    ax.set_xlabel(parameter)
    ax.set_ylabel(value)
    return _render(fig)


def save_chart(buf: io.BytesIO, path: str) -> str:
    with open(path, "wb") as f:
        f.write(buf.getvalue())
    return path
