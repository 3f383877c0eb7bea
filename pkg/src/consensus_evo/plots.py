"""Figure rendering for the CLI report paths.

matplotlib is imported lazily inside the render functions so the analysis
modules stay free of plotting dependencies; only commands that actually write
figures pay for the import.
"""
from __future__ import annotations

from .dynamics import Trajectory
from .sweep import SweepResult

CLASS_COLORS = {
    "HonestStable": "#1b9e77",
    "ByzantineStable": "#d95f02",
    "PoolingStable": "#7570b3",
    "Frozen": "#666666",
    "NotConverged": "#e7298a",
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_trajectory(trajectory: Trajectory, path: str) -> None:
    """Line chart of the honest share per round, annotated with the terminal class."""
    plt = _pyplot()
    rounds = [s.round for s in trajectory.states]
    shares = [s.honest_fraction for s in trajectory.states]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    color = CLASS_COLORS.get(trajectory.terminal.outcome.value, "#333333")
    ax.plot(rounds, shares, marker=".", markersize=3, linewidth=1.2, color=color)
    ax.set_xlabel("round")
    ax.set_ylabel("honest fraction")
    ax.set_ylim(-0.03, 1.03)
    ax.grid(True, alpha=0.3)
    terminal = trajectory.terminal
    ax.set_title(f"{terminal.outcome.value} after {terminal.rounds} rounds (final x = {terminal.final_fraction:.6g})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _first_rows_per_cell(result: SweepResult):
    seen: set[int] = set()
    rows = []
    for row in result.rows:
        if row.cell_index not in seen:
            seen.add(row.cell_index)
            rows.append(row)
    return rows


def render_region_map(result: SweepResult, path: str) -> None:
    """Scatter of the simulated class over the first one or two sweep axes.

    Agent-mode repeats are collapsed to the first seed of each cell; with no
    axes the map is a single point.
    """
    plt = _pyplot()
    rows = _first_rows_per_cell(result)
    axes = result.axes
    lengths = [len(a.apply_values) for a in axes]

    def coords(cell_index: int) -> list[float]:
        out = []
        remainder = cell_index
        for pos in range(len(lengths)):
            stride = 1
            for later in lengths[pos + 1 :]:
                stride *= later
            idx = remainder // stride
            remainder = remainder % stride
            out.append(axes[pos].display_values[idx])
        return out

    fig, ax = plt.subplots(figsize=(7.0, 5.5))
    xs: dict[str, list[float]] = {}
    ys: dict[str, list[float]] = {}
    for row in rows:
        c = coords(row.cell_index)
        x = c[0] if len(c) >= 1 else 0.0
        y = c[1] if len(c) >= 2 else 0.0
        xs.setdefault(row.simulated_class, []).append(x)
        ys.setdefault(row.simulated_class, []).append(y)
    for label in sorted(xs):
        ax.scatter(
            xs[label],
            ys[label],
            s=14,
            marker="s",
            color=CLASS_COLORS.get(label, "#333333"),
            label=label,
            linewidths=0,
        )
    ax.set_xlabel(axes[0].label if len(axes) >= 1 else "cell")
    ax.set_ylabel(axes[1].label if len(axes) >= 2 else "")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("simulated terminal class")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
