"""Parameter sweeps over model grids with deterministic seeding and CSV output.

A sweep takes a base model, up to three axes, and a master seed. Cells are
enumerated in lexicographic axis order; per-cell RNG streams are derived from
(master seed, cell index, seed index) so parallel execution can never change
the output bytes. Ratio axes are realized against the base model: alpha varies
reward with the penalty fixed, beta varies send_cost, and gamma varies the
threshold (rounded to integer counts, duplicates removed).
"""
from __future__ import annotations

import itertools
import logging
import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import EquilibriumClass, Trajectory, simulate_agents, simulate_mean_field
from .equilibrium import BoundaryAmbiguous, classify_analytic, evaluate_equilibrium
from .model import ModelConfig, ValidatedModel, to_policy_ratios, validate_model

logger = logging.getLogger("consensus_evo.sweep")

CSV_HEADER = (
    "cell_index,x1,m,alpha,beta,gamma,analytic_class,simulated_class,terminal_x,rounds,"
    "welfare,immediate_safety,eventual_safety,immediate_liveness,eventual_liveness,"
    "eventual_validity,discrepancy"
)

AXIS_NAMES = ("x1", "m", "alpha", "beta", "gamma", "R", "c_check", "c_send", "kappa", "nu", "N")

BOUNDARY_AMBIGUOUS_LABEL = "BoundaryAmbiguous"


class SweepConfigError(ValueError):
    """The sweep specification cannot be realized into valid models."""


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter: evenly spaced values from lower to upper."""

    name: str
    lower: float
    upper: float
    steps: int

    def grid(self) -> list[float]:
        if self.name not in AXIS_NAMES:
            raise SweepConfigError(f"unknown axis {self.name!r}; choose from {AXIS_NAMES}")
        if self.steps < 2:
            raise SweepConfigError(f"axis {self.name!r} needs at least 2 steps, got {self.steps}")
        if not self.upper >= self.lower:
            raise SweepConfigError(f"axis {self.name!r} has upper < lower")
        span = self.upper - self.lower
        return [self.lower + span * i / (self.steps - 1) for i in range(self.steps)]


@dataclass(frozen=True)
class SweepSpec:
    base: ModelConfig
    axes: tuple[SweepAxis, ...] = ()
    master_seed: int = 0
    seeds_per_cell: int = 1
    agent_based: bool = False


@dataclass(frozen=True)
class RealizedAxis:
    """An axis translated into concrete parameter values.

    apply_key names the model field to replace; display_values are the
    coordinates to report (for a gamma axis these are the realized nu/N,
    which can differ from the requested grid after integer rounding).
    """

    label: str
    apply_key: str
    apply_values: tuple
    display_values: tuple[float, ...]


def _dedup(values: list[int]) -> list[int]:
    return list(dict.fromkeys(values))


def _realize_axis(axis: SweepAxis, base: ModelConfig) -> RealizedAxis:
    grid = axis.grid()
    name = axis.name
    if name in ("x1", "m", "R", "c_check", "c_send", "kappa"):
        return RealizedAxis(name, name, tuple(grid), tuple(grid))
    if name == "alpha":
        values = tuple(a * base.payoffs.penalty for a in grid)
        return RealizedAxis(name, "R", values, tuple(grid))
    if name == "beta":
        values = tuple(b * base.payoffs.penalty for b in grid)
        return RealizedAxis(name, "c_send", values, tuple(grid))
    if name == "gamma":
        n = base.protocol.committee_size
        nus = _dedup([int(round(g * n)) for g in grid])
        return RealizedAxis(name, "nu", tuple(nus), tuple(nu / n for nu in nus))
    if name == "nu":
        nus = _dedup([int(round(v)) for v in grid])
        return RealizedAxis(name, "nu", tuple(nus), tuple(float(v) for v in nus))
    if name == "N":
        sizes = _dedup([int(round(v)) for v in grid])
        return RealizedAxis(name, "N", tuple(sizes), tuple(float(v) for v in sizes))
    raise SweepConfigError(f"unknown axis {name!r}")


def _apply(config: ModelConfig, key: str, value) -> ModelConfig:
    if key == "x1":
        return replace(config, initial_honest_fraction=value)
    if key == "m":
        return replace(config, belief=replace(config.belief, assortativity=value))
    if key == "R":
        return replace(config, payoffs=replace(config.payoffs, reward=value))
    if key == "c_check":
        return replace(config, payoffs=replace(config.payoffs, check_cost=value))
    if key == "c_send":
        return replace(config, payoffs=replace(config.payoffs, send_cost=value))
    if key == "kappa":
        return replace(config, payoffs=replace(config.payoffs, penalty=value))
    if key == "nu":
        return replace(config, protocol=replace(config.protocol, threshold=value))
    if key == "N":
        return replace(config, protocol=replace(config.protocol, committee_size=value))
    raise SweepConfigError(f"unknown parameter key {key!r}")


def realize_axes(spec: SweepSpec) -> tuple[RealizedAxis, ...]:
    realized = tuple(_realize_axis(axis, spec.base) for axis in spec.axes)
    if len(realized) > 3:
        raise SweepConfigError(f"at most 3 axes supported, got {len(realized)}")
    keys = [r.apply_key for r in realized]
    if len(set(keys)) != len(keys):
        raise SweepConfigError(f"axes collide on the same model parameter: {keys}")
    if "N" in keys and any(r.label == "gamma" for r in realized):
        raise SweepConfigError("a gamma axis cannot be combined with an N axis; sweep nu directly")
    return realized


def build_cells(spec: SweepSpec) -> tuple[tuple[RealizedAxis, ...], list[ModelConfig]]:
    """Expand the grid into per-cell model configs, validating every cell."""
    realized = realize_axes(spec)
    cells: list[ModelConfig] = []
    for combo in itertools.product(*[r.apply_values for r in realized]):
        config = spec.base
        for axis, value in zip(realized, combo):
            config = _apply(config, axis.apply_key, value)
        result = validate_model(config)
        if isinstance(result, list):
            first = result[0]
            raise SweepConfigError(
                f"cell {len(cells)} is invalid: [{first.code}] {first.message}"
            )
        cells.append(config)
    return realized, cells


@dataclass(frozen=True)
class SweepRow:
    cell_index: int
    x1: float
    m: float
    alpha: float
    beta: float
    gamma: float
    analytic_class: str
    simulated_class: str
    terminal_x: float
    rounds: int
    welfare: float
    immediate_safety: bool
    eventual_safety: bool
    immediate_liveness: bool
    eventual_liveness: bool
    eventual_validity: bool
    discrepancy: bool


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    axes: tuple[RealizedAxis, ...]
    rows: tuple[SweepRow, ...]

    @property
    def mismatch_count(self) -> int:
        return sum(1 for r in self.rows if r.discrepancy)


def _cell_seed(master_seed: int, cell_index: int, seed_index: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(cell_index, seed_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_cell(model: ValidatedModel, agent_based: bool) -> Trajectory:
    return simulate_agents(model) if agent_based else simulate_mean_field(model)


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Execute every cell and assemble rows in cell order.

    In agent mode each cell is repeated seeds_per_cell times with derived
    seeds; mean-field cells are deterministic and run once.
    """
    if spec.seeds_per_cell < 1:
        raise SweepConfigError(f"seeds_per_cell must be >= 1, got {spec.seeds_per_cell}")
    realized, cells = build_cells(spec)
    repeats = spec.seeds_per_cell if spec.agent_based else 1
    rows: list[SweepRow] = []
    for cell_index, config in enumerate(cells):
        for seed_index in range(repeats):
            if spec.agent_based:
                config_run = replace(config, rng_seed=_cell_seed(spec.master_seed, cell_index, seed_index))
            else:
                config_run = config
            model = validate_model(config_run)
            assert isinstance(model, ValidatedModel)
            trajectory = _run_cell(model, spec.agent_based)
            simulated = trajectory.terminal.outcome
            try:
                analytic_label = classify_analytic(model).value
                discrepancy = analytic_label != simulated.value
            except BoundaryAmbiguous:
                analytic_label = BOUNDARY_AMBIGUOUS_LABEL
                discrepancy = False
            report = evaluate_equilibrium(simulated, model)
            ratios = to_policy_ratios(model.payoffs, model.protocol)
            rows.append(
                SweepRow(
                    cell_index=cell_index,
                    x1=model.initial_honest_fraction,
                    m=model.belief.assortativity,
                    alpha=ratios.alpha,
                    beta=ratios.beta,
                    gamma=ratios.gamma,
                    analytic_class=analytic_label,
                    simulated_class=simulated.value,
                    terminal_x=trajectory.terminal.final_fraction,
                    rounds=trajectory.terminal.rounds,
                    welfare=report.honest_agent_welfare,
                    immediate_safety=report.immediate_safety,
                    eventual_safety=report.eventual_safety,
                    immediate_liveness=report.immediate_liveness,
                    eventual_liveness=report.eventual_liveness,
                    eventual_validity=report.eventual_validity,
                    discrepancy=discrepancy,
                )
            )
    logger.info("sweep finished: %d rows, %d mismatches", len(rows), sum(1 for r in rows if r.discrepancy))
    return SweepResult(spec=spec, axes=realized, rows=tuple(rows))


def format_float(value: float) -> str:
    """Serialize a float with 12 significant digits (stable across platforms)."""
    return "%.12g" % value


def _format_bool(value: bool) -> str:
    return "true" if value else "false"


def render_csv(result: SweepResult) -> str:
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(
            ",".join(
                (
                    str(r.cell_index),
                    format_float(r.x1),
                    format_float(r.m),
                    format_float(r.alpha),
                    format_float(r.beta),
                    format_float(r.gamma),
                    r.analytic_class,
                    r.simulated_class,
                    format_float(r.terminal_x),
                    str(r.rounds),
                    format_float(r.welfare),
                    _format_bool(r.immediate_safety),
                    _format_bool(r.eventual_safety),
                    _format_bool(r.immediate_liveness),
                    _format_bool(r.eventual_liveness),
                    _format_bool(r.eventual_validity),
                    _format_bool(r.discrepancy),
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(result: SweepResult, path: str) -> None:
    """Write the result atomically: compose next to the target, then rename."""
    data = render_csv(result).encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".sweep-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
