"""Imitative population dynamics.

The population share of the honest strategy evolves by a share-weighted
imitation map: next-round adoption probability is proportional to the current
share times the (shifted) expected payoff of each strategy. The module offers
a deterministic mean-field iteration, a stochastic agent-based counterpart,
and a bisection solver for the interior fixed point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import Belief, PayoffParams, ValidatedModel
from .payoffs import (
    ExpectedPayoffs,
    PivotalityRegime,
    conditional_payoffs,
    expected_payoffs,
    pivotality_regime,
    regime_from_counts,
)


class EquilibriumClass(Enum):
    """Terminal label of a trajectory (and of the analytic classifier)."""

    HONEST_STABLE = "HonestStable"
    BYZANTINE_STABLE = "ByzantineStable"
    POOLING_STABLE = "PoolingStable"
    FROZEN = "Frozen"
    NOT_CONVERGED = "NotConverged"


class DegenerateUpdate(RuntimeError):
    """Both shifted strategy weights vanished at an interior share; the
    imitation ratio is undefined and the population is stuck."""


@dataclass(frozen=True)
class UpdateOffset:
    """Constant added to both expected payoffs before the imitation ratio.

    The raw ratio is not a probability when expected payoffs go negative, so
    both are shifted by the same amount. The shift preserves fixed points
    (equal payoffs stay equal) and the drift direction (the sign of
    v_h - v_b), which is all the terminal classification depends on.
    """

    offset: float


def default_offset(payoffs: PayoffParams) -> UpdateOffset:
    # negation of the most negative conditional payoff (-check_cost - penalty),
    # so shifted weights are >= 0 in every regime and at every belief
    return UpdateOffset(payoffs.check_cost + payoffs.penalty)


def imitative_update(x: float, expected: ExpectedPayoffs, offset: UpdateOffset) -> float:
    """One step of the imitation map; exact stasis when the payoffs tie.

    Raises ValueError if the offset leaves a negative weight and
    DegenerateUpdate if both shifted weights are zero at interior x.
    """
    w_h = expected.v_h + offset.offset
    w_b = expected.v_b + offset.offset
    if w_h < 0.0 or w_b < 0.0:
        raise ValueError(
            f"offset {offset.offset} leaves a negative strategy weight (w_h={w_h}, w_b={w_b})"
        )
    num = x * w_h
    den = num + (1.0 - x) * w_b
    if den == 0.0:
        raise DegenerateUpdate(f"strategy weights vanish at x={x}")
    if expected.v_h == expected.v_b:
        # equal payoffs fix every point; return x untouched so that stasis
        # is exact rather than subject to rounding
        return x
    return num / den


@dataclass(frozen=True)
class PopulationState:
    """Snapshot of one round: share, regime, expected payoffs."""

    round: int
    honest_fraction: float
    regime: PivotalityRegime
    expected: ExpectedPayoffs


@dataclass(frozen=True)
class TerminalInfo:
    outcome: EquilibriumClass
    final_fraction: float
    rounds: int
    converged: bool
    frozen: bool


@dataclass(frozen=True)
class Trajectory:
    states: tuple[PopulationState, ...]
    terminal: TerminalInfo


@dataclass(frozen=True)
class AgentPopulation:
    """Explicit strategy labels for one committee; True marks an honest agent."""

    strategies: tuple[bool, ...]
    rng_seed: int = 0

    @property
    def size(self) -> int:
        return len(self.strategies)

    @property
    def honest_count(self) -> int:
        return sum(self.strategies)

    @property
    def honest_fraction(self) -> float:
        return self.honest_count / self.size

    @classmethod
    def from_fraction(cls, size: int, honest_fraction: float, rng_seed: int = 0) -> "AgentPopulation":
        count = initial_honest_count(size, honest_fraction)
        return cls(strategies=tuple(i < count for i in range(size)), rng_seed=rng_seed)


def initial_honest_count(size: int, honest_fraction: float) -> int:
    """Quantize a target share to a headcount, ties broken toward honest."""
    return min(size, int(math.floor(size * honest_fraction + 0.5)))


def _payoffs_tied(exp: ExpectedPayoffs, payoffs: PayoffParams, regime: PivotalityRegime, tol: float) -> bool:
    # A vanishing step only counts as an interior equilibrium when the
    # payoffs themselves are (near-)tied; a slow crawl toward a regime
    # boundary also has tiny steps but carries a macroscopic payoff gap.
    scale = conditional_payoffs(payoffs, regime).total_magnitude()
    return abs(exp.v_h - exp.v_b) <= tol * (1.0 + scale)


def _classify_state(
    x: float,
    prev_x: float | None,
    regime: PivotalityRegime,
    exp: ExpectedPayoffs,
    model: ValidatedModel,
    round_index: int,
) -> TerminalInfo | None:
    tol = model.convergence_tol
    if regime is PivotalityRegime.NEITHER_PIVOTAL:
        return TerminalInfo(EquilibriumClass.FROZEN, x, round_index, converged=False, frozen=True)
    if x >= 1.0 - tol:
        return TerminalInfo(EquilibriumClass.HONEST_STABLE, x, round_index, converged=True, frozen=False)
    if x <= tol:
        return TerminalInfo(EquilibriumClass.BYZANTINE_STABLE, x, round_index, converged=True, frozen=False)
    if prev_x is not None and abs(x - prev_x) < tol and _payoffs_tied(exp, model.payoffs, regime, tol):
        return TerminalInfo(EquilibriumClass.POOLING_STABLE, x, round_index, converged=True, frozen=False)
    return None


def simulate_mean_field(model: ValidatedModel, offset: UpdateOffset | None = None) -> Trajectory:
    """Iterate the mean-field imitation map from the initial share.

    The pivotality regime is recomputed every round, so trajectories that
    cross a threshold boundary keep evolving under the correct payoff table.
    Terminal classes: absorption near 0 or 1, a payoff-tied interior stall
    (pooling), a regime with no pivotal group (frozen), or round exhaustion.
    """
    if offset is None:
        offset = default_offset(model.payoffs)
    x = float(model.initial_honest_fraction)
    prev_x: float | None = None
    states: list[PopulationState] = []
    terminal: TerminalInfo | None = None
    for t in range(1, model.max_rounds + 1):
        regime = pivotality_regime(x, model.protocol)
        exp = expected_payoffs(model.payoffs, model.belief, x, regime)
        states.append(PopulationState(t, x, regime, exp))
        terminal = _classify_state(x, prev_x, regime, exp, model, t)
        if terminal is not None:
            break
        try:
            nxt = imitative_update(x, exp, offset)
        except DegenerateUpdate:
            terminal = TerminalInfo(EquilibriumClass.FROZEN, x, t, converged=False, frozen=True)
            break
        prev_x, x = x, nxt
    if terminal is None:
        last = states[-1].honest_fraction
        terminal = TerminalInfo(EquilibriumClass.NOT_CONVERGED, last, model.max_rounds, converged=False, frozen=False)
    return Trajectory(tuple(states), terminal)


def simulate_agents(model: ValidatedModel, offset: UpdateOffset | None = None) -> Trajectory:
    """Stochastic counterpart: a committee of N agents redraws strategies.

    Each round every agent independently adopts the honest strategy with the
    probability given by the imitation map at the previous round's share.
    Counts 0 and N are absorbing. The trajectory is reproducible bit-exactly
    from the model's rng_seed.
    """
    if offset is None:
        offset = default_offset(model.payoffs)
    n = model.protocol.committee_size
    rng = np.random.default_rng(model.rng_seed)
    count = initial_honest_count(n, model.initial_honest_fraction)
    prev_x: float | None = None
    states: list[PopulationState] = []
    terminal: TerminalInfo | None = None
    for t in range(1, model.max_rounds + 1):
        x = count / n
        regime = regime_from_counts(count, model.protocol)
        exp = expected_payoffs(model.payoffs, model.belief, x, regime)
        states.append(PopulationState(t, x, regime, exp))
        terminal = _classify_state(x, prev_x, regime, exp, model, t)
        if terminal is not None:
            break
        try:
            p = imitative_update(x, exp, offset)
        except DegenerateUpdate:
            terminal = TerminalInfo(EquilibriumClass.FROZEN, x, t, converged=False, frozen=True)
            break
        prev_x = x
        count = int(rng.binomial(n, p))
    if terminal is None:
        last = states[-1].honest_fraction
        terminal = TerminalInfo(EquilibriumClass.NOT_CONVERGED, last, model.max_rounds, converged=False, frozen=False)
    return Trajectory(tuple(states), terminal)


def solve_interior_fixed_point(payoffs: PayoffParams, belief: Belief, tol: float = 1e-12) -> float | None:
    """Bisection root of v_h - v_b on (0, 1) with both groups held pivotal.

    Returns None when the payoff difference has no sign change on the
    interval; full assortativity makes it vanish identically, so every share
    is a fixed point and no isolated root exists.
    """
    if belief.assortativity == 1.0:
        return None

    def diff(x: float) -> float:
        e = expected_payoffs(payoffs, belief, x, PivotalityRegime.BOTH_PIVOTAL)
        return e.v_h - e.v_b

    lo, hi = 0.0, 1.0
    f_lo, f_hi = diff(lo), diff(hi)
    # a zero at an endpoint is a boundary fixed point, not an interior root
    if f_lo == 0.0 or f_hi == 0.0 or (f_lo > 0.0) == (f_hi > 0.0):
        return None
    hi_positive = f_hi > 0.0
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = diff(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == hi_positive:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
