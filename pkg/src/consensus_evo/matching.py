"""Monte Carlo oracle for the assortative matching belief.

Runs the matching mechanism agent by agent: with probability m an agent is
matched to a uniformly random OTHER agent of its own strategy, otherwise to a
uniformly random other agent. The empirical same-strategy frequencies are then
compared against the mean-field belief values and against finite-population
corrected targets that account for self-exclusion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AgentPopulation
from .model import Belief

Z_LIMIT = 3.0


@dataclass(frozen=True)
class MatchStats:
    """Tally of same-strategy matches per side over a full run."""

    rounds: int
    trials_honest: int
    trials_byzantine: int
    same_honest: int
    same_byzantine: int
    fallback_count: int

    @property
    def empirical(self) -> tuple[float, float, float, float]:
        """Observed (pi_hh, pi_hb, pi_bh, pi_bb); nan for an empty side."""
        if self.trials_honest > 0:
            hh = self.same_honest / self.trials_honest
            hb = 1.0 - hh
        else:
            hh = hb = math.nan
        if self.trials_byzantine > 0:
            bb = self.same_byzantine / self.trials_byzantine
            bh = 1.0 - bb
        else:
            bb = bh = math.nan
        return (hh, hb, bh, bb)

    @property
    def std_errors(self) -> tuple[float, float, float, float]:
        """Binomial standard errors of the four observed frequencies."""
        hh, hb, bh, bb = self.empirical
        se_h = math.sqrt(hh * (1.0 - hh) / self.trials_honest) if self.trials_honest > 0 else math.nan
        se_b = math.sqrt(bb * (1.0 - bb) / self.trials_byzantine) if self.trials_byzantine > 0 else math.nan
        return (se_h, se_h, se_b, se_b)


def run_matching(population: AgentPopulation, belief: Belief, rounds: int, seed: int) -> MatchStats:
    """Match every agent every round and tally same-strategy outcomes.

    An agent whose assortative branch fires without a same-strategy peer
    falls back to uniform matching; the fallback counter records how often.
    Self-matching is excluded in both branches. Fully deterministic given the
    seed.
    """
    strategies = np.asarray(population.strategies, dtype=bool)
    n = strategies.size
    if n < 2:
        raise ValueError(f"matching needs at least 2 agents, got {n}")
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    m = belief.assortativity
    rng = np.random.default_rng(seed)
    idx = np.arange(n)
    n_honest = int(strategies.sum())
    n_byzantine = n - n_honest
    # whether each agent has a same-strategy peer to draw in the m-branch
    has_peer = np.where(strategies, n_honest >= 2, n_byzantine >= 2)
    same_honest = 0
    same_byzantine = 0
    fallback = 0
    for _ in range(rounds):
        assort = rng.random(n) < m
        # uniform draw over the other n-1 agents, shared by the (1-m) branch
        # and the no-peer fallback
        j = rng.integers(0, n - 1, size=n)
        j = j + (j >= idx)
        uniform_same = strategies[j] == strategies
        # the m-branch partner is uniform over the agent's own group, so its
        # identity never changes the same-strategy tally; the draw itself is
        # not materialized
        outcome_same = np.where(assort & has_peer, True, uniform_same)
        fallback += int(np.count_nonzero(assort & ~has_peer))
        same_honest += int(np.count_nonzero(outcome_same & strategies))
        same_byzantine += int(np.count_nonzero(outcome_same & ~strategies))
    return MatchStats(
        rounds=rounds,
        trials_honest=n_honest * rounds,
        trials_byzantine=n_byzantine * rounds,
        same_honest=same_honest,
        same_byzantine=same_byzantine,
        fallback_count=fallback,
    )


@dataclass(frozen=True)
class DeviationCheck:
    """One empirical frequency against its mean-field and corrected targets."""

    name: str
    empirical: float
    mean_field_target: float
    corrected_target: float
    z_mean_field: float
    z_corrected: float
    trials: int
    passed: bool


@dataclass(frozen=True)
class DeviationReport:
    checks: tuple[DeviationCheck, ...]
    fallback_count: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _z_score(empirical: float, target: float, trials: int) -> float:
    if trials <= 0 or math.isnan(empirical):
        return math.nan
    se = math.sqrt(target * (1.0 - target) / trials)
    if se == 0.0:
        return 0.0 if empirical == target else math.inf
    return (empirical - target) / se


def matching_deviation(
    stats: MatchStats,
    belief: Belief,
    honest_fraction: float,
    population_size: int,
) -> DeviationReport:
    """z-scores of the observed frequencies against both target families.

    The mean-field targets take the population as infinite; the corrected
    targets use (count - 1) / (size - 1) for the uniform branch because an
    agent never meets itself. A check passes when the corrected z-score stays
    below 3 in magnitude; sides with no trials pass vacuously.
    """
    m = belief.assortativity
    x = honest_fraction
    n = population_size
    count_honest = round(n * x)
    count_byzantine = n - count_honest
    mf_hh = m + (1.0 - m) * x
    mf_bb = m + (1.0 - m) * (1.0 - x)
    corr_hh = m + (1.0 - m) * ((count_honest - 1) / (n - 1)) if count_honest >= 1 else math.nan
    corr_bb = m + (1.0 - m) * ((count_byzantine - 1) / (n - 1)) if count_byzantine >= 1 else math.nan
    emp_hh, emp_hb, emp_bh, emp_bb = stats.empirical

    def build(name: str, emp: float, mf: float, corr: float, trials: int) -> DeviationCheck:
        z_mf = _z_score(emp, mf, trials)
        z_corr = _z_score(emp, corr, trials)
        passed = trials == 0 or (not math.isnan(z_corr) and abs(z_corr) < Z_LIMIT)
        return DeviationCheck(name, emp, mf, corr, z_mf, z_corr, trials, passed)

    checks = (
        build("pi_hh", emp_hh, mf_hh, corr_hh, stats.trials_honest),
        build("pi_hb", emp_hb, 1.0 - mf_hh, 1.0 - corr_hh, stats.trials_honest),
        build("pi_bh", emp_bh, 1.0 - mf_bb, 1.0 - corr_bb, stats.trials_byzantine),
        build("pi_bb", emp_bb, mf_bb, corr_bb, stats.trials_byzantine),
    )
    return DeviationReport(checks=checks, fallback_count=stats.fallback_count)
