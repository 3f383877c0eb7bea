"""Pivotality regimes, per-match payoff tables, and belief-weighted expected payoffs.

A strategy group is pivotal when its headcount alone can clear the vote
threshold. The regime (which groups are pivotal) selects the conditional
payoff table; the matching belief then mixes the table into per-strategy
expected payoffs.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import Belief, PayoffParams, ProtocolParams

# Comparison slack so that mean-field pivotality at representable fractions
# k/N agrees with exact integer counting (e.g. 3 * (1/3) falls a few ulp
# short of 1 in binary).
_COUNT_EPS = 1e-12


class PivotalityRegime(Enum):
    BOTH_PIVOTAL = "BothPivotal"
    HONEST_ONLY_PIVOTAL = "HonestOnlyPivotal"
    BYZANTINE_ONLY_PIVOTAL = "ByzantineOnlyPivotal"
    NEITHER_PIVOTAL = "NeitherPivotal"

    @property
    def honest_pivotal(self) -> bool:
        return self in (PivotalityRegime.BOTH_PIVOTAL, PivotalityRegime.HONEST_ONLY_PIVOTAL)

    @property
    def byzantine_pivotal(self) -> bool:
        return self in (PivotalityRegime.BOTH_PIVOTAL, PivotalityRegime.BYZANTINE_ONLY_PIVOTAL)


def _regime_from_flags(honest: bool, byzantine: bool) -> PivotalityRegime:
    if honest and byzantine:
        return PivotalityRegime.BOTH_PIVOTAL
    if honest:
        return PivotalityRegime.HONEST_ONLY_PIVOTAL
    if byzantine:
        return PivotalityRegime.BYZANTINE_ONLY_PIVOTAL
    return PivotalityRegime.NEITHER_PIVOTAL


def pivotality_regime(honest_fraction: float, protocol: ProtocolParams) -> PivotalityRegime:
    """Which strategy groups can clear the vote threshold on their own.

    A group with count >= threshold is pivotal (weak inequality). The
    mean-field fraction is compared with a tiny slack so that x = k/N decides
    exactly like the integer count k.
    """
    n = protocol.committee_size
    nu = protocol.threshold
    slack = _COUNT_EPS * max(1.0, float(nu))
    honest = n * honest_fraction >= nu - slack
    byzantine = n * (1.0 - honest_fraction) >= nu - slack
    return _regime_from_flags(honest, byzantine)


def regime_from_counts(honest_count: int, protocol: ProtocolParams) -> PivotalityRegime:
    """Integer-count version used by the agent-based path."""
    nu = protocol.threshold
    honest = honest_count >= nu
    byzantine = (protocol.committee_size - honest_count) >= nu
    return _regime_from_flags(honest, byzantine)


@dataclass(frozen=True)
class ConditionalPayoffs:
    """Validator payoff by (own strategy, proposer strategy): HH, HB, BH, BB."""

    v_hh: float
    v_hb: float
    v_bh: float
    v_bb: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.v_hh, self.v_hb, self.v_bh, self.v_bb)

    def total_magnitude(self) -> float:
        return abs(self.v_hh) + abs(self.v_hb) + abs(self.v_bh) + abs(self.v_bb)


def conditional_payoffs(payoffs: PayoffParams, regime: PivotalityRegime) -> ConditionalPayoffs:
    """Per-match payoff table for the given pivotality regime.

    When both groups are pivotal every proposal is decided by like-minded
    voters; when only one group is pivotal the other side's proposals die and
    cost their supporters nothing beyond the checks already paid; when
    neither is pivotal nothing commits and every payoff is zero.
    """
    r = payoffs.reward
    cc = payoffs.check_cost
    cs = payoffs.send_cost
    k = payoffs.penalty
    if regime is PivotalityRegime.BOTH_PIVOTAL:
        return ConditionalPayoffs(r - cc - cs, -cc - k, -cc, r - cc - cs)
    if regime is PivotalityRegime.HONEST_ONLY_PIVOTAL:
        return ConditionalPayoffs(r - cc - cs, -cc, 0.0, 0.0)
    if regime is PivotalityRegime.BYZANTINE_ONLY_PIVOTAL:
        return ConditionalPayoffs(0.0, -k, -cc, r - cc - cs)
    return ConditionalPayoffs(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class MeetingProbabilities:
    """Subjective probability of meeting a proposer of each strategy."""

    pi_hh: float
    pi_hb: float
    pi_bh: float
    pi_bb: float


def meeting_probabilities(belief: Belief, honest_fraction: float) -> MeetingProbabilities:
    """Belief-weighted meeting odds: with probability m the proposer shares
    one's strategy, otherwise it is drawn from the population at random."""
    m = belief.assortativity
    x = honest_fraction
    return MeetingProbabilities(
        pi_hh=m + (1.0 - m) * x,
        pi_hb=(1.0 - m) * (1.0 - x),
        pi_bh=(1.0 - m) * x,
        pi_bb=1.0 - (1.0 - m) * x,
    )


@dataclass(frozen=True)
class ExpectedPayoffs:
    """Expected one-round payoff for an honest and a Byzantine validator."""

    v_h: float
    v_b: float


def expected_payoffs(
    payoffs: PayoffParams,
    belief: Belief,
    honest_fraction: float,
    regime: PivotalityRegime,
) -> ExpectedPayoffs:
    """Mix the regime's conditional payoffs with the meeting probabilities.

    Proposers earn the same expected payoff as validators of their own
    strategy, so no separate proposer bookkeeping is needed.
    """
    pi = meeting_probabilities(belief, honest_fraction)
    c = conditional_payoffs(payoffs, regime)
    v_h = pi.pi_hh * c.v_hh + pi.pi_hb * c.v_hb
    v_b = pi.pi_bh * c.v_bh + pi.pi_bb * c.v_bb
    return ExpectedPayoffs(v_h=v_h, v_b=v_b)
