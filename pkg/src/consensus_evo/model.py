"""Domain parameters, validation, and the policy-ratio reparametrization.

All quantities live in abstract utility units per consensus round. A model is
fully described by the monetary primitives (PayoffParams), the committee rules
(ProtocolParams), the matching belief (Belief), and the initial population
state plus run controls (ModelConfig).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# Error codes attached to validation violations.
NON_POSITIVE_PARAMETER = "NonPositiveParameter"
THRESHOLD_OUT_OF_RANGE = "ThresholdOutOfRange"
FRACTION_OUT_OF_RANGE = "FractionOutOfRange"
REWARD_NOT_ABOVE_SEND_COST = "RewardNotAboveSendCost"

DEFAULT_MAX_ROUNDS = 10_000
DEFAULT_CONVERGENCE_TOL = 1e-9


@dataclass(frozen=True)
class PayoffParams:
    """Monetary primitives of one consensus round.

    reward: paid to a validator whose vote commits an accepted block.
    check_cost: cost of checking a proposal's validity.
    send_cost: cost of sending a vote message.
    penalty: loss to an honest validator when an invalid block is accepted.
    """

    reward: float
    check_cost: float
    send_cost: float
    penalty: float

    @property
    def benchmark_ordering(self) -> bool:
        """True iff reward > check_cost > send_cost > penalty."""
        return self.reward > self.check_cost > self.send_cost > self.penalty


@dataclass(frozen=True)
class ProtocolParams:
    """Committee size and the vote count needed to commit a block."""

    committee_size: int
    threshold: int

    @property
    def pivotality_rate(self) -> float:
        return self.threshold / self.committee_size


@dataclass(frozen=True)
class Belief:
    """Subjective probability of being matched with a same-strategy proposer.

    assortativity 0 is uniform random matching, 1 is full like-with-like.
    """

    assortativity: float


@dataclass(frozen=True)
class PolicyRatios:
    """Dimensionless policy knobs.

    alpha: reward / penalty.
    beta: send_cost / penalty.
    gamma: threshold / committee_size.
    """

    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class ModelConfig:
    payoffs: PayoffParams
    protocol: ProtocolParams
    belief: Belief
    initial_honest_fraction: float
    max_rounds: int = DEFAULT_MAX_ROUNDS
    convergence_tol: float = DEFAULT_CONVERGENCE_TOL
    rng_seed: int = 0


@dataclass(frozen=True)
class Violation:
    """One failed validation rule, naming the offending field."""

    field: str
    code: str
    message: str


@dataclass(frozen=True)
class ValidatedModel:
    """A ModelConfig that passed validate_model, plus any non-fatal warnings.

    Immutable after construction; safe to share read-only across workers.
    """

    config: ModelConfig
    warnings: tuple[str, ...] = ()

    @property
    def payoffs(self) -> PayoffParams:
        return self.config.payoffs

    @property
    def protocol(self) -> ProtocolParams:
        return self.config.protocol

    @property
    def belief(self) -> Belief:
        return self.config.belief

    @property
    def initial_honest_fraction(self) -> float:
        return self.config.initial_honest_fraction

    @property
    def max_rounds(self) -> int:
        return self.config.max_rounds

    @property
    def convergence_tol(self) -> float:
        return self.config.convergence_tol

    @property
    def rng_seed(self) -> int:
        return self.config.rng_seed

    @property
    def benchmark_ordering(self) -> bool:
        return self.config.payoffs.benchmark_ordering


def _positive_finite(value: float) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value) and value > 0


def validate_model(config: ModelConfig) -> ValidatedModel | list[Violation]:
    """Check every model invariant; return a ValidatedModel or the violations.

    Non-benchmark payoff orderings are accepted with a warning attached, since
    only reward > send_cost is structurally required (the interior fixed point
    otherwise divides by a non-positive quantity).
    """
    violations: list[Violation] = []
    p = config.payoffs
    for name in ("reward", "check_cost", "send_cost", "penalty"):
        value = getattr(p, name)
        if not _positive_finite(value):
            violations.append(
                Violation(name, NON_POSITIVE_PARAMETER, f"{name} must be a finite positive number, got {value!r}")
            )
    if _positive_finite(p.reward) and _positive_finite(p.send_cost) and not p.reward > p.send_cost:
        violations.append(
            Violation(
                "reward",
                REWARD_NOT_ABOVE_SEND_COST,
                f"reward ({p.reward}) must exceed send_cost ({p.send_cost})",
            )
        )

    proto = config.protocol
    n_ok = isinstance(proto.committee_size, int) and proto.committee_size >= 2
    if not n_ok:
        violations.append(
            Violation(
                "committee_size",
                NON_POSITIVE_PARAMETER,
                f"committee_size must be an integer >= 2, got {proto.committee_size!r}",
            )
        )
    if not isinstance(proto.threshold, int) or not 1 <= proto.threshold or (n_ok and proto.threshold > proto.committee_size):
        violations.append(
            Violation(
                "threshold",
                THRESHOLD_OUT_OF_RANGE,
                f"threshold must be an integer in [1, committee_size], got {proto.threshold!r} with committee_size {proto.committee_size!r}",
            )
        )

    m = config.belief.assortativity
    if not (isinstance(m, (int, float)) and math.isfinite(m) and 0.0 <= m <= 1.0):
        violations.append(
            Violation("assortativity", FRACTION_OUT_OF_RANGE, f"assortativity must lie in [0, 1], got {m!r}")
        )

    x1 = config.initial_honest_fraction
    if not (isinstance(x1, (int, float)) and math.isfinite(x1) and 0.0 <= x1 <= 1.0):
        violations.append(
            Violation(
                "initial_honest_fraction",
                FRACTION_OUT_OF_RANGE,
                f"initial_honest_fraction must lie in [0, 1], got {x1!r}",
            )
        )

    if not isinstance(config.max_rounds, int) or config.max_rounds < 1:
        violations.append(
            Violation("max_rounds", NON_POSITIVE_PARAMETER, f"max_rounds must be an integer >= 1, got {config.max_rounds!r}")
        )
    if not _positive_finite(config.convergence_tol):
        violations.append(
            Violation(
                "convergence_tol",
                NON_POSITIVE_PARAMETER,
                f"convergence_tol must be a finite positive number, got {config.convergence_tol!r}",
            )
        )

    if violations:
        return violations

    warnings: tuple[str, ...] = ()
    if not p.benchmark_ordering:
        warnings = (
            "payoffs deviate from the benchmark ordering reward > check_cost > send_cost > penalty; "
            "the equilibrium regions still apply but welfare interpretations may not",
        )
    return ValidatedModel(config=config, warnings=warnings)


def to_policy_ratios(payoffs: PayoffParams, protocol: ProtocolParams) -> PolicyRatios:
    """Reparametrize raw payoffs and committee rules into dimensionless ratios."""
    return PolicyRatios(
        alpha=payoffs.reward / payoffs.penalty,
        beta=payoffs.send_cost / payoffs.penalty,
        gamma=protocol.threshold / protocol.committee_size,
    )


def payoffs_from_ratios(alpha: float, beta: float, penalty: float, check_cost: float) -> PayoffParams:
    """Rebuild raw payoffs from (alpha, beta) given the penalty scale and check cost."""
    return PayoffParams(
        reward=alpha * penalty,
        check_cost=check_cost,
        send_cost=beta * penalty,
        penalty=penalty,
    )
