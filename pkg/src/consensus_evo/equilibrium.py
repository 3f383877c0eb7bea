"""Closed-form equilibrium regions, outcome evaluation, and policy sensitivities.

The analytic classifier predicts the terminal class of the dynamics from the
initial conditions alone; discrepancy_report audits it against the simulated
dynamics and annotates any disagreement with a suspected cause.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .dynamics import EquilibriumClass, UpdateOffset, simulate_mean_field
from .model import PayoffParams, ProtocolParams, ValidatedModel, payoffs_from_ratios, to_policy_ratios
from .payoffs import PivotalityRegime, expected_payoffs, pivotality_regime

DEFAULT_BOUNDARY_TOL = 1e-6

# finite-difference step for the sensitivity cross-checks
_FD_STEP = 1e-6


class BoundaryAmbiguous(ValueError):
    """The initial share sits within tolerance of a classification boundary.

    Raised instead of guessing: strict-versus-weak questions at the boundary
    are not decidable from a finite tolerance, so callers must widen or move
    their grid.
    """

    def __init__(self, x1: float, boundary_name: str, boundary_value: float):
        self.x1 = x1
        self.boundary_name = boundary_name
        self.boundary_value = boundary_value
        super().__init__(
            f"initial share {x1} lies within tolerance of the {boundary_name} boundary at {boundary_value}"
        )


def interior_fixed_point(payoffs: PayoffParams) -> float:
    """Initial share at which both strategies earn equal expected payoff.

    Computed from the raw payoffs and cross-checked against the equivalent
    (alpha, beta) ratio form; the two routes must agree to 1e-12. The value
    always exceeds 1/2 and the fixed point is repelling, so it separates the
    honest and Byzantine basins.
    """
    r, cs, k = payoffs.reward, payoffs.send_cost, payoffs.penalty
    if not r > cs:
        raise ValueError(f"interior fixed point undefined unless reward > send_cost (got {r} <= {cs})")
    raw = (r - cs + k) / (2.0 * (r - cs) + k)
    alpha = r / k
    beta = cs / k
    denom = 2.0 * alpha - 2.0 * beta + 1.0
    ratio_form = 0.5 + 0.5 / denom
    if math.isfinite(ratio_form) and abs(raw - ratio_form) > 1e-12:
        raise ArithmeticError(
            f"raw ({raw}) and ratio ({ratio_form}) forms of the interior fixed point disagree"
        )
    return raw


def classify_analytic(model: ValidatedModel, boundary_tol: float = DEFAULT_BOUNDARY_TOL) -> EquilibriumClass:
    """Predict the terminal class from the initial conditions alone.

    The initial pivotality regime decides everything except the both-pivotal
    case, where the side of the interior fixed point decides (a share within
    boundary_tol of the fixed point is the knife-edge pooling case, and full
    assortativity freezes every interior share into pooling).

    Raises BoundaryAmbiguous when x1 lies within boundary_tol of a pivotality
    boundary. Exact shares 0 and 1 are genuine absorbing states and are
    classified directly.
    """
    x1 = model.initial_honest_fraction
    if x1 == 1.0:
        return EquilibriumClass.HONEST_STABLE
    if x1 == 0.0:
        return EquilibriumClass.BYZANTINE_STABLE
    gamma = model.protocol.pivotality_rate
    for name, bound in (("honest-pivotality", gamma), ("byzantine-pivotality", 1.0 - gamma)):
        if abs(x1 - bound) <= boundary_tol:
            raise BoundaryAmbiguous(x1, name, bound)
    regime = pivotality_regime(x1, model.protocol)
    if regime is PivotalityRegime.NEITHER_PIVOTAL:
        return EquilibriumClass.FROZEN
    if regime is PivotalityRegime.HONEST_ONLY_PIVOTAL:
        return EquilibriumClass.HONEST_STABLE
    if regime is PivotalityRegime.BYZANTINE_ONLY_PIVOTAL:
        return EquilibriumClass.BYZANTINE_STABLE
    # both pivotal: under full assortativity every interior share is fixed
    if model.belief.assortativity == 1.0:
        return EquilibriumClass.POOLING_STABLE
    fixed_point = interior_fixed_point(model.payoffs)
    if abs(x1 - fixed_point) <= boundary_tol:
        return EquilibriumClass.POOLING_STABLE
    return EquilibriumClass.HONEST_STABLE if x1 > fixed_point else EquilibriumClass.BYZANTINE_STABLE


@dataclass(frozen=True)
class EvaluationReport:
    """Security verdicts and per-round honest welfare for a terminal class.

    case labels which entry condition applied: honest and Byzantine outcomes
    are contested when the opposing group was also pivotal at the start,
    which downgrades the immediate verdicts.
    """

    outcome: EquilibriumClass
    case: str
    immediate_safety: bool
    eventual_safety: bool
    immediate_liveness: bool
    eventual_liveness: bool
    eventual_validity: bool
    honest_agent_welfare: float


def pooling_welfare(payoffs: PayoffParams) -> float:
    """Per-round honest welfare at the interior fixed point (below optimal)."""
    r_net = payoffs.reward - payoffs.send_cost
    base = payoffs.reward - payoffs.check_cost - payoffs.send_cost
    return base - r_net * (r_net + payoffs.penalty) / (2.0 * r_net + payoffs.penalty)


def evaluate_equilibrium(outcome: EquilibriumClass, model: ValidatedModel) -> EvaluationReport:
    """Fill the five security booleans and the welfare for a terminal class.

    Immediate verdicts depend on which groups were pivotal at the initial
    share; eventual verdicts depend only on the terminal class. A frozen
    population never commits anything, so agreement holds vacuously while
    liveness and validity fail.
    """
    p = model.payoffs
    w_honest = p.reward - p.check_cost - p.send_cost
    if outcome is EquilibriumClass.NOT_CONVERGED:
        return EvaluationReport(outcome, "not-converged", False, False, False, False, False, math.nan)
    if outcome is EquilibriumClass.FROZEN:
        return EvaluationReport(outcome, "frozen", True, True, False, False, False, 0.0)
    regime0 = pivotality_regime(model.initial_honest_fraction, model.protocol)
    honest0 = regime0.honest_pivotal
    byzantine0 = regime0.byzantine_pivotal
    imm_safety = not byzantine0
    imm_liveness = honest0
    if outcome is EquilibriumClass.HONEST_STABLE:
        case = "honest-contested" if byzantine0 else "honest-uncontested"
        return EvaluationReport(outcome, case, imm_safety, True, imm_liveness, True, True, w_honest)
    if outcome is EquilibriumClass.BYZANTINE_STABLE:
        case = "byzantine-contested" if honest0 else "byzantine-uncontested"
        return EvaluationReport(outcome, case, imm_safety, False, imm_liveness, False, False, 0.0)
    return EvaluationReport(
        EquilibriumClass.POOLING_STABLE,
        "pooling",
        imm_safety,
        False,
        imm_liveness,
        True,
        False,
        pooling_welfare(p),
    )


def region_widths(payoffs: PayoffParams, gamma: float) -> dict[str, float]:
    """Lebesgue measure of each terminal region over the initial share.

    Widths are taken in the frame where both groups start pivotal: the honest
    region is (max(fixed_point, gamma), 1 - gamma], the Byzantine region is
    [gamma, min(fixed_point, 1 - gamma)), and the pooling band is the full
    assortativity case [gamma, 1 - gamma] (for partial assortativity the
    pooling set is the single fixed point, of measure zero).
    """
    fixed_point = interior_fixed_point(payoffs)
    return {
        "honest": max(0.0, (1.0 - gamma) - max(fixed_point, gamma)),
        "byzantine": max(0.0, min(fixed_point, 1.0 - gamma) - gamma),
        "pooling": max(0.0, 1.0 - 2.0 * gamma),
    }


@dataclass(frozen=True)
class SensitivityReport:
    """Signed sensitivities of the interior fixed point and the region widths.

    Derivative estimates are central finite differences over the raw-payoff
    route, cross-checked against the analytic derivatives of the ratio form.
    honest_boundary_only flags a threshold equal to the committee size, where
    the honest region degenerates to the single share 1.
    """

    threshold_share: float
    d_threshold_d_alpha: float
    d_threshold_d_alpha_analytic: float
    d_threshold_d_beta: float
    d_threshold_d_beta_analytic: float
    gamma: float
    gamma_step: float
    region_widths_now: dict[str, float]
    region_width_deltas: dict[str, float]
    honest_boundary_only: bool

    @property
    def alpha_sign(self) -> int:
        return -1 if self.d_threshold_d_alpha < 0 else (1 if self.d_threshold_d_alpha > 0 else 0)

    @property
    def beta_sign(self) -> int:
        return -1 if self.d_threshold_d_beta < 0 else (1 if self.d_threshold_d_beta > 0 else 0)


def _threshold_from_ratios(alpha: float, beta: float, penalty: float, check_cost: float) -> float:
    return interior_fixed_point(payoffs_from_ratios(alpha, beta, penalty, check_cost))


def policy_sensitivity(
    payoffs: PayoffParams,
    protocol: ProtocolParams,
    gamma_step: float = _FD_STEP,
) -> SensitivityReport:
    """How the interior fixed point and the equilibrium regions respond to
    the policy ratios.

    Raising reward/penalty lowers the fixed point (a larger honest basin);
    raising send_cost/penalty lifts it; raising threshold/committee_size
    shrinks every region. A finite-difference / analytic mismatch above 1e-6
    relative raises ArithmeticError.
    """
    ratios = to_policy_ratios(payoffs, protocol)
    a, b, g = ratios.alpha, ratios.beta, ratios.gamma
    h = _FD_STEP
    fd_alpha = (
        _threshold_from_ratios(a + h, b, payoffs.penalty, payoffs.check_cost)
        - _threshold_from_ratios(a - h, b, payoffs.penalty, payoffs.check_cost)
    ) / (2.0 * h)
    fd_beta = (
        _threshold_from_ratios(a, b + h, payoffs.penalty, payoffs.check_cost)
        - _threshold_from_ratios(a, b - h, payoffs.penalty, payoffs.check_cost)
    ) / (2.0 * h)
    denom = 2.0 * a - 2.0 * b + 1.0
    an_alpha = -1.0 / (denom * denom)
    an_beta = 1.0 / (denom * denom)
    for fd, an, name in ((fd_alpha, an_alpha, "alpha"), (fd_beta, an_beta, "beta")):
        if abs(fd - an) > 1e-6 * max(1.0, abs(an)):
            raise ArithmeticError(f"finite-difference d/d{name} ({fd}) disagrees with analytic ({an})")
    widths_now = region_widths(payoffs, g)
    widths_next = region_widths(payoffs, g + gamma_step)
    deltas = {k: widths_next[k] - widths_now[k] for k in widths_now}
    return SensitivityReport(
        threshold_share=interior_fixed_point(payoffs),
        d_threshold_d_alpha=fd_alpha,
        d_threshold_d_alpha_analytic=an_alpha,
        d_threshold_d_beta=fd_beta,
        d_threshold_d_beta_analytic=an_beta,
        gamma=g,
        gamma_step=gamma_step,
        region_widths_now=widths_now,
        region_width_deltas=deltas,
        honest_boundary_only=protocol.threshold == protocol.committee_size,
    )


@dataclass(frozen=True)
class DiscrepancyRow:
    """Analytic versus simulated class for one model; agree is None when the
    classifier declined (boundary-ambiguous initial share)."""

    index: int
    analytic: EquilibriumClass | None
    simulated: EquilibriumClass
    agree: bool | None
    cause: str | None


@dataclass(frozen=True)
class DiscrepancyReport:
    rows: tuple[DiscrepancyRow, ...]

    @property
    def comparable(self) -> tuple[DiscrepancyRow, ...]:
        return tuple(r for r in self.rows if r.agree is not None)

    @property
    def mismatches(self) -> tuple[DiscrepancyRow, ...]:
        return tuple(r for r in self.rows if r.agree is False)

    @property
    def agreement_rate(self) -> float:
        comparable = self.comparable
        if not comparable:
            return math.nan
        return sum(1 for r in comparable if r.agree) / len(comparable)


def _suspected_cause(model: ValidatedModel, analytic: EquilibriumClass, simulated: EquilibriumClass) -> str:
    """Best-effort diagnosis for an analytic/simulated disagreement.

    The closed-form regions assume the favored strategy keeps a positive
    payoff throughout its sole-pivotality stretch; parameter sets violating
    that drift the literal dynamics the other way or pin them against a
    regime boundary.
    """
    causes: list[str] = []
    gamma = model.protocol.pivotality_rate
    if analytic is EquilibriumClass.HONEST_STABLE:
        # the honest-only stretch starts just above 1 - gamma, where the
        # honest expected payoff is at its lowest for that regime
        entry = max(gamma, 1.0 - gamma)
        e = expected_payoffs(model.payoffs, model.belief, entry, PivotalityRegime.HONEST_ONLY_PIVOTAL)
        if e.v_h < 0.0:
            causes.append("honest-payoff-negative-in-sole-pivotal-stretch")
    if analytic is EquilibriumClass.BYZANTINE_STABLE:
        # mirror case: the Byzantine payoff is at its lowest at the top of
        # the Byzantine-only stretch, just below gamma
        entry = min(gamma, 1.0 - gamma)
        e = expected_payoffs(model.payoffs, model.belief, entry, PivotalityRegime.BYZANTINE_ONLY_PIVOTAL)
        if e.v_b < e.v_h:
            causes.append("byzantine-payoff-below-honest-in-sole-pivotal-stretch")
    if simulated is EquilibriumClass.NOT_CONVERGED:
        causes.append("oscillation-or-slow-drift-at-regime-boundary")
    if not causes:
        causes.append("unclassified")
    return "+".join(causes)


def discrepancy_report(
    models: Sequence[ValidatedModel],
    offset: UpdateOffset | None = None,
    boundary_tol: float = DEFAULT_BOUNDARY_TOL,
) -> DiscrepancyReport:
    """Run the analytic classifier and the mean-field dynamics side by side.

    Rows are keyed by model index so parallel callers can merge results
    deterministically. Models whose initial share falls inside the boundary
    band are recorded but excluded from the agreement rate.
    """
    rows: list[DiscrepancyRow] = []
    for i, model in enumerate(models):
        simulated = simulate_mean_field(model, offset).terminal.outcome
        try:
            analytic = classify_analytic(model, boundary_tol)
        except BoundaryAmbiguous as exc:
            rows.append(DiscrepancyRow(i, None, simulated, None, f"boundary-ambiguous: {exc}"))
            continue
        agree = analytic is simulated
        cause = None if agree else _suspected_cause(model, analytic, simulated)
        rows.append(DiscrepancyRow(i, analytic, simulated, agree, cause))
    return DiscrepancyReport(tuple(rows))
