"""Evolutionary dynamics of honest and Byzantine strategies in committee-based consensus.

The package models a committee that repeatedly proposes, checks, and votes on
blocks. Validators imitate whichever strategy pays better under their matching
beliefs; the toolkit computes the resulting payoffs, iterates the population
dynamics, classifies the reachable equilibria in closed form, and audits the
two routes against each other.
"""
from .dynamics import (
    AgentPopulation,
    DegenerateUpdate,
    EquilibriumClass,
    PopulationState,
    TerminalInfo,
    Trajectory,
    UpdateOffset,
    default_offset,
    imitative_update,
    initial_honest_count,
    simulate_agents,
    simulate_mean_field,
    solve_interior_fixed_point,
)
from .equilibrium import (
    BoundaryAmbiguous,
    DiscrepancyReport,
    DiscrepancyRow,
    EvaluationReport,
    SensitivityReport,
    classify_analytic,
    discrepancy_report,
    evaluate_equilibrium,
    interior_fixed_point,
    policy_sensitivity,
    pooling_welfare,
    region_widths,
)
from .matching import DeviationCheck, DeviationReport, MatchStats, matching_deviation, run_matching
from .model import (
    Belief,
    ModelConfig,
    PayoffParams,
    PolicyRatios,
    ProtocolParams,
    ValidatedModel,
    Violation,
    payoffs_from_ratios,
    to_policy_ratios,
    validate_model,
)
from .payoffs import (
    ConditionalPayoffs,
    ExpectedPayoffs,
    MeetingProbabilities,
    PivotalityRegime,
    conditional_payoffs,
    expected_payoffs,
    meeting_probabilities,
    pivotality_regime,
    regime_from_counts,
)
from .sweep import (
    CSV_HEADER,
    SweepAxis,
    SweepConfigError,
    SweepResult,
    SweepRow,
    SweepSpec,
    run_sweep,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AgentPopulation",
    "Belief",
    "BoundaryAmbiguous",
    "ConditionalPayoffs",
    "CSV_HEADER",
    "DegenerateUpdate",
    "DeviationCheck",
    "DeviationReport",
    "DiscrepancyReport",
    "DiscrepancyRow",
    "EquilibriumClass",
    "EvaluationReport",
    "ExpectedPayoffs",
    "MatchStats",
    "MeetingProbabilities",
    "ModelConfig",
    "PayoffParams",
    "PivotalityRegime",
    "PolicyRatios",
    "PopulationState",
    "ProtocolParams",
    "SensitivityReport",
    "SweepAxis",
    "SweepConfigError",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "TerminalInfo",
    "Trajectory",
    "UpdateOffset",
    "ValidatedModel",
    "Violation",
    "classify_analytic",
    "conditional_payoffs",
    "default_offset",
    "discrepancy_report",
    "evaluate_equilibrium",
    "expected_payoffs",
    "imitative_update",
    "initial_honest_count",
    "interior_fixed_point",
    "matching_deviation",
    "meeting_probabilities",
    "payoffs_from_ratios",
    "pivotality_regime",
    "policy_sensitivity",
    "pooling_welfare",
    "region_widths",
    "regime_from_counts",
    "run_matching",
    "run_sweep",
    "simulate_agents",
    "simulate_mean_field",
    "solve_interior_fixed_point",
    "to_policy_ratios",
    "validate_model",
    "write_csv",
]
