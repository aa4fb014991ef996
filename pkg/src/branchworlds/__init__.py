"""Branching-worlds measure calculus.

Deterministic world trees with weighted branches and observer populations,
measure/effective-probability queries over them, the probability contexts in
which those ratios genuinely act like probabilities, and a seeded
single-world Monte Carlo oracle that cross-checks every analytic fraction
with frequencies.
"""

from .core import (
    Branch,
    Death,
    Decline,
    PersonKind,
    Population,
    Split,
    TimeStep,
    WorldState,
    advance_time,
    apply_death,
    apply_event,
    classical_ensemble,
    decline,
    single_branch,
    split,
    validate,
)
from .measure import (
    MeasureReport,
    Predicate,
    branch_probability,
    effective_probability,
    integral_measure,
    measure_of,
    measure_trajectory,
)
from .contexts import (
    DecisionProblem,
    Hypothesis,
    HypothesisSet,
    SemanticsResult,
    SurvivalModel,
    apply_semantics,
    bayes_update,
    caring_utility,
    causal_expected_utility,
    lifespan_observation_probability,
    measure_weighted_accuracy,
    reflection_distribution,
)
from .scenario import Scenario, Timeline, execute, parse_scenario, to_text
from .library import builtin_names, builtin_scenarios, builtin_text
from .runner import ReportRow, RunOptions, run, to_csv
from . import oracle

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "Death",
    "Decline",
    "DecisionProblem",
    "Hypothesis",
    "HypothesisSet",
    "MeasureReport",
    "PersonKind",
    "Population",
    "Predicate",
    "ReportRow",
    "RunOptions",
    "Scenario",
    "SemanticsResult",
    "Split",
    "SurvivalModel",
    "TimeStep",
    "Timeline",
    "WorldState",
    "advance_time",
    "apply_death",
    "apply_event",
    "apply_semantics",
    "bayes_update",
    "branch_probability",
    "builtin_names",
    "builtin_scenarios",
    "builtin_text",
    "caring_utility",
    "causal_expected_utility",
    "classical_ensemble",
    "decline",
    "effective_probability",
    "execute",
    "integral_measure",
    "lifespan_observation_probability",
    "measure_of",
    "measure_trajectory",
    "measure_weighted_accuracy",
    "oracle",
    "parse_scenario",
    "reflection_distribution",
    "run",
    "single_branch",
    "split",
    "to_csv",
    "to_text",
    "validate",
]
