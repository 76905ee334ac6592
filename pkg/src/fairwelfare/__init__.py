"""Optimal randomized decision policies under two competing fairness lenses.

The toolkit solves, compares, and stress-tests two designer problems over
finite populations: maximizing accuracy subject to a statistical fairness
constraint (equalized odds and friends), and maximizing a concave social
aggregate of group utilities. It ships exact LP and projected-gradient
solvers, an exhaustive grid oracle for verification, constructions of
populations where the two designers provably disagree (and agree), and a
scenario-file driven CLI.
"""

from .constraints import (
    CONSTRAINT_KINDS,
    FairnessConstraint,
    LinearConstraintSystem,
    constraint_rows,
    satisfies,
    violation,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    DomainError,
    FairWelfareError,
    ScenarioError,
    SolverError,
    UndefinedConditionalError,
    UnsupportedMeasureError,
)
from .experiments import (
    AuditReport,
    ComparisonReport,
    ConstrainedDesigner,
    DivergenceReport,
    Example1Report,
    Example1Scenario,
    SweepReport,
    WelfareDesigner,
    audit_policy,
    build_agreement_population,
    build_example1,
    compare_designers,
    construct_divergent_population,
    default_alphabets,
    disagreement_sweep,
    run_example1,
)
from .model import (
    Alphabets,
    DiscreteDistribution,
    JointDistribution,
    Policy,
    PopulationDistribution,
    condition_on_group,
    conditional_decision_distribution,
    induce_joint,
    marginal,
    tv_distance,
)
from .objectives import (
    ConstraintIndicator,
    JensenGap,
    PayoffTable,
    PhiFunction,
    certainty_equivalent,
    certainty_equivalent_of_utilities,
    expected_payoff,
    generalized_objective,
    group_utilities,
    group_utility,
    jensen_gap,
    social_welfare,
)
from .scenario import (
    ScenarioFile,
    bundled_scenario,
    bundled_scenario_text,
    parse_policy_file,
    parse_scenario,
    serialize_report,
)
from .solvers import (
    PenalizedAccuracyObjective,
    SolveResult,
    SolveStatus,
    SolverConfig,
    WelfareObjective,
    divergence_threshold,
    grid_oracle,
    solve_constrained,
    solve_social_welfare,
)

__version__ = "0.1.0"
