"""Canned studies: the two-group showcase, divergence construction, and sweeps.

The central objects are the two designer types. A constrained designer
maximizes expected accuracy subject to a statistical fairness constraint;
a welfare designer maximizes a concave aggregate of group utilities. The
functions here build populations on which the two provably part ways (or
provably agree), solve both problems, and report the comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constraints import FairnessConstraint, CONSTRAINT_KINDS, violation
from .errors import CapacityError, ConfigurationError, DomainError, SolverError
from .model import (
    Alphabets,
    JointDistribution,
    Policy,
    PopulationDistribution,
    induce_joint,
    tv_distance,
)
from .objectives import (
    PayoffTable,
    PhiFunction,
    jensen_gap,
    social_welfare,
    welfare_of_utilities,
)
from .solvers import (
    PenalizedAccuracyObjective,
    SolveResult,
    SolverConfig,
    WelfareObjective,
    designated_decisions,
    divergence_threshold,
    grid_oracle,
    solve_constrained,
    solve_social_welfare,
)

#: Induced joints further apart than this (in total variation) count as
#: genuine disagreement rather than solver noise.
DIVERGENCE_TV_THRESHOLD = 1e-6


@dataclass(frozen=True)
class ConstrainedDesigner:
    """Accuracy maximizer subject to a fairness constraint."""

    accuracy: PayoffTable
    constraint: FairnessConstraint

    def solve(self, mu: PopulationDistribution, cfg: SolverConfig) -> SolveResult:
        return solve_constrained(mu, self.accuracy, self.constraint, cfg)


@dataclass(frozen=True)
class WelfareDesigner:
    """Maximizer of the concave aggregate of group utilities."""

    utility: PayoffTable
    phi: PhiFunction

    def solve(self, mu: PopulationDistribution, cfg: SolverConfig) -> SolveResult:
        return solve_social_welfare(mu, self.utility, self.phi, cfg)


def binary_alphabets() -> Alphabets:
    labels = ("0", "1")
    return Alphabets(labels, labels, labels, labels)


def build_example1(delta: float) -> PopulationDistribution:
    """Two equal groups with opposed treatment needs, observed only by group.

    A fraction ``delta`` of group 1 needs treatment while the same fraction
    of group 0 does not; the only covariate is group membership itself.
    Requires delta strictly inside (1/2, 1).
    """
    if not (0.5 < delta < 1.0):
        raise ConfigurationError(f"delta must lie strictly inside (1/2, 1), got {delta!r}")
    alphabets = binary_alphabets()
    entries = {}
    for j, other in (("1", "0"), ("0", "1")):
        entries[(j, j, j)] = 0.5 * delta
        entries[(j, other, j)] = 0.5 * (1.0 - delta)
    return PopulationDistribution.from_entries(alphabets, entries)


def build_agreement_population(delta: float) -> PopulationDistribution:
    """Two equal groups that both mostly need treatment.

    Here treating everyone maximizes welfare and is group-blind, so the two
    designers agree; a counterpoint to ``build_example1``.
    """
    if not (0.5 < delta < 1.0):
        raise ConfigurationError(f"delta must lie strictly inside (1/2, 1), got {delta!r}")
    alphabets = binary_alphabets()
    entries = {}
    for g in ("0", "1"):
        entries[(g, "1", g)] = 0.5 * delta
        entries[(g, "0", g)] = 0.5 * (1.0 - delta)
    return PopulationDistribution.from_entries(alphabets, entries)


@dataclass(frozen=True)
class Example1Scenario:
    """Configuration for the two-group showcase run."""

    delta: float
    phi: PhiFunction
    accuracy: Optional[PayoffTable] = None
    epsilon: float = 0.0

    def __post_init__(self):
        if not (0.5 < self.delta < 1.0):
            raise ConfigurationError(
                f"delta must lie strictly inside (1/2, 1), got {self.delta!r}"
            )


@dataclass(frozen=True)
class Example1Report:
    delta: float
    epsilon: float
    phi: PhiFunction
    sw_policy: Policy
    co_policy: Policy
    sw_welfare: float
    co_welfare: float
    co_welfare_closed_form: float
    jensen_bound: float
    gap: float
    violation: float
    co_accuracy: float


def example1_constrained_welfare(delta: float, phi: PhiFunction, q0: float, q1: float) -> float:
    """Welfare of the showcase population at treat probabilities (q0, q1).

    With the match-indicator utility the group utilities are
    q1*delta + (1-q1)*(1-delta) and (1-q0)*delta + q0*(1-delta).
    """
    u1 = q1 * delta + (1.0 - q1) * (1.0 - delta)
    u0 = (1.0 - q0) * delta + q0 * (1.0 - delta)
    return welfare_of_utilities(np.array([0.5, 0.5]), np.array([u1, u0]), phi)


def _treat_probabilities(policy: Policy) -> tuple[float, float]:
    """(q0, q1) for binary two-group policies, q_g = a(treat | x=g)."""
    d_pos, _ = designated_decisions(policy.alphabets.decisions)
    di = policy.alphabets.index("D", d_pos)
    return float(policy.row("0")[di]), float(policy.row("1")[di])


def run_example1(scenario: Example1Scenario, cfg: SolverConfig = SolverConfig()) -> Example1Report:
    """Solve both designers on the showcase population and compare.

    The welfare optimum treats group 1 and not group 0; any policy passing
    equalized odds must treat both groups at a common rate, which caps the
    attainable welfare at the transform's value at 1/2.
    """
    mu = build_example1(scenario.delta)
    u = PayoffTable.match_indicator(mu.alphabets)
    accuracy = scenario.accuracy if scenario.accuracy is not None else u
    constraint = FairnessConstraint("equalized_odds", epsilon=scenario.epsilon)

    sw = solve_social_welfare(mu, u, scenario.phi, cfg)
    co = solve_constrained(mu, accuracy, constraint, cfg)

    co_welfare = social_welfare(induce_joint(mu, co.policy), u, scenario.phi)
    q0, q1 = _treat_probabilities(co.policy)
    closed_form = example1_constrained_welfare(scenario.delta, scenario.phi, q0, q1)
    if scenario.phi.is_rawls:
        bound = 0.5
    else:
        bound = float(scenario.phi.value(0.5))
    return Example1Report(
        delta=scenario.delta,
        epsilon=scenario.epsilon,
        phi=scenario.phi,
        sw_policy=sw.policy,
        co_policy=co.policy,
        sw_welfare=sw.objective_value,
        co_welfare=co_welfare,
        co_welfare_closed_form=closed_form,
        jensen_bound=bound,
        gap=sw.objective_value - co_welfare,
        violation=violation(induce_joint(mu, sw.policy), constraint),
        co_accuracy=co.objective_value,
    )


@dataclass(frozen=True)
class DivergenceReport:
    mu_constructed: PopulationDistribution
    delta_threshold: float
    delta_used: float
    witness_types: tuple[str, str]
    sw_policy: Policy
    co_policy: Policy
    sw_welfare_at_sw: float
    sw_welfare_at_co: float
    constraint_violation_of_sw_policy: float
    tv_distance: float
    diverged: bool


def _find_witness_pair(u: PayoffTable) -> tuple[str, str]:
    """First type pair (y0, y1), in alphabet order, where treatment helps y1
    and hurts y0 under the designated decision labels."""
    d_pos, d_neg = designated_decisions(u.decisions)
    for ya in u.types:
        for yb in u.types:
            if ya == yb:
                continue
            gain = u.value(d_pos, yb) - u.value(d_neg, yb)
            harm = u.value(d_neg, ya) - u.value(d_pos, ya)
            if gain > 0.0 and harm > 0.0:
                return ya, yb
    raise ConfigurationError(
        "utility table is trivial: every type ranks the two decisions the same way"
    )


def construct_divergent_population(
    u: PayoffTable,
    constraint: FairnessConstraint,
    phi: PhiFunction,
    margin: float = 0.05,
    cfg: SolverConfig = SolverConfig(),
) -> DivergenceReport:
    """Build a two-group population on which the two designers must disagree.

    Concentrates each group on its witness type strongly enough (threshold
    plus ``margin``, capped inside the unit interval) that the unique
    welfare optimum treats exactly one group, while any policy admissible
    to the constrained designer treats both groups near-identically.
    Raises a ConfigurationError for trivial utilities and a SolverError if
    the solved optima contradict the construction (which would indicate a
    solver or threshold bug).
    """
    if margin <= 0.0:
        raise ConfigurationError("margin must be positive")
    d_pos, _ = designated_decisions(u.decisions)
    y0, y1 = _find_witness_pair(u)
    threshold = divergence_threshold(u, y0, y1)
    delta = min(threshold + margin, 0.5 * (threshold + 1.0))

    groups = ("0", "1")
    alphabets = Alphabets(groups, u.types, groups, u.decisions)
    entries = {}
    for j, yj in (("0", y0), ("1", y1)):
        other = y1 if yj == y0 else y0
        entries[(j, yj, j)] = 0.5 * delta
        entries[(j, other, j)] = 0.5 * (1.0 - delta)
    mu = PopulationDistribution.from_entries(alphabets, entries)

    sw = solve_social_welfare(mu, u, phi, cfg)
    co = solve_constrained(mu, u, constraint, cfg)

    di = alphabets.index("D", d_pos)
    q0, q1 = float(sw.policy.row("0")[di]), float(sw.policy.row("1")[di])
    if abs(q1 - 1.0) > 1e-6 or abs(q0) > 1e-6:
        raise SolverError(
            f"internal consistency failure: welfare optimum should treat exactly "
            f"group 1, got treat probabilities ({q0!r}, {q1!r}) at delta={delta!r}"
        )
    co_joint = induce_joint(mu, co.policy)
    if violation(co_joint, constraint) > constraint.epsilon + 1e-9:
        raise SolverError(
            "internal consistency failure: constrained solution violates its constraint"
        )
    cq0, cq1 = float(co.policy.row("0")[di]), float(co.policy.row("1")[di])
    if constraint.epsilon == 0.0 and abs(cq0 - cq1) > 1e-6:
        raise SolverError(
            "internal consistency failure: exact constraint should force equal rows"
        )

    sw_joint = induce_joint(mu, sw.policy)
    tv = tv_distance(sw_joint, co_joint)
    if tv <= DIVERGENCE_TV_THRESHOLD:
        raise SolverError(
            "internal consistency failure: constructed population did not separate "
            "the designers"
        )
    return DivergenceReport(
        mu_constructed=mu,
        delta_threshold=threshold,
        delta_used=delta,
        witness_types=(y0, y1),
        sw_policy=sw.policy,
        co_policy=co.policy,
        sw_welfare_at_sw=sw.objective_value,
        sw_welfare_at_co=social_welfare(co_joint, u, phi),
        constraint_violation_of_sw_policy=violation(sw_joint, constraint),
        tv_distance=tv,
        diverged=True,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Both designers solved on one population, with cross-evaluations."""

    co_result: SolveResult
    sw_result: SolveResult
    co_accuracy: float
    sw_welfare: float
    sw_welfare_at_co: float
    co_accuracy_at_sw: float
    welfare_gap: float
    sw_policy_violation: float
    tv_distance: float
    diverged: bool


def compare_designers(
    mu: PopulationDistribution,
    co: ConstrainedDesigner,
    sw: WelfareDesigner,
    cfg: SolverConfig = SolverConfig(),
) -> ComparisonReport:
    co_result = co.solve(mu, cfg)
    sw_result = sw.solve(mu, cfg)
    co_joint = induce_joint(mu, co_result.policy)
    sw_joint = induce_joint(mu, sw_result.policy)
    from .objectives import expected_payoff

    sw_welfare_at_co = social_welfare(co_joint, sw.utility, sw.phi)
    tv = tv_distance(co_joint, sw_joint)
    return ComparisonReport(
        co_result=co_result,
        sw_result=sw_result,
        co_accuracy=co_result.objective_value,
        sw_welfare=sw_result.objective_value,
        sw_welfare_at_co=sw_welfare_at_co,
        co_accuracy_at_sw=expected_payoff(sw_joint, co.accuracy),
        welfare_gap=sw_result.objective_value - sw_welfare_at_co,
        sw_policy_violation=violation(sw_joint, co.constraint),
        tv_distance=tv,
        diverged=tv > DIVERGENCE_TV_THRESHOLD,
    )


@dataclass(frozen=True)
class SweepRow:
    index: int
    co_objective: Optional[float] = None
    sw_objective: Optional[float] = None
    sw_welfare_at_co: Optional[float] = None
    welfare_gap: Optional[float] = None
    sw_policy_violation: Optional[float] = None
    tv_distance: Optional[float] = None
    diverged: Optional[bool] = None
    co_oracle_gap: Optional[float] = None
    sw_oracle_gap: Optional[float] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepReport:
    count: int
    seed: int
    sizes: tuple[int, int, int, int]
    rows: tuple[SweepRow, ...]
    solved: int
    disagreements: int
    disagreement_rate: Optional[float]
    mean_tv_distance: Optional[float]
    mean_welfare_gap: Optional[float]
    max_oracle_gap: Optional[float]


def default_alphabets(sizes: tuple[int, int, int, int]) -> Alphabets:
    """Alphabets with numeral labels "0", "1", ... for each variable."""
    if any(s <= 0 for s in sizes):
        raise ConfigurationError(f"alphabet sizes must be positive, got {sizes}")
    return Alphabets(*[tuple(str(i) for i in range(s)) for s in sizes])


def disagreement_sweep(
    alphabets: Alphabets,
    co: ConstrainedDesigner,
    sw: WelfareDesigner,
    count: int,
    seed: int,
    cfg: SolverConfig = SolverConfig(),
    oracle_check: bool = False,
) -> SweepReport:
    """Compare the designers across random populations.

    Populations are drawn from the uniform (symmetric, concentration 1)
    Dirichlet distribution over the full joint simplex, seeded for
    reproducibility. Per-row failures (domain exits, oracle capacity) are
    recorded in the row and do not abort the sweep. With ``oracle_check``
    each solve is re-verified against the exhaustive grid and the absolute
    objective discrepancies are reported.
    """
    if count < 0:
        raise ConfigurationError("count must be nonnegative")
    nx, ny, ng, nd = alphabets.shape
    rng = np.random.default_rng(seed)
    rows: list[SweepRow] = []
    for index in range(count):
        mass = rng.dirichlet(np.ones(nx * ny * ng)).reshape(nx, ny, ng)
        mu = PopulationDistribution(alphabets, mass)
        try:
            cmp = compare_designers(mu, co, sw, cfg)
            co_gap = sw_gap = None
            if oracle_check:
                co_oracle = grid_oracle(
                    mu, PenalizedAccuracyObjective(mu, co.accuracy, co.constraint), cfg
                )
                sw_oracle = grid_oracle(mu, WelfareObjective(mu, sw.utility, sw.phi), cfg)
                co_gap = abs(cmp.co_result.objective_value - co_oracle.objective_value)
                sw_gap = abs(cmp.sw_result.objective_value - sw_oracle.objective_value)
            rows.append(
                SweepRow(
                    index=index,
                    co_objective=cmp.co_result.objective_value,
                    sw_objective=cmp.sw_result.objective_value,
                    sw_welfare_at_co=cmp.sw_welfare_at_co,
                    welfare_gap=cmp.welfare_gap,
                    sw_policy_violation=cmp.sw_policy_violation,
                    tv_distance=cmp.tv_distance,
                    diverged=cmp.diverged,
                    co_oracle_gap=co_gap,
                    sw_oracle_gap=sw_gap,
                )
            )
        except (DomainError, SolverError, CapacityError) as exc:
            rows.append(SweepRow(index=index, error=f"{type(exc).__name__}: {exc}"))
    solved = [r for r in rows if r.error is None]
    disagreements = sum(1 for r in solved if r.diverged)
    oracle_gaps = [
        g for r in solved for g in (r.co_oracle_gap, r.sw_oracle_gap) if g is not None
    ]
    return SweepReport(
        count=count,
        seed=seed,
        sizes=(nx, ny, ng, nd),
        rows=tuple(rows),
        solved=len(solved),
        disagreements=disagreements,
        disagreement_rate=(disagreements / len(solved)) if solved else None,
        mean_tv_distance=(
            float(np.mean([r.tv_distance for r in solved])) if solved else None
        ),
        mean_welfare_gap=(
            float(np.mean([r.welfare_gap for r in solved])) if solved else None
        ),
        max_oracle_gap=(max(oracle_gaps) if oracle_gaps else None),
    )


@dataclass(frozen=True)
class AuditReport:
    """Violations of all four constraint kinds plus the dispersion gap."""

    violations: dict[str, float]
    jensen_gap: Optional[float]


def audit_policy(
    mu: PopulationDistribution,
    policy: Policy,
    utility: Optional[PayoffTable] = None,
    phi: Optional[PhiFunction] = None,
    positive_label: str = "1",
    negative_label: str = "0",
) -> AuditReport:
    """Violation of each constraint kind for the induced joint, at epsilon 0.

    The dispersion gap is included when a utility table and a finite
    concave transform are supplied.
    """
    joint = induce_joint(mu, policy)
    out: dict[str, float] = {}
    for kind in CONSTRAINT_KINDS:
        constraint = FairnessConstraint(
            kind, epsilon=0.0, positive_label=positive_label, negative_label=negative_label
        )
        out[kind] = violation(joint, constraint)
    gap = None
    if utility is not None and phi is not None and not phi.is_rawls:
        gap = jensen_gap(joint, utility, phi)
    return AuditReport(violations=out, jensen_gap=gap)
