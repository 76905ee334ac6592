"""Group-fairness constraints, their relaxations, and violation metrics.

The four constraint kinds all require the decision distribution to be
(conditionally) independent of group membership:

- ``equalized_odds``          D independent of G given Y = y, for every y
- ``equal_false_negatives``   D independent of G given Y = positive label
- ``equal_false_positives``   D independent of G given Y = negative label
- ``statistical_parity``      D independent of G unconditionally

Violation is quantified as the worst total-variation distance between the
group-conditional decision distributions, over all relevant conditioning
events and all pairs of positive-probability groups. For binary decisions
this is exactly the absolute difference of the two treat probabilities, so
the epsilon-relaxation generalizes the familiar |E[D|...,G=g] - E[D|...,G=g']|
<= epsilon form; for larger decision sets the total-variation relaxation is
this library's choice of generalization.

Conditioning clauses whose event has zero probability within a group are
vacuous and skipped: an independence statement carries no content on null
events.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .model import Alphabets, JointDistribution, PopulationDistribution, SOLVER_TOL

CONSTRAINT_KINDS = (
    "equalized_odds",
    "equal_false_negatives",
    "equal_false_positives",
    "statistical_parity",
)

#: Tolerance used when comparing a violation against its epsilon budget.
SATISFACTION_TOL = 1e-9


@dataclass(frozen=True)
class FairnessConstraint:
    """One of the four constraint kinds together with its relaxation level.

    ``epsilon = 0`` is the exact conditional-independence requirement;
    ``epsilon`` in (0, 1) caps the total-variation violation instead. The
    designated positive/negative type labels are only consulted by the
    false-negative/false-positive variants.
    """

    kind: str
    epsilon: float = 0.0
    positive_label: str = "1"
    negative_label: str = "0"

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ConfigurationError(
                f"unknown constraint kind {self.kind!r}; expected one of {CONSTRAINT_KINDS}"
            )
        eps = float(self.epsilon)
        if not (0.0 <= eps <= 1.0):
            raise ConfigurationError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "positive_label", str(self.positive_label))
        object.__setattr__(self, "negative_label", str(self.negative_label))

    def conditioning_events(self, alphabets: Alphabets) -> list[Optional[str]]:
        """Type labels to condition on (None means the unconditional clause)."""
        if self.kind == "equalized_odds":
            return list(alphabets.types)
        if self.kind == "equal_false_negatives":
            if self.positive_label not in alphabets.types:
                raise ConfigurationError(
                    f"designated positive label {self.positive_label!r} is not a type label"
                )
            return [self.positive_label]
        if self.kind == "equal_false_positives":
            if self.negative_label not in alphabets.types:
                raise ConfigurationError(
                    f"designated negative label {self.negative_label!r} is not a type label"
                )
            return [self.negative_label]
        return [None]


def _event_decision_table(P: JointDistribution, event: Optional[str]) -> np.ndarray:
    """Mass table (group, decision) restricted to the conditioning event."""
    if event is None:
        return P.mass.sum(axis=(0, 1))
    yi = P.alphabets.index("Y", event)
    return P.mass[:, yi, :, :].sum(axis=0)


def violation(P: JointDistribution, c: FairnessConstraint) -> float:
    """Worst total-variation gap between group-conditional decision distributions.

    Always a value in [0, 1]; clauses with fewer than two positive-probability
    groups contribute nothing.
    """
    worst = 0.0
    for event in c.conditioning_events(P.alphabets):
        table = _event_decision_table(P, event)
        totals = table.sum(axis=1)
        ok = totals > 0.0
        if int(ok.sum()) < 2:
            continue
        dists = table[ok] / totals[ok, None]
        diffs = 0.5 * np.abs(dists[:, None, :] - dists[None, :, :]).sum(axis=2)
        worst = max(worst, float(diffs.max()))
    return min(worst, 1.0)


def satisfies(P: JointDistribution, c: FairnessConstraint) -> bool:
    """Whether the violation stays within the epsilon budget (plus solver slack)."""
    return violation(P, c) <= c.epsilon + SATISFACTION_TOL


@dataclass(frozen=True)
class ConstraintClause:
    """One non-vacuous (event, group pair) comparison, in policy coordinates.

    ``weight_diff[x]`` is mu(x | event, G=g) - mu(x | event, G=g'), so the
    gap between the two groups' conditional probabilities of decision d is
    the inner product of ``weight_diff`` with the policy column for d.
    """

    event: Optional[str]
    group_pair: tuple[str, str]
    weight_diff: np.ndarray

    def decision_gaps(self, rows: np.ndarray) -> np.ndarray:
        return self.weight_diff @ rows

    def tv(self, rows: np.ndarray) -> float:
        return 0.5 * float(np.abs(self.decision_gaps(rows)).sum())


@dataclass(frozen=True)
class LinearConstraintSystem:
    """Linear description, over policy variables, of an epsilon-relaxed constraint.

    Policy variables are flattened x-major, decision-minor: variable
    ``x_index * n_decisions + d_index`` is a(d | x). For each clause and
    each decision the system carries the pair of one-sided inequalities
    ``|gap_d| <= epsilon`` (collapsed to one equality when epsilon is 0).
    When there are more than two decisions and epsilon > 0, the per-decision
    pairs bound only the largest single gap, which is weaker than the
    total-variation budget, so auxiliary variables t_{clause,d} >= |gap_d|
    with sum_d t <= 2 * epsilon are appended; the policy-variable projection
    of the solution set then coincides exactly with ``violation <= epsilon``.

    ``eq_coeffs @ z = eq_rhs`` and ``ub_coeffs @ z <= ub_rhs`` with
    ``z = [policy variables, auxiliary variables]``.
    """

    n_covariates: int
    n_decisions: int
    n_aux: int
    eq_coeffs: np.ndarray
    eq_rhs: np.ndarray
    ub_coeffs: np.ndarray
    ub_rhs: np.ndarray
    clauses: tuple[ConstraintClause, ...]
    epsilon: float

    @property
    def n_policy_vars(self) -> int:
        return self.n_covariates * self.n_decisions

    @property
    def n_vars(self) -> int:
        return self.n_policy_vars + self.n_aux

    def max_violation(self, rows: np.ndarray) -> float:
        """Worst clause total variation at the given policy rows."""
        if not self.clauses:
            return 0.0
        return max(clause.tv(rows) for clause in self.clauses)

    def satisfied_by(self, rows: np.ndarray, tol: float = SATISFACTION_TOL) -> bool:
        return self.max_violation(rows) <= self.epsilon + tol

    def tv_batch(self, batch: np.ndarray) -> np.ndarray:
        """Worst clause total variation for a batch of policies (n, X, D)."""
        n = batch.shape[0]
        if not self.clauses:
            return np.zeros(n)
        dw = np.stack([cl.weight_diff for cl in self.clauses])  # (C, X)
        gaps = np.einsum("cx,nxd->ncd", dw, batch)
        return 0.5 * np.abs(gaps).sum(axis=2).max(axis=1)


def constraint_rows(mu: PopulationDistribution, c: FairnessConstraint) -> LinearConstraintSystem:
    """Linear constraint system over policy variables for the given population.

    Weights come from the population alone: the conditional decision
    probability P(D=d | event, G=g) of any induced joint is linear in the
    policy with coefficients mu(x | event, G=g). Vacuous clauses (event
    with zero probability inside a group) are omitted, matching
    ``violation``.
    """
    nx, ny, ng, nd = mu.alphabets.shape
    n_policy = nx * nd
    clauses: list[ConstraintClause] = []
    for event in c.conditioning_events(mu.alphabets):
        if event is None:
            table = mu.mass.sum(axis=1)  # (X, G)
        else:
            table = mu.mass[:, mu.alphabets.index("Y", event), :]
        totals = table.sum(axis=0)  # per group
        eligible = [gi for gi in range(ng) if totals[gi] > 0.0]
        weights = {gi: table[:, gi] / totals[gi] for gi in eligible}
        for i, gi in enumerate(eligible):
            for gj in eligible[i + 1 :]:
                clauses.append(
                    ConstraintClause(
                        event=event,
                        group_pair=(mu.alphabets.groups[gi], mu.alphabets.groups[gj]),
                        weight_diff=weights[gi] - weights[gj],
                    )
                )

    eps = c.epsilon
    need_aux = eps > 0.0 and nd > 2
    n_aux = len(clauses) * nd if need_aux else 0
    n_vars = n_policy + n_aux

    eq_rows: list[np.ndarray] = []
    eq_rhs: list[float] = []
    ub_rows: list[np.ndarray] = []
    ub_rhs: list[float] = []

    for ci, clause in enumerate(clauses):
        for di in range(nd):
            coef = np.zeros(n_vars)
            coef[di:n_policy:nd] = clause.weight_diff
            if eps == 0.0:
                eq_rows.append(coef)
                eq_rhs.append(0.0)
                continue
            ub_rows.append(coef)
            ub_rhs.append(eps)
            ub_rows.append(-coef)
            ub_rhs.append(eps)
            if need_aux:
                aux = n_policy + ci * nd + di
                for signed in (coef, -coef):
                    row = signed.copy()
                    row[aux] = -1.0
                    ub_rows.append(row)
                    ub_rhs.append(0.0)
        if need_aux:
            row = np.zeros(n_vars)
            row[n_policy + ci * nd : n_policy + (ci + 1) * nd] = 1.0
            ub_rows.append(row)
            ub_rhs.append(2.0 * eps)

    def stack(rows, width):
        return np.array(rows) if rows else np.zeros((0, width))

    return LinearConstraintSystem(
        n_covariates=nx,
        n_decisions=nd,
        n_aux=n_aux,
        eq_coeffs=stack(eq_rows, n_vars),
        eq_rhs=np.array(eq_rhs),
        ub_coeffs=stack(ub_rows, n_vars),
        ub_rhs=np.array(ub_rhs),
        clauses=tuple(clauses),
        epsilon=eps,
    )
