import numpy as np
import pytest

from fairwelfare import (
    Alphabets,
    CONSTRAINT_KINDS,
    ConfigurationError,
    FairnessConstraint,
    Policy,
    PopulationDistribution,
    constraint_rows,
    induce_joint,
    satisfies,
    violation,
)
from fairwelfare.experiments import build_example1

from conftest import make_alphabets, random_policy, random_population


def example1_policy(mu, q0, q1):
    return Policy(mu.alphabets, np.array([[1.0 - q0, q0], [1.0 - q1, q1]]))


def all_kinds(epsilon=0.0):
    return [FairnessConstraint(kind, epsilon) for kind in CONSTRAINT_KINDS]


class TestFairnessConstraint:
    def test_epsilon_bounds(self):
        with pytest.raises(ConfigurationError):
            FairnessConstraint("equalized_odds", epsilon=1.5)
        with pytest.raises(ConfigurationError):
            FairnessConstraint("equalized_odds", epsilon=-0.1)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            FairnessConstraint("demographic_parity")

    def test_designated_label_must_exist(self):
        a = Alphabets(("0", "1"), ("lo", "hi"), ("0", "1"), ("0", "1"))
        c = FairnessConstraint("equal_false_negatives")
        with pytest.raises(ConfigurationError, match="positive label"):
            c.conditioning_events(a)
        ok = FairnessConstraint("equal_false_negatives", positive_label="hi")
        assert ok.conditioning_events(a) == ["hi"]


class TestViolation:
    def test_constant_policy_has_no_violation(self, rng):
        for _ in range(10):
            a = make_alphabets(int(rng.integers(1, 4)), int(rng.integers(2, 4)), int(rng.integers(1, 4)), 2)
            mu = random_population(a, rng)
            joint = induce_joint(mu, Policy.constant(a, rng.dirichlet(np.ones(2))))
            for c in all_kinds():
                assert violation(joint, c) <= 1e-12

    def test_example1_group_targeting_maximally_violates(self):
        mu = build_example1(0.75)
        joint = induce_joint(mu, example1_policy(mu, 0.0, 1.0))
        assert violation(joint, FairnessConstraint("equalized_odds")) == pytest.approx(
            1.0, abs=1e-12
        )

    @pytest.mark.parametrize("q", [0.0, 0.25, 0.5, 1.0])
    def test_example1_common_rate_satisfies(self, q):
        mu = build_example1(0.75)
        joint = induce_joint(mu, example1_policy(mu, q, q))
        assert violation(joint, FairnessConstraint("equalized_odds")) <= 1e-12

    def test_example1_gap_is_difference_of_rates(self):
        mu = build_example1(0.75)
        joint = induce_joint(mu, example1_policy(mu, 0.4, 0.5))
        c01 = FairnessConstraint("equalized_odds", epsilon=0.1)
        assert violation(joint, c01) == pytest.approx(0.1, abs=1e-12)
        assert satisfies(joint, c01)
        assert not satisfies(joint, FairnessConstraint("equalized_odds", epsilon=0.09))

    def test_epsilon_one_always_satisfied(self, rng):
        for _ in range(20):
            a = make_alphabets(int(rng.integers(1, 4)), int(rng.integers(2, 4)), int(rng.integers(1, 4)), int(rng.integers(2, 4)))
            joint = induce_joint(random_population(a, rng), random_policy(a, rng))
            for c in all_kinds(epsilon=1.0):
                assert satisfies(joint, c)

    def test_relabeling_invariance(self, rng):
        a = make_alphabets(nx=2, ny=2, ng=3, nd=3)
        mu = random_population(a, rng)
        policy = random_policy(a, rng)
        joint = induce_joint(mu, policy)
        gperm = [2, 0, 1]
        dperm = [1, 2, 0]
        permuted = joint.mass[:, :, gperm, :][:, :, :, dperm]
        from fairwelfare import JointDistribution

        pj = JointDistribution(a, permuted)
        for c in all_kinds():
            assert violation(pj, c) == pytest.approx(violation(joint, c), abs=1e-12)

    def test_equalized_odds_dominates_single_label_kinds(self, rng):
        # The false-negative/false-positive clauses are a subset of the
        # equalized-odds clauses, so their violations can never exceed it.
        for _ in range(30):
            a = make_alphabets()
            joint = induce_joint(random_population(a, rng), random_policy(a, rng))
            eo = violation(joint, FairnessConstraint("equalized_odds"))
            assert violation(joint, FairnessConstraint("equal_false_negatives")) <= eo + 1e-12
            assert violation(joint, FairnessConstraint("equal_false_positives")) <= eo + 1e-12

    def test_vacuous_clause_skipped(self):
        # group "1" never has type "0": the Y=0 clause compares nothing
        a = make_alphabets()
        mu = PopulationDistribution.from_entries(
            a, {("0", "0", "0"): 0.4, ("0", "1", "0"): 0.1, ("1", "1", "1"): 0.5}
        )
        joint = induce_joint(mu, Policy(a, np.array([[1.0, 0.0], [0.0, 1.0]])))
        fp = violation(joint, FairnessConstraint("equal_false_positives"))
        assert fp == 0.0  # only one group has Y=0 mass


class TestConstraintRows:
    def test_statistical_parity_group_covariate(self):
        # X = G binary: weights are point masses, so each decision's gap is
        # a(d | x=0) - a(d | x=1) and the epsilon=0 rows force equal rows.
        mu = build_example1(0.75)
        system = constraint_rows(mu, FairnessConstraint("statistical_parity"))
        assert len(system.clauses) == 1
        assert system.n_aux == 0
        assert system.ub_coeffs.shape[0] == 0
        assert system.eq_coeffs.shape == (2, 4)
        np.testing.assert_allclose(system.clauses[0].weight_diff, [1.0, -1.0], atol=1e-12)
        # variable order is (x0d0, x0d1, x1d0, x1d1)
        np.testing.assert_allclose(
            sorted(system.eq_coeffs.tolist()),
            [[0.0, 1.0, 0.0, -1.0], [1.0, 0.0, -1.0, 0.0]],
            atol=1e-12,
        )

    def test_equalized_odds_rows_force_common_rate(self, rng):
        mu = build_example1(0.75)
        system = constraint_rows(mu, FairnessConstraint("equalized_odds"))
        for _ in range(20):
            q0, q1 = rng.random(2)
            rows = np.array([[1 - q0, q0], [1 - q1, q1]])
            residual = np.abs(system.eq_coeffs @ rows.reshape(-1)).max()
            assert (residual <= 1e-9) == (abs(q0 - q1) <= 1e-9)

    def test_group_missing_from_slice_omits_clause(self):
        a = make_alphabets()
        mu = PopulationDistribution.from_entries(
            a, {("0", "0", "0"): 0.4, ("0", "1", "0"): 0.1, ("1", "1", "1"): 0.5}
        )
        system = constraint_rows(mu, FairnessConstraint("equalized_odds"))
        events = [cl.event for cl in system.clauses]
        assert events == ["1"]  # the Y=0 clause is vacuous

    def test_epsilon_relaxation_emits_inequality_pairs(self):
        mu = build_example1(0.75)
        system = constraint_rows(mu, FairnessConstraint("equalized_odds", epsilon=0.25))
        assert system.eq_coeffs.shape[0] == 0
        # 2 events x 1 pair x 2 decisions x 2 sides
        assert system.ub_coeffs.shape[0] == 8
        assert np.all(system.ub_rhs == 0.25)

    def _raw_rows_hold(self, system, rows, tol=1e-9):
        """Check the actual linear rows, synthesizing auxiliary variables."""
        n_policy = system.n_policy_vars
        z = np.zeros(system.n_vars)
        z[:n_policy] = rows.reshape(-1)
        for ci, clause in enumerate(system.clauses):
            if system.n_aux:
                gaps = clause.decision_gaps(rows)
                z[n_policy + ci * system.n_decisions : n_policy + (ci + 1) * system.n_decisions] = (
                    np.abs(gaps)
                )
        ok = True
        if system.eq_coeffs.size:
            ok &= bool(np.abs(system.eq_coeffs @ z - system.eq_rhs).max() <= tol)
        if system.ub_coeffs.size:
            ok &= bool((system.ub_coeffs @ z - system.ub_rhs).max() <= tol)
        return ok

    @pytest.mark.parametrize("nd", [2, 3])
    @pytest.mark.parametrize("epsilon", [0.0, 0.15, 0.4])
    def test_rows_agree_with_satisfies(self, rng, nd, epsilon):
        # Membership in the emitted linear system must coincide with the
        # total-variation check, for every kind, including multi-decision
        # relaxations (where auxiliary rows carry the TV budget).
        for _ in range(25):
            a = make_alphabets(nx=int(rng.integers(1, 4)), ny=2, ng=int(rng.integers(2, 4)), nd=nd)
            mu = random_population(a, rng)
            policy = random_policy(a, rng)
            joint = induce_joint(mu, policy)
            for kind in CONSTRAINT_KINDS:
                c = FairnessConstraint(kind, epsilon)
                system = constraint_rows(mu, c)
                assert system.satisfied_by(policy.rows) == satisfies(joint, c)
                assert self._raw_rows_hold(system, policy.rows) == satisfies(joint, c)

    def test_tv_batch_matches_scalar(self, rng):
        a = make_alphabets(nx=2, ny=2, ng=3, nd=3)
        mu = random_population(a, rng)
        system = constraint_rows(mu, FairnessConstraint("equalized_odds", epsilon=0.3))
        batch = np.stack([random_policy(a, rng).rows for _ in range(17)])
        got = system.tv_batch(batch)
        want = [system.max_violation(rows) for rows in batch]
        np.testing.assert_allclose(got, want, atol=1e-12)
