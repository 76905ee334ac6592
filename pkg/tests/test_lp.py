import numpy as np
import pytest

from fairwelfare.lp import solve_lp


def test_textbook_maximization():
    # max 3a + 2b s.t. a+b <= 4, a <= 2, b <= 3
    res = solve_lp(
        np.array([3.0, 2.0]),
        A_ub=np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]),
        b_ub=np.array([4.0, 2.0, 3.0]),
    )
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [2.0, 2.0], atol=1e-10)
    assert res.objective == pytest.approx(10.0, abs=1e-10)


def test_equality_and_minimize():
    res = solve_lp(
        np.array([1.0, 1.0]),
        A_eq=np.array([[1.0, 1.0]]),
        b_eq=np.array([1.0]),
        maximize=False,
    )
    assert res.status == "optimal"
    assert res.objective == pytest.approx(1.0, abs=1e-12)


def test_infeasible_detected():
    res = solve_lp(
        np.array([1.0, 0.0]),
        A_eq=np.array([[1.0, 1.0], [1.0, 1.0]]),
        b_eq=np.array([1.0, 2.0]),
    )
    assert res.status == "infeasible"


def test_redundant_equalities_are_dropped():
    res = solve_lp(
        np.array([2.0, 1.0]),
        A_eq=np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]),
        b_eq=np.array([1.0, 1.0, 2.0]),
    )
    assert res.status == "optimal"
    assert res.objective == pytest.approx(2.0, abs=1e-10)


def test_unbounded_detected():
    res = solve_lp(np.array([1.0, 0.0]))
    assert res.status == "unbounded"


def test_negative_rhs_inequality():
    # x >= 0.5 encoded as -x <= -0.5; minimize x
    res = solve_lp(
        np.array([-1.0]), A_ub=np.array([[-1.0]]), b_ub=np.array([-0.5])
    )
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(0.5, abs=1e-10)


def test_degenerate_zero_rhs_rows():
    # equality chain forcing a = b with normalization a + b = 1
    res = solve_lp(
        np.array([1.0, 0.0]),
        A_eq=np.array([[1.0, -1.0], [1.0, 1.0]]),
        b_eq=np.array([0.0, 1.0]),
    )
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [0.5, 0.5], atol=1e-10)


def test_random_problems_satisfy_kkt_style_checks(rng):
    # feasibility and no-better-vertex spot check via random feasible points
    for _ in range(25):
        n, m = int(rng.integers(2, 6)), int(rng.integers(1, 5))
        A = rng.normal(size=(m, n))
        x0 = rng.random(n)
        b = A @ x0 + rng.random(m)  # x0 strictly feasible
        c = rng.normal(size=n)
        bound = np.ones(n) * 10.0
        res = solve_lp(
            c,
            A_ub=np.vstack([A, np.eye(n)]),
            b_ub=np.concatenate([b, bound]),
        )
        assert res.status == "optimal"
        assert np.all(A @ res.x <= b + 1e-8)
        assert np.all(res.x >= -1e-10)
        # no random feasible point beats the reported optimum
        for _ in range(50):
            y = rng.random(n) * 2.0
            if np.all(A @ y <= b) and np.all(y <= 10.0):
                assert c @ y <= res.objective + 1e-8


def test_deterministic_pivots(rng):
    A = rng.normal(size=(4, 5))
    b = np.abs(rng.normal(size=4)) + 1.0
    c = rng.normal(size=5)
    r1 = solve_lp(c, A_ub=A, b_ub=b)
    r2 = solve_lp(c, A_ub=A, b_ub=b)
    assert r1.pivots == r2.pivots
    assert np.array_equal(r1.x, r2.x)
