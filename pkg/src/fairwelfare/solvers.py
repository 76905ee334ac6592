"""Optimization engines for both designer problems, plus a brute-force oracle.

- ``solve_constrained``: accuracy maximization under a fairness constraint,
  as a linear program over the policy entries a(d | x).
- ``solve_social_welfare``: concave welfare maximization by projected
  gradient ascent over the product of per-covariate simplices; the
  max-min (Rawls) limit is solved exactly as an epigraph LP instead.
- ``grid_oracle``: exhaustive enumeration of policies on a simplex grid,
  used as an independent check on both solvers.

Tie-breaking is deterministic everywhere. LP-based solves refine their
answer to the lexicographically smallest optimal policy, where policies
are compared by the vector of their non-first decision probabilities
(covariate-major). For binary decisions that is simply the vector of
treat probabilities, so e.g. an optimal face q_0 = q_1 resolves to
q = 0. Gradient-based solves are deterministic through the seeded
multi-start schedule, with the winner chosen by (objective, start index).

Extreme negpow exponents make the raw welfare value overflow float64, so
the gradient solver internally maximizes an equivalent log-domain
transform (minus the log of minus the welfare), which is concave and has
the same maximizers; the reported objective value is the true welfare at
the returned policy. For the same reason the convergence test scales the
gradient tolerance by the local gradient magnitude: converged when
``||proj(x + g) - x||_inf <= gradient_tolerance * (1 + ||g||_inf)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .constraints import (
    SATISFACTION_TOL,
    ConstraintClause,
    FairnessConstraint,
    LinearConstraintSystem,
    constraint_rows,
)
from .errors import CapacityError, ConfigurationError, DomainError, SolverError
from .lp import LPResult, solve_lp
from .model import (
    Alphabets,
    JointDistribution,
    Policy,
    PopulationDistribution,
    SOLVER_TOL,
    induce_joint,
)
from .objectives import PayoffTable, PhiFunction, expected_payoff, social_welfare

GRID_EVALUATION_CAP = 100_000_000
TIE_TOL = 1e-12
ARMIJO_C = 1e-4
MAX_SHRINKS = 40


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FALLBACK_FEASIBLE = "fallback_feasible"
    GRID_APPROXIMATE = "grid_approximate"


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    gradient_norm: Optional[float] = None
    lp_pivots: Optional[int] = None
    winning_start: Optional[int] = None


@dataclass(frozen=True)
class SolveResult:
    policy: Policy
    objective_value: float
    status: SolveStatus
    diagnostics: SolveDiagnostics


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by all solvers; a fixed seed makes every solve deterministic."""

    grid_resolution: int = 50
    gradient_tolerance: float = 1e-8
    max_iterations: int = 100_000
    multi_starts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.grid_resolution <= 0:
            raise ConfigurationError("grid_resolution must be positive")
        if self.gradient_tolerance <= 0:
            raise ConfigurationError("gradient_tolerance must be positive")
        if self.max_iterations <= 0:
            raise ConfigurationError("max_iterations must be positive")
        if self.multi_starts <= 0:
            raise ConfigurationError("multi_starts must be positive")
        if self.seed < 0:
            raise ConfigurationError("seed must be a nonnegative integer")


def project_rows_to_simplex(rows: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    v = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n = v.shape[-1]
    u = np.sort(v, axis=-1)[..., ::-1]
    css = np.cumsum(u, axis=-1) - 1.0
    ks = np.arange(1, n + 1, dtype=np.float64)
    cond = u - css / ks > 0.0
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho + 1.0)[..., None]
    out = np.maximum(v - theta, 0.0)
    return out.reshape(np.shape(rows))


# ---------------------------------------------------------------------------
# objective evaluators (shared by the solvers and the grid oracle)
# ---------------------------------------------------------------------------


def _group_kernels(
    mu: PopulationDistribution, u: PayoffTable
) -> tuple[np.ndarray, np.ndarray]:
    """(priors, kernels) over positive-probability groups.

    kernels[g, x, d] is the contribution of policy entry a(d | x) to the
    utility of group g, so U_g(a) = sum_{x,d} kernels[g, x, d] * a[x, d].
    """
    u.require_compatible(mu.alphabets, "group kernels")
    priors = mu.group_priors
    keep = priors > 0.0
    if not np.any(keep):
        raise ConfigurationError("population has no positive-probability group")
    raw = np.einsum("xyg,dy->gxd", mu.mass, u.values)
    return priors[keep], raw[keep] / priors[keep][:, None, None]


class WelfareObjective:
    """Group-welfare evaluator over policies, with vectorized batch support.

    Policies whose group utilities leave the transform's domain evaluate
    to -inf, which makes the evaluator safe for blind grid enumeration.
    """

    def __init__(self, mu: PopulationDistribution, u: PayoffTable, phi: PhiFunction):
        self.mu = mu
        self.u = u
        self.phi = phi
        self.priors, self.kernels = _group_kernels(mu, u)

    def utilities(self, rows: np.ndarray) -> np.ndarray:
        return np.einsum("gxd,xd->g", self.kernels, rows)

    def _aggregate(self, U: np.ndarray) -> np.ndarray:
        """Welfare per batch row given utilities (n, G); -inf when inadmissible."""
        phi = self.phi
        if phi.is_rawls:
            return U.min(axis=1)
        edge = phi.min_admissible
        ok = (U >= edge).all(axis=1) if phi.boundary_admissible else (U > edge).all(axis=1)
        out = np.full(U.shape[0], -math.inf)
        if np.any(ok):
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                vals = phi.value(U[ok])
            out[ok] = vals @ self.priors
        return out

    def evaluate(self, rows: np.ndarray) -> float:
        return float(self._aggregate(self.utilities(rows)[None, :])[0])

    def evaluate_batch(self, batch: np.ndarray) -> np.ndarray:
        U = np.einsum("nxd,gxd->ng", batch, self.kernels)
        return self._aggregate(U)

    def utility_ranges(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-group (lowest, highest) utilities reachable by any policy."""
        lo = self.kernels.min(axis=2).sum(axis=1)
        hi = self.kernels.max(axis=2).sum(axis=1)
        return lo, hi

    def lipschitz_constant(self) -> float:
        """Certified bound on |W(a) - W(b)| / ||a - b||_1 over all policies.

        Infinite when the transform's derivative blows up at the lowest
        reachable utility (e.g. power at zero); finite bounds require
        utilities bounded into the domain's interior.
        """
        lo, _ = self.utility_ranges()
        span = np.abs(self.kernels).max(axis=(1, 2))
        if self.phi.is_rawls:
            return float(span.max())
        edge = self.phi.min_admissible
        strict = not self.phi.boundary_admissible
        slopes = np.empty_like(lo)
        for i, v in enumerate(lo):
            if v < edge or (strict and v <= edge):
                return math.inf
            d = self.phi.derivative(v)
            if not math.isfinite(d):
                return math.inf
            slopes[i] = d
        return float(np.dot(self.priors, slopes * span))


class PenalizedAccuracyObjective:
    """Accuracy with a hard fairness gate: -inf whenever the constraint fails.

    ``slack`` widens the epsilon budget for the feasibility test; the grid
    oracle uses a widened copy to absorb grid quantization when sandwiching
    an LP optimum.
    """

    def __init__(
        self,
        mu: PopulationDistribution,
        v: PayoffTable,
        constraint: FairnessConstraint,
        slack: float = SATISFACTION_TOL,
    ):
        v.require_compatible(mu.alphabets, "accuracy objective")
        self.mu = mu
        self.v = v
        self.constraint = constraint
        self.system = constraint_rows(mu, constraint)
        self.slack = float(slack)
        self.coefficients = np.einsum("xyg,dy->xd", mu.mass, v.values)

    def with_slack(self, slack: float) -> "PenalizedAccuracyObjective":
        return PenalizedAccuracyObjective(self.mu, self.v, self.constraint, slack)

    def evaluate(self, rows: np.ndarray) -> float:
        if self.system.max_violation(rows) > self.constraint.epsilon + self.slack:
            return -math.inf
        return float(np.sum(self.coefficients * rows))

    def evaluate_batch(self, batch: np.ndarray) -> np.ndarray:
        acc = np.einsum("nxd,xd->n", batch, self.coefficients)
        tv = self.system.tv_batch(batch)
        return np.where(tv <= self.constraint.epsilon + self.slack, acc, -math.inf)

    def lipschitz_constant(self) -> float:
        """Bound on the accuracy part only; the gate itself is not Lipschitz."""
        return float(np.abs(self.coefficients).max())

    def violation_lipschitz(self) -> float:
        """Bound on |violation(a) - violation(b)| / ||a - b||_1."""
        if not self.system.clauses:
            return 0.0
        return 0.5 * max(float(np.abs(cl.weight_diff).max()) for cl in self.system.clauses)


def grid_rounding_l1(alphabets: Alphabets, resolution: int) -> float:
    """L1 distance within which any policy has a grid neighbor at this resolution."""
    nx, _, _, nd = alphabets.shape
    return nx * nd / float(resolution)


# ---------------------------------------------------------------------------
# LP path: constrained accuracy and the max-min welfare limit
# ---------------------------------------------------------------------------


def _simplex_equalities(nx: int, nd: int, n_vars: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.zeros((nx, n_vars))
    for xi in range(nx):
        rows[xi, xi * nd : (xi + 1) * nd] = 1.0
    return rows, np.ones(nx)


def _reduced_order(nx: int, nd: int) -> list[int]:
    """Canonical tie-break coordinates: per covariate, decisions after the first."""
    return [xi * nd + di for xi in range(nx) for di in range(1, nd)]


def _lexicographic_polish(
    c: np.ndarray,
    A_eq: np.ndarray,
    b_eq: np.ndarray,
    A_ub: np.ndarray,
    b_ub: np.ndarray,
    nx: int,
    nd: int,
    optimal_value: float,
    fallback: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Refine an optimal LP solution to the lexicographically smallest vertex.

    Pins the objective to its optimum (within TIE_TOL), then minimizes each
    tie-break coordinate in canonical order, substituting each minimum back
    as a constant. Falls back to the unpolished solution if any restricted
    subproblem misbehaves numerically.
    """
    n_vars = c.size
    A_ub = np.vstack([A_ub, -c[None, :]]) if A_ub.size else -c[None, :].copy()
    b_ub = np.append(b_ub, -(optimal_value - TIE_TOL))
    b_eq = b_eq.copy()
    fixed = np.full(n_vars, np.nan)
    pivots = 0
    for k in _reduced_order(nx, nd):
        objective = np.zeros(n_vars)
        objective[k] = 1.0
        res = solve_lp(objective, A_eq, b_eq, A_ub, b_ub, maximize=False)
        pivots += res.pivots
        if res.status != "optimal":
            return fallback, pivots
        vk = min(max(float(res.x[k]), 0.0), 1.0)
        fixed[k] = vk
        b_eq -= A_eq[:, k] * vk
        b_ub -= A_ub[:, k] * vk
        A_eq = A_eq.copy()
        A_ub = A_ub.copy()
        A_eq[:, k] = 0.0
        A_ub[:, k] = 0.0
    rows = np.zeros((nx, nd))
    for xi in range(nx):
        rest = fixed[xi * nd + 1 : (xi + 1) * nd]
        rows[xi, 1:] = rest
        rows[xi, 0] = 1.0 - rest.sum()
    return rows.reshape(-1), pivots


def _policy_from_vector(alphabets: Alphabets, vec: np.ndarray, context: str) -> Policy:
    """Validate solver output at the solver tolerance and normalize exactly."""
    nx, _, _, nd = alphabets.shape
    rows = np.asarray(vec, dtype=np.float64).reshape(nx, nd)
    sums = rows.sum(axis=1)
    if rows.min() < -SOLVER_TOL or np.any(np.abs(sums - 1.0) > SOLVER_TOL):
        raise SolverError(f"{context}: output is not a policy within {SOLVER_TOL}")
    rows = np.clip(rows, 0.0, None)
    return Policy(alphabets, rows / rows.sum(axis=1, keepdims=True))


def _solve_policy_lp(
    alphabets: Alphabets,
    policy_coefficients: np.ndarray,
    system: LinearConstraintSystem,
) -> tuple[Optional[np.ndarray], int]:
    """Maximize a linear policy objective over the constraint polytope.

    Returns (policy vector or None if infeasible, pivot count); the vector
    is tie-break refined.
    """
    nx, _, _, nd = alphabets.shape
    n_vars = system.n_vars
    c = np.zeros(n_vars)
    c[: system.n_policy_vars] = policy_coefficients.reshape(-1)
    simplex_rows, simplex_rhs = _simplex_equalities(nx, nd, n_vars)
    A_eq = (
        np.vstack([simplex_rows, system.eq_coeffs]) if system.eq_coeffs.size else simplex_rows
    )
    b_eq = np.concatenate([simplex_rhs, system.eq_rhs])
    res = solve_lp(c, A_eq, b_eq, system.ub_coeffs, system.ub_rhs)
    if res.status == "infeasible":
        return None, res.pivots
    if res.status != "optimal":
        raise SolverError(f"constrained LP failed with status {res.status!r}")
    polished, extra = _lexicographic_polish(
        c, A_eq, b_eq, system.ub_coeffs, system.ub_rhs, nx, nd, res.objective, res.x
    )
    return polished[: system.n_policy_vars], res.pivots + extra


def solve_constrained_system(
    mu: PopulationDistribution,
    v: PayoffTable,
    system: LinearConstraintSystem,
    cfg: SolverConfig = SolverConfig(),
) -> SolveResult:
    """Accuracy maximization over an explicit linear constraint system.

    When the system is infeasible, the uniform constant policy (feasible
    for every shipped constraint kind) is returned with FALLBACK_FEASIBLE
    status; ``solve_constrained`` itself can never hit that path.
    """
    v.require_compatible(mu.alphabets, "solve_constrained")
    coefficients = np.einsum("xyg,dy->xd", mu.mass, v.values)
    vec, pivots = _solve_policy_lp(mu.alphabets, coefficients, system)
    nd = len(mu.alphabets.decisions)
    if vec is None:
        policy = Policy.constant(mu.alphabets, np.full(nd, 1.0 / nd))
        status = SolveStatus.FALLBACK_FEASIBLE
    else:
        policy = _policy_from_vector(mu.alphabets, vec, "solve_constrained")
        status = SolveStatus.OPTIMAL
    value = expected_payoff(induce_joint(mu, policy), v)
    return SolveResult(
        policy, value, status, SolveDiagnostics(iterations=pivots, lp_pivots=pivots)
    )


def solve_constrained(
    mu: PopulationDistribution,
    v: PayoffTable,
    constraint: FairnessConstraint,
    cfg: SolverConfig = SolverConfig(),
) -> SolveResult:
    """Maximize expected accuracy subject to the fairness constraint.

    The objective is linear in the policy entries with coefficients
    sum_{y,g} mu(x,y,g) v(d,y), so this is an exact LP over the constraint
    polytope. The four shipped constraint kinds always admit constant
    policies, hence the LP is always feasible.
    """
    return solve_constrained_system(mu, v, constraint_rows(mu, constraint), cfg)


def _solve_rawls_lp(
    mu: PopulationDistribution, u: PayoffTable, cfg: SolverConfig
) -> SolveResult:
    """max_a min_g U_g(a) as an epigraph LP with a free level variable."""
    priors, kernels = _group_kernels(mu, u)
    nx, _, _, nd = mu.alphabets.shape
    n_policy = nx * nd
    n_vars = n_policy + 2  # level variable split into positive/negative parts
    c = np.zeros(n_vars)
    c[n_policy], c[n_policy + 1] = 1.0, -1.0
    A_eq, b_eq = _simplex_equalities(nx, nd, n_vars)
    A_ub = np.zeros((kernels.shape[0], n_vars))
    for gi in range(kernels.shape[0]):
        A_ub[gi, :n_policy] = -kernels[gi].reshape(-1)
        A_ub[gi, n_policy] = 1.0
        A_ub[gi, n_policy + 1] = -1.0
    b_ub = np.zeros(kernels.shape[0])
    res = solve_lp(c, A_eq, b_eq, A_ub, b_ub)
    if res.status != "optimal":
        raise SolverError(f"max-min LP failed with status {res.status!r}")
    polished, extra = _lexicographic_polish(
        c, A_eq, b_eq, A_ub, b_ub, nx, nd, res.objective, res.x
    )
    policy = _policy_from_vector(mu.alphabets, polished[:n_policy], "max-min solve")
    value = social_welfare(induce_joint(mu, policy), u, PhiFunction.rawls_limit())
    pivots = res.pivots + extra
    return SolveResult(
        policy,
        value,
        SolveStatus.OPTIMAL,
        SolveDiagnostics(iterations=pivots, lp_pivots=pivots),
    )


# ---------------------------------------------------------------------------
# projected gradient ascent for the smooth welfare families
# ---------------------------------------------------------------------------


def _ascent_functions(
    priors: np.ndarray, kernels: np.ndarray, phi: PhiFunction
) -> tuple[Callable, Callable, Callable]:
    """(value, gradient, admissible) on the solver's optimization scale.

    For negpow the scale is -log(-welfare), computed via logsumexp so that
    extreme exponents neither overflow nor destroy the gradients; it is an
    increasing transform of welfare, and its maximization is an equivalent
    convex problem.
    """

    def utilities(rows):
        return np.einsum("gxd,xd->g", kernels, rows)

    if phi.family == "negpow":
        gamma = float(phi.parameter)
        log_priors = np.log(priors)

        def admissible(rows):
            return bool(np.all(utilities(rows) > 0.0))

        def value(rows):
            U = utilities(rows)
            if np.any(U <= 0.0):
                return -math.inf
            z = log_priors - gamma * np.log(U)
            m = float(z.max())
            return -(m + math.log(float(np.sum(np.exp(z - m)))))

        def gradient(rows):
            U = utilities(rows)
            z = log_priors - gamma * np.log(U)
            z -= z.max()
            s = np.exp(z)
            s /= s.sum()
            return np.einsum("g,gxd->xd", s * gamma / U, kernels)

        return value, gradient, admissible

    edge = phi.min_admissible
    open_edge = not phi.boundary_admissible

    def admissible(rows):
        U = utilities(rows)
        return bool(np.all(U > edge)) if open_edge else bool(np.all(U >= edge))

    def value(rows):
        U = utilities(rows)
        if (open_edge and np.any(U <= edge)) or np.any(U < edge):
            return -math.inf
        return float(np.dot(priors, phi.value(U)))

    def gradient(rows):
        U = utilities(rows)
        with np.errstate(divide="ignore"):
            w = priors * phi.derivative(U)
        return np.einsum("g,gxd->xd", w, kernels)

    return value, gradient, admissible


_STALL_WINDOW = 30  # consecutive machine-precision steps that end a run


def _ascend_from(
    start: np.ndarray,
    value: Callable,
    gradient: Callable,
    admissible: Callable,
    cfg: SolverConfig,
) -> tuple[np.ndarray, float, float, int]:
    """Projected gradient ascent with backtracking from one start.

    Returns (point, value, final projected-gradient norm, iterations).
    The trial step is the spectral (Barzilai-Borwein) ratio of the last
    accepted move, clamped and then backtracked under a monotone Armijo
    test; this keeps near-degenerate instances (almost-flat ridges in the
    welfare surface) from zigzagging for thousands of iterations while
    preserving monotone ascent, hence global convergence on a concave
    objective. A run also ends when the objective has stopped improving
    beyond float precision for a stretch, or when the line search cannot
    move at all; exceeding the iteration budget with a large projected
    gradient raises instead.
    """
    x = start.copy()
    fx = value(x)
    pg_norm = math.inf
    trial = 1.0
    prev_x = None
    prev_g = None
    stalled = 0
    for iteration in range(cfg.max_iterations):
        g = gradient(x)
        if not np.all(np.isfinite(g)):
            raise DomainError(
                "welfare gradient is not finite; a group utility sits on the "
                "edge of the transform's domain"
            )
        scale = 1.0 + float(np.abs(g).max())
        pg = project_rows_to_simplex(x + g) - x
        pg_norm = float(np.abs(pg).max())
        if pg_norm <= cfg.gradient_tolerance * scale:
            return x, fx, pg_norm, iteration
        if prev_x is not None:
            s = x - prev_x
            curvature = float(np.sum(s * (prev_g - g)))
            if curvature > 0.0:
                trial = min(max(float(np.sum(s * s)) / curvature, 1e-10), 1e10)
            else:
                trial = 1.0
        step = trial
        moved = False
        saw_admissible = False
        for _ in range(MAX_SHRINKS + 1):
            cand = project_rows_to_simplex(x + step * g)
            direction = cand - x
            if float(np.abs(direction).max()) > 0.0 and admissible(cand):
                saw_admissible = True
                fc = value(cand)
                if fc >= fx + ARMIJO_C * float(np.sum(g * direction)):
                    prev_x, prev_g = x, g
                    stalled = stalled + 1 if fc - fx <= 1e-15 * (1.0 + abs(fx)) else 0
                    x, fx = cand, fc
                    moved = True
                    break
            step *= 0.5
        if not moved:
            if not saw_admissible:
                raise DomainError(
                    "gradient step left the transform's utility domain and "
                    "backtracking could not recover"
                )
            # Line search exhausted at machine precision: numerically optimal.
            return x, fx, pg_norm, iteration
        if stalled >= _STALL_WINDOW:
            return x, fx, pg_norm, iteration + 1
    if pg_norm > cfg.gradient_tolerance * 1e3:
        raise SolverError(
            f"projected gradient ascent did not converge within "
            f"{cfg.max_iterations} iterations (residual {pg_norm:.3e})"
        )
    return x, fx, pg_norm, cfg.max_iterations


def solve_social_welfare(
    mu: PopulationDistribution,
    u: PayoffTable,
    phi: PhiFunction,
    cfg: SolverConfig = SolverConfig(),
) -> SolveResult:
    """Maximize group welfare over randomized policies.

    Group utilities are linear in the policy and the transform is concave,
    so the objective is concave over the product of simplices and projected
    gradient ascent reaches the global optimum; seeded multi-starts guard
    against stalls on the simplex boundary. The max-min limit bypasses
    gradients entirely and is solved as an exact LP.
    """
    u.require_compatible(mu.alphabets, "solve_social_welfare")
    if phi.is_rawls:
        return _solve_rawls_lp(mu, u, cfg)
    priors, kernels = _group_kernels(mu, u)
    value, gradient, admissible = _ascent_functions(priors, kernels, phi)

    nx, _, _, nd = mu.alphabets.shape
    rng = np.random.default_rng(cfg.seed)
    starts = [np.full((nx, nd), 1.0 / nd)]
    for _ in range(cfg.multi_starts - 1):
        starts.append(rng.dirichlet(np.ones(nd), size=nx))
    for i, start in enumerate(starts):
        if not admissible(start):
            raise DomainError(
                f"start {i} yields group utilities outside the domain of "
                f"phi={phi.spec_string()}; shift utilities into the domain"
            )

    best = None
    for i, start in enumerate(starts):
        x, fx, pg_norm, iterations = _ascend_from(start, value, gradient, admissible, cfg)
        if best is None or fx > best[1]:
            best = (x, fx, pg_norm, iterations, i)
    x, _, pg_norm, iterations, winner = best
    policy = _policy_from_vector(mu.alphabets, x, "solve_social_welfare")
    welfare = social_welfare(induce_joint(mu, policy), u, phi)
    return SolveResult(
        policy,
        welfare,
        SolveStatus.OPTIMAL,
        SolveDiagnostics(
            iterations=iterations, gradient_norm=pg_norm, winning_start=winner
        ),
    )


# ---------------------------------------------------------------------------
# exhaustive grid oracle
# ---------------------------------------------------------------------------


def _simplex_grid(resolution: int, dims: int) -> np.ndarray:
    """All probability vectors with entries in multiples of 1/resolution.

    Ordered ascending by the vector of non-first coordinates, matching the
    solvers' tie-break order (the all-mass-on-first-decision row comes
    first).
    """
    compositions: list[list[int]] = []

    def build(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            compositions.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            build(prefix + [k], remaining - k, slots - 1)

    build([], resolution, dims)
    rows = np.array(compositions, dtype=np.float64) / float(resolution)
    order = np.lexsort(tuple(rows[:, d] for d in range(dims - 1, 0, -1)))
    return rows[order]


def grid_policy_count(alphabets: Alphabets, resolution: int) -> int:
    nx, _, _, nd = alphabets.shape
    return math.comb(resolution + nd - 1, nd - 1) ** nx


def grid_oracle(
    mu: PopulationDistribution,
    objective,
    cfg: SolverConfig = SolverConfig(),
    chunk_size: int = 65536,
) -> SolveResult:
    """Exhaustively evaluate an objective over all grid policies.

    ``objective`` is either an evaluator object with ``evaluate`` (and
    optionally ``evaluate_batch``) over policy row-matrices, or a plain
    callable. Returns the best grid policy; ties resolve to the first
    point in the canonical enumeration order, which is the
    lexicographically smallest under the solvers' tie-break convention.
    The optimum is within L * (n_covariates * n_decisions / resolution)
    of the true optimum for any objective with L1-Lipschitz constant L.
    """
    nx, _, _, nd = mu.alphabets.shape
    total = grid_policy_count(mu.alphabets, cfg.grid_resolution)
    if total > GRID_EVALUATION_CAP:
        raise CapacityError(
            f"grid enumeration needs {total} evaluations (cap {GRID_EVALUATION_CAP}); "
            "use a smaller instance or a coarser grid"
        )
    rows_grid = _simplex_grid(cfg.grid_resolution, nd)
    n_rows = rows_grid.shape[0]

    batch_eval = getattr(objective, "evaluate_batch", None)
    if batch_eval is None:
        single = getattr(objective, "evaluate", objective)

        def batch_eval(batch):
            return np.array([single(b) for b in batch])

    place = n_rows ** np.arange(nx - 1, -1, -1)  # covariate-major digits
    best_value = -math.inf
    best_index = 0
    for start in range(0, total, chunk_size):
        idx = np.arange(start, min(start + chunk_size, total))
        digits = (idx[:, None] // place[None, :]) % n_rows
        batch = rows_grid[digits]  # (B, nx, nd)
        values = np.asarray(batch_eval(batch), dtype=np.float64)
        local = int(np.argmax(values))
        if values[local] > best_value:
            best_value = float(values[local])
            best_index = start + local
    digits = (best_index // place) % n_rows
    policy = Policy(mu.alphabets, rows_grid[digits])
    return SolveResult(
        policy,
        best_value,
        SolveStatus.GRID_APPROXIMATE,
        SolveDiagnostics(iterations=total),
    )


# ---------------------------------------------------------------------------
# the divergence threshold of the two-group construction
# ---------------------------------------------------------------------------


def designated_decisions(decisions: tuple[str, ...]) -> tuple[str, str]:
    """(treat, withhold) decision labels for binary-decision constructions.

    Labels named "1"/"0" take their conventional roles when both are
    present; otherwise the alphabet order decides (second label treats).
    """
    if len(decisions) != 2:
        raise ConfigurationError(
            f"binary decisions required, got {len(decisions)} labels {decisions}"
        )
    if "0" in decisions and "1" in decisions:
        return "1", "0"
    return decisions[1], decisions[0]


def divergence_threshold(u: PayoffTable, y0: str, y1: str) -> float:
    """Smallest group-concentration level above which the welfare optimum is
    to treat exactly the group whose majority type benefits from treatment.

    In the two-group construction where a fraction delta of group j has
    type y_j, group 1's utility is increasing in its treat probability iff
    delta * (u(1,y1) - u(0,y1)) > (1 - delta) * (u(0,y0) - u(1,y0)), and
    symmetrically for group 0. The returned threshold is where the slower
    of the two margins crosses zero:

        delta* / (1 - delta*) = max(B / A, A / B),
        A = u(1,y1) - u(0,y1),  B = u(0,y0) - u(1,y0),

    so for every delta > delta* the unique optimum treats all of group 1
    and none of group 0, for every strictly increasing transform. Requires
    the table to be nontrivial at (y0, y1): A > 0 and B > 0.
    """
    d_pos, d_neg = designated_decisions(u.decisions)
    a = u.value(d_pos, y1) - u.value(d_neg, y1)
    b = u.value(d_neg, y0) - u.value(d_pos, y0)
    if a <= 0.0 or b <= 0.0:
        raise ConfigurationError(
            f"utility table is trivial at types ({y0!r}, {y1!r}): "
            f"treatment gain {a!r} at {y1!r} and harm {b!r} at {y0!r} must both be positive"
        )
    ratio = max(b / a, a / b)
    return ratio / (1.0 + ratio)
