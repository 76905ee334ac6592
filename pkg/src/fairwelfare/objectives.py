"""Payoff tables, concave transforms, welfare objectives, and unfairness measures.

A ``PayoffTable`` scores (decision, type) pairs and serves both as an
accuracy measure for the constrained designer and as a utility function
for the welfare designer. ``PhiFunction`` is a closed parametric family
of strictly increasing concave transforms, so derivatives and inverses
are available in closed form (solvers need gradients, certainty
equivalents need inverses). Arbitrary user callables are deliberately
not supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    UnsupportedMeasureError,
)
from .model import Alphabets, JointDistribution, PopulationDistribution, condition_on_group

__all__ = [
    "PayoffTable",
    "PhiFunction",
    "ConstraintIndicator",
    "JensenGap",
    "UnfairnessMeasure",
    "expected_payoff",
    "group_utility",
    "group_utilities",
    "social_welfare",
    "welfare_of_utilities",
    "certainty_equivalent",
    "certainty_equivalent_of_utilities",
    "jensen_gap",
    "generalized_objective",
]


@dataclass(frozen=True)
class PayoffTable:
    """A finite score table over decisions x types, fully populated."""

    decisions: tuple[str, ...]
    types: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "decisions", tuple(str(d) for d in self.decisions))
        object.__setattr__(self, "types", tuple(str(y) for y in self.types))
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (len(self.decisions), len(self.types)):
            raise ConfigurationError(
                f"payoff values have shape {arr.shape}, expected "
                f"{(len(self.decisions), len(self.types))}"
            )
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("payoff values must all be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_entries(
        cls,
        decisions: Sequence[str],
        types: Sequence[str],
        entries: Mapping[tuple[str, str], float],
        default: Optional[float] = None,
    ) -> "PayoffTable":
        decisions = tuple(str(d) for d in decisions)
        types = tuple(str(y) for y in types)
        arr = np.full((len(decisions), len(types)), np.nan)
        for (d, y), v in entries.items():
            d, y = str(d), str(y)
            if d not in decisions:
                raise ConfigurationError(f"payoff entry uses undeclared decision {d!r}")
            if y not in types:
                raise ConfigurationError(f"payoff entry uses undeclared type {y!r}")
            arr[decisions.index(d), types.index(y)] = v
        if np.any(np.isnan(arr)):
            if default is None:
                missing = [
                    (decisions[i], types[j]) for i, j in zip(*np.nonzero(np.isnan(arr)))
                ]
                raise ConfigurationError(
                    f"payoff table is missing entries {missing} and no default was given"
                )
            arr = np.where(np.isnan(arr), default, arr)
        return cls(decisions, types, arr)

    @classmethod
    def match_indicator(cls, alphabets: Alphabets) -> "PayoffTable":
        """1 when the decision label equals the type label, else 0."""
        vals = np.array(
            [[1.0 if d == y else 0.0 for y in alphabets.types] for d in alphabets.decisions]
        )
        return cls(alphabets.decisions, alphabets.types, vals)

    def value(self, d: str, y: str) -> float:
        return float(self.values[self.decisions.index(str(d)), self.types.index(str(y))])

    def scaled(self, k: float) -> "PayoffTable":
        return PayoffTable(self.decisions, self.types, self.values * k)

    def require_compatible(self, alphabets: Alphabets, context: str) -> None:
        if self.decisions != alphabets.decisions or self.types != alphabets.types:
            raise ConfigurationError(
                f"{context}: payoff table is defined on decisions {self.decisions} "
                f"x types {self.types}, which do not match the alphabets"
            )


_PHI_FAMILIES = ("identity", "power", "log", "negpow", "rawls")


@dataclass(frozen=True)
class PhiFunction:
    """Strictly increasing concave transform from a closed parametric family.

    Families and admissible domains:

    - ``identity``            phi(u) = u              all u
    - ``power`` (0 < a <= 1)  phi(u) = u**a           u >= 0
    - ``log`` (shift s > 0)   phi(u) = log(u + s)     u > -s
    - ``negpow`` (gamma > 0)  phi(u) = -u**(-gamma)   u > 0
    - ``rawls``               marker for the infinite-risk-aversion limit;
                              welfare becomes the minimum group utility and
                              is handled by a max-min solver, not pointwise.
    """

    family: str
    parameter: Optional[float] = None

    def __post_init__(self):
        fam = self.family
        if fam not in _PHI_FAMILIES:
            raise ConfigurationError(f"unknown phi family {fam!r}; expected one of {_PHI_FAMILIES}")
        p = self.parameter
        if fam in ("identity", "rawls"):
            if p is not None:
                raise ConfigurationError(f"phi family {fam!r} takes no parameter")
        else:
            if p is None or not math.isfinite(p):
                raise ConfigurationError(f"phi family {fam!r} requires a finite parameter")
            if fam == "power" and not (0.0 < p <= 1.0):
                raise ConfigurationError(f"power exponent must lie in (0, 1], got {p}")
            if fam == "log" and p <= 0.0:
                raise ConfigurationError(f"log shift must be positive, got {p}")
            if fam == "negpow" and p <= 0.0:
                raise ConfigurationError(f"negpow exponent must be positive, got {p}")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def identity(cls) -> "PhiFunction":
        return cls("identity")

    @classmethod
    def power(cls, alpha: float) -> "PhiFunction":
        return cls("power", float(alpha))

    @classmethod
    def log(cls, shift: float) -> "PhiFunction":
        return cls("log", float(shift))

    @classmethod
    def negative_power(cls, gamma: float) -> "PhiFunction":
        return cls("negpow", float(gamma))

    @classmethod
    def rawls_limit(cls) -> "PhiFunction":
        return cls("rawls")

    @classmethod
    def parse(cls, spec: str) -> "PhiFunction":
        """Parse the compact grammar: identity | power:<a> | log:<s> | negpow:<g> | rawls."""
        spec = spec.strip()
        name, _, arg = spec.partition(":")
        name = name.strip().lower()
        if name in ("identity", "rawls"):
            if arg:
                raise ConfigurationError(f"phi {name!r} takes no parameter, got {spec!r}")
            return cls(name)
        if name in ("power", "log", "negpow"):
            if not arg:
                raise ConfigurationError(f"phi {name!r} requires a parameter, e.g. {name}:0.5")
            try:
                value = float(arg)
            except ValueError:
                raise ConfigurationError(f"phi parameter {arg!r} is not a number") from None
            return cls(name, value)
        raise ConfigurationError(f"unknown phi spec {spec!r}")

    def spec_string(self) -> str:
        if self.parameter is None:
            return self.family
        return f"{self.family}:{self.parameter:.12g}"

    # -- properties ----------------------------------------------------------

    @property
    def is_rawls(self) -> bool:
        return self.family == "rawls"

    @property
    def min_admissible(self) -> float:
        """Lower edge of the admissible utility domain (-inf when unrestricted)."""
        if self.family == "power":
            return 0.0
        if self.family == "log":
            return -float(self.parameter)
        if self.family == "negpow":
            return 0.0
        return -math.inf

    @property
    def boundary_admissible(self) -> bool:
        """Whether the domain edge itself is admissible (power admits u = 0)."""
        return self.family != "log" and self.family != "negpow"

    def admits(self, u) -> bool:
        u = np.asarray(u, dtype=np.float64)
        if not np.all(np.isfinite(u)):
            return False
        edge = self.min_admissible
        if self.boundary_admissible:
            return bool(np.all(u >= edge))
        return bool(np.all(u > edge))

    def check_domain(self, u: float, context: str = "utility") -> None:
        if not self.admits(u):
            raise DomainError(
                f"{context} {u!r} is outside the domain of phi={self.spec_string()}"
            )

    # -- evaluation ----------------------------------------------------------

    def value(self, u):
        """phi(u), elementwise on arrays. Rawls has no pointwise value."""
        if self.is_rawls:
            raise UnsupportedMeasureError("the max-min limit has no pointwise transform")
        u = np.asarray(u, dtype=np.float64)
        if self.family == "identity":
            out = u.copy()
        elif self.family == "power":
            out = np.power(u, self.parameter)
        elif self.family == "log":
            out = np.log(u + self.parameter)
        else:  # negpow
            with np.errstate(over="ignore"):
                out = -np.power(u, -self.parameter)
        return out if out.ndim else float(out)

    def derivative(self, u):
        """phi'(u), elementwise; positive everywhere on the admissible domain."""
        if self.is_rawls:
            raise UnsupportedMeasureError("the max-min limit is not differentiable")
        u = np.asarray(u, dtype=np.float64)
        if self.family == "identity":
            out = np.ones_like(u)
        elif self.family == "power":
            a = self.parameter
            with np.errstate(divide="ignore"):
                out = a * np.power(u, a - 1.0)
        elif self.family == "log":
            out = 1.0 / (u + self.parameter)
        else:  # negpow
            g = self.parameter
            with np.errstate(over="ignore"):
                out = g * np.power(u, -g - 1.0)
        return out if out.ndim else float(out)

    def inverse(self, w: float) -> float:
        """phi^{-1}(w); raises DomainError when w is outside the range of phi."""
        if self.is_rawls:
            raise UnsupportedMeasureError("the max-min limit is not invertible")
        if not math.isfinite(w):
            raise DomainError(f"welfare {w!r} is outside the range of phi={self.spec_string()}")
        if self.family == "identity":
            return float(w)
        if self.family == "power":
            if w < 0.0:
                raise DomainError(f"welfare {w!r} is outside the range of power:{self.parameter}")
            return float(w ** (1.0 / self.parameter))
        if self.family == "log":
            return float(math.exp(w) - self.parameter)
        # negpow: range is the strictly negative axis
        if w >= 0.0:
            raise DomainError(f"welfare {w!r} is outside the range of negpow:{self.parameter}")
        return float((-w) ** (-1.0 / self.parameter))


def expected_payoff(P: JointDistribution, table: PayoffTable) -> float:
    """E_P of the table score: sum of mass(x,y,g,d) * table(d,y)."""
    table.require_compatible(P.alphabets, "expected_payoff")
    # mass axes (X, Y, G, D); table axes (D, Y)
    return float(np.einsum("xygd,dy->", P.mass, table.values))


def group_utility(P: JointDistribution, g: str, u: PayoffTable) -> float:
    """Expected payoff within group g, i.e. under the conditional given G=g."""
    u.require_compatible(P.alphabets, "group_utility")
    cond = condition_on_group(P, g)  # axes (X, Y, D)
    return float(np.einsum("xyd,dy->", cond.mass, u.values))


def group_utilities(P: JointDistribution, u: PayoffTable) -> tuple[np.ndarray, np.ndarray]:
    """(priors, utilities) over the positive-probability groups, in alphabet order.

    Groups with zero prior are dropped from both arrays; the welfare sum and
    the max-min limit are defined over the remaining groups only.
    """
    u.require_compatible(P.alphabets, "group_utilities")
    priors = P.group_priors
    keep = priors > 0.0
    if not np.any(keep):
        raise ConfigurationError("joint distribution has no positive-probability group")
    # sum_{x,y,d} P(x,y,g,d) u(d,y) / p_g for each kept g
    weighted = np.einsum("xygd,dy->g", P.mass, u.values)
    return priors[keep], weighted[keep] / priors[keep]


def welfare_of_utilities(priors: np.ndarray, utilities: np.ndarray, phi: PhiFunction) -> float:
    """Aggregate group utilities: sum of p_g * phi(U_g), or min U_g in the max-min limit."""
    if phi.is_rawls:
        return float(np.min(utilities))
    for p, val in zip(priors, utilities):
        if not phi.admits(val):
            raise DomainError(
                f"group utility {val!r} (prior {p!r}) is outside the domain of "
                f"phi={phi.spec_string()}"
            )
    return float(np.dot(priors, phi.value(utilities)))


def social_welfare(P: JointDistribution, u: PayoffTable, phi: PhiFunction) -> float:
    """Welfare of the joint: sum over groups of p_g * phi(group utility).

    The max-min limit returns the utility of the worst-off positive-probability
    group instead of a transformed sum.
    """
    priors, utilities = group_utilities(P, u)
    return welfare_of_utilities(priors, utilities, phi)


def certainty_equivalent(welfare: float, phi: PhiFunction) -> float:
    """phi^{-1}(welfare): the sure utility the welfare value is worth.

    Enables scale-free comparison of welfare across different transforms.
    """
    return phi.inverse(welfare)


def certainty_equivalent_of_utilities(
    priors: np.ndarray, utilities: np.ndarray, phi: PhiFunction
) -> float:
    """phi^{-1}(sum p_g phi(U_g)) computed stably.

    Algebraically identical to ``certainty_equivalent(welfare_of_utilities(...))``
    but safe for extreme negpow exponents, where the welfare value itself
    over- or underflows float64 long before the certainty equivalent does.
    The max-min limit is its own certainty equivalent.
    """
    priors = np.asarray(priors, dtype=np.float64)
    utilities = np.asarray(utilities, dtype=np.float64)
    if phi.is_rawls:
        return float(np.min(utilities))
    if phi.family == "negpow":
        g = float(phi.parameter)
        if np.any(utilities <= 0.0):
            raise DomainError("negpow requires strictly positive group utilities")
        z = np.log(priors) - g * np.log(utilities)
        m = float(np.max(z))
        lse = m + math.log(float(np.sum(np.exp(z - m))))
        return math.exp(-lse / g)
    return phi.inverse(welfare_of_utilities(priors, utilities, phi))


def jensen_gap(P: JointDistribution, u: PayoffTable, phi: PhiFunction) -> float:
    """phi(average group utility) minus average of phi(group utilities).

    Nonnegative for every concave phi; zero when all positive-probability
    groups have identical utility, and zero identically for the linear
    transform. Defined only for the finite families, not the max-min limit.
    """
    if phi.is_rawls:
        raise UnsupportedMeasureError("the dispersion gap is not defined for the max-min limit")
    priors, utilities = group_utilities(P, u)
    pooled = float(np.dot(priors, utilities))
    phi.check_domain(pooled, "pooled utility")
    return float(phi.value(pooled)) - welfare_of_utilities(priors, utilities, phi)


@dataclass(frozen=True)
class ConstraintIndicator:
    """Unfairness as a hard gate: 0 when the constraint holds, +inf otherwise."""

    constraint: "FairnessConstraint"

    def evaluate(self, P: JointDistribution) -> float:
        from .constraints import satisfies

        return 0.0 if satisfies(P, self.constraint) else math.inf


@dataclass(frozen=True)
class JensenGap:
    """Unfairness as utility dispersion across groups under a concave transform."""

    utility: PayoffTable
    phi: PhiFunction

    def __post_init__(self):
        if self.phi.is_rawls:
            raise UnsupportedMeasureError(
                "the dispersion gap is not defined for the max-min limit"
            )

    def evaluate(self, P: JointDistribution) -> float:
        return jensen_gap(P, self.utility, self.phi)


UnfairnessMeasure = Union[ConstraintIndicator, JensenGap]


def generalized_objective(
    P: JointDistribution,
    v: PayoffTable,
    phi: PhiFunction,
    h: UnfairnessMeasure,
) -> float:
    """phi(expected payoff) minus the unfairness penalty.

    Returns -inf when the penalty is the hard constraint gate and the
    constraint is violated. With the dispersion penalty built from the same
    table and transform (v = u), this reduces exactly to the welfare
    objective.
    """
    if phi.is_rawls:
        raise UnsupportedMeasureError("the generalized objective needs a pointwise transform")
    value = expected_payoff(P, v)
    phi.check_domain(value, "expected payoff")
    penalty = h.evaluate(P)
    if math.isinf(penalty):
        return -math.inf
    return float(phi.value(value)) - penalty
