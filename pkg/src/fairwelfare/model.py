"""Finite probability core: alphabets, populations, policies, induced joints.

Everything is stored densely as float64 arrays indexed by alphabet
position; alphabet sizes are desk-scale. All types are immutable after
construction (arrays are frozen), and all operations are pure functions,
so values can be shared freely across threads.

Two tolerance tiers are used throughout the package: ``DATA_TOL`` (1e-12)
for data constructed directly, and ``SOLVER_TOL`` (1e-9) for values that
passed through an optimizer and carry accumulated rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, UndefinedConditionalError

DATA_TOL = 1e-12
SOLVER_TOL = 1e-9

# Axis names, in storage order, of a full joint distribution.
VARIABLES = ("X", "Y", "G", "D")


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


def _check_labels(name: str, labels: Sequence[str]) -> tuple[str, ...]:
    labels = tuple(str(v) for v in labels)
    if not labels:
        raise ConfigurationError(f"{name} alphabet is empty")
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"{name} alphabet has duplicate labels: {labels}")
    return labels


@dataclass(frozen=True)
class Alphabets:
    """Ordered label sets for covariates, types, groups, and decisions.

    The orderings are fixed at construction and used for all iteration,
    storage indexing, and deterministic tie-breaking.
    """

    covariates: tuple[str, ...]
    types: tuple[str, ...]
    groups: tuple[str, ...]
    decisions: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "covariates", _check_labels("covariates", self.covariates))
        object.__setattr__(self, "types", _check_labels("types", self.types))
        object.__setattr__(self, "groups", _check_labels("groups", self.groups))
        object.__setattr__(self, "decisions", _check_labels("decisions", self.decisions))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (len(self.covariates), len(self.types), len(self.groups), len(self.decisions))

    def labels(self, variable: str) -> tuple[str, ...]:
        return {
            "X": self.covariates,
            "Y": self.types,
            "G": self.groups,
            "D": self.decisions,
        }[variable]

    def index(self, variable: str, label: str) -> int:
        labels = self.labels(variable)
        try:
            return labels.index(str(label))
        except ValueError:
            raise ConfigurationError(
                f"label {label!r} is not in the {variable} alphabet {labels}"
            ) from None

    def require_same(self, other: "Alphabets", context: str) -> None:
        for var in VARIABLES:
            if self.labels(var) != other.labels(var):
                raise ConfigurationError(
                    f"{context}: {var} alphabets differ "
                    f"({self.labels(var)} vs {other.labels(var)})"
                )


def _check_simplex(arr: np.ndarray, what: str, tol: float) -> None:
    if np.any(arr < -tol) or not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{what} has negative or non-finite entries")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise ConfigurationError(f"{what} sums to {total!r}, expected 1 within {tol}")


@dataclass(frozen=True)
class PopulationDistribution:
    """Joint distribution of (covariate, type, group) describing the population.

    ``mass[x, y, g]`` is indexed by alphabet position. Group priors and
    within-group conditionals are derived on demand; conditioning on a
    zero-probability group is an error.
    """

    alphabets: Alphabets
    mass: np.ndarray

    def __post_init__(self):
        nx, ny, ng, _ = self.alphabets.shape
        arr = np.asarray(self.mass, dtype=np.float64)
        if arr.shape != (nx, ny, ng):
            raise ConfigurationError(
                f"population mass has shape {arr.shape}, expected {(nx, ny, ng)}"
            )
        _check_simplex(arr, "population mass", DATA_TOL)
        object.__setattr__(self, "mass", _frozen(np.clip(arr, 0.0, None)))

    @classmethod
    def from_entries(
        cls,
        alphabets: Alphabets,
        entries: Mapping[tuple[str, str, str], float],
    ) -> "PopulationDistribution":
        """Build from a sparse map of (x, y, g) labels to masses; unlisted cells are 0."""
        nx, ny, ng, _ = alphabets.shape
        arr = np.zeros((nx, ny, ng))
        for (x, y, g), m in entries.items():
            arr[alphabets.index("X", x), alphabets.index("Y", y), alphabets.index("G", g)] += m
        return cls(alphabets, arr)

    @property
    def group_priors(self) -> np.ndarray:
        """p_g, the marginal over groups."""
        return self.mass.sum(axis=(0, 1))

    def group_prior(self, g: str) -> float:
        return float(self.group_priors[self.alphabets.index("G", g)])

    def conditional_given_group(self, g: str) -> np.ndarray:
        """The (x, y) distribution within group g; errors if the group has no mass."""
        gi = self.alphabets.index("G", g)
        pg = float(self.group_priors[gi])
        if pg <= 0.0:
            raise UndefinedConditionalError(f"G={g}")
        return self.mass[:, :, gi] / pg

    def prob(self, x: str, y: str, g: str) -> float:
        a = self.alphabets
        return float(self.mass[a.index("X", x), a.index("Y", y), a.index("G", g)])


@dataclass(frozen=True)
class Policy:
    """Randomized decision rule: one probability row over decisions per covariate."""

    alphabets: Alphabets
    rows: np.ndarray

    def __post_init__(self):
        nx, _, _, nd = self.alphabets.shape
        arr = np.asarray(self.rows, dtype=np.float64)
        if arr.shape != (nx, nd):
            raise ConfigurationError(f"policy rows have shape {arr.shape}, expected {(nx, nd)}")
        if np.any(arr < -DATA_TOL) or not np.all(np.isfinite(arr)):
            raise ConfigurationError("policy rows have negative or non-finite entries")
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > DATA_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ConfigurationError(
                f"policy row for covariate {self.alphabets.covariates[bad]!r} "
                f"sums to {sums[bad]!r}, expected 1 within {DATA_TOL}"
            )
        object.__setattr__(self, "rows", _frozen(np.clip(arr, 0.0, None)))

    @classmethod
    def from_rows(cls, alphabets: Alphabets, rows: Mapping[str, Sequence[float]]) -> "Policy":
        nx, _, _, nd = alphabets.shape
        arr = np.zeros((nx, nd))
        seen = set()
        for x, row in rows.items():
            xi = alphabets.index("X", x)
            seen.add(xi)
            arr[xi] = np.asarray(row, dtype=np.float64)
        if len(seen) != nx:
            missing = [c for i, c in enumerate(alphabets.covariates) if i not in seen]
            raise ConfigurationError(f"policy is missing rows for covariates {missing}")
        return cls(alphabets, arr)

    @classmethod
    def constant(cls, alphabets: Alphabets, row: Sequence[float]) -> "Policy":
        """Same decision distribution for every covariate value."""
        nx, _, _, nd = alphabets.shape
        return cls(alphabets, np.tile(np.asarray(row, dtype=np.float64), (nx, 1)))

    @classmethod
    def deterministic(cls, alphabets: Alphabets, choice: Mapping[str, str]) -> "Policy":
        """Point-mass rows: maps each covariate label to one decision label."""
        nx, _, _, nd = alphabets.shape
        arr = np.zeros((nx, nd))
        for x, d in choice.items():
            arr[alphabets.index("X", x), alphabets.index("D", d)] = 1.0
        return cls(alphabets, arr)

    def row(self, x: str) -> np.ndarray:
        return self.rows[self.alphabets.index("X", x)]


@dataclass(frozen=True)
class JointDistribution:
    """Full joint over (covariate, type, group, decision) induced by a policy."""

    alphabets: Alphabets
    mass: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mass, dtype=np.float64)
        if arr.shape != self.alphabets.shape:
            raise ConfigurationError(
                f"joint mass has shape {arr.shape}, expected {self.alphabets.shape}"
            )
        _check_simplex(arr, "joint mass", DATA_TOL)
        object.__setattr__(self, "mass", _frozen(np.clip(arr, 0.0, None)))

    def prob(self, x: str, y: str, g: str, d: str) -> float:
        a = self.alphabets
        return float(
            self.mass[a.index("X", x), a.index("Y", y), a.index("G", g), a.index("D", d)]
        )

    @property
    def group_priors(self) -> np.ndarray:
        return self.mass.sum(axis=(0, 1, 3))


@dataclass(frozen=True)
class DiscreteDistribution:
    """A distribution over a named subset of the joint variables.

    Used for marginals and conditionals; ``axes`` names each array
    dimension with one of "X", "Y", "G", "D".
    """

    axes: tuple[str, ...]
    labels: tuple[tuple[str, ...], ...]
    mass: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mass, dtype=np.float64)
        if arr.shape != tuple(len(ls) for ls in self.labels):
            raise ConfigurationError("distribution mass shape does not match labels")
        _check_simplex(arr, "distribution mass", SOLVER_TOL)
        object.__setattr__(self, "labels", tuple(tuple(ls) for ls in self.labels))
        object.__setattr__(self, "mass", _frozen(arr))

    def prob(self, **assignment: str) -> float:
        """Probability of a full assignment, e.g. ``dist.prob(X="1", Y="0")``."""
        if set(assignment) != set(self.axes):
            raise ConfigurationError(
                f"assignment must cover exactly axes {self.axes}, got {tuple(assignment)}"
            )
        idx = []
        for ax, ls in zip(self.axes, self.labels):
            label = str(assignment[ax])
            if label not in ls:
                raise ConfigurationError(f"label {label!r} is not in the {ax} alphabet {ls}")
            idx.append(ls.index(label))
        return float(self.mass[tuple(idx)])


def induce_joint(mu: PopulationDistribution, a: Policy) -> JointDistribution:
    """Compose a population with a policy into the full joint distribution.

    mass(x, y, g, d) = mu(x, y, g) * a(d | x). The (X, Y, G)-marginal of the
    result is the population itself, by construction.
    """
    mu.alphabets.require_same(a.alphabets, "induce_joint")
    mass = mu.mass[:, :, :, None] * a.rows[:, None, None, :]
    return JointDistribution(mu.alphabets, mass)


def condition_on_group(P: JointDistribution, g: str) -> DiscreteDistribution:
    """The conditional distribution of (X, Y, D) given membership in group g."""
    gi = P.alphabets.index("G", g)
    slab = P.mass[:, :, gi, :]
    pg = float(slab.sum())
    if pg <= 0.0:
        raise UndefinedConditionalError(f"G={g}")
    return DiscreteDistribution(
        axes=("X", "Y", "D"),
        labels=(P.alphabets.covariates, P.alphabets.types, P.alphabets.decisions),
        mass=slab / pg,
    )


def marginal(P: JointDistribution, variables: Iterable[str]) -> DiscreteDistribution:
    """Marginal of the joint over a nonempty subset of {X, Y, G, D}.

    Axes of the result follow the canonical X, Y, G, D order regardless of
    the order given.
    """
    wanted = list(variables)
    if not wanted:
        raise ConfigurationError("marginal requires a nonempty variable subset")
    unknown = [v for v in wanted if v not in VARIABLES]
    if unknown:
        raise ConfigurationError(f"unknown variables {unknown}; expected a subset of {VARIABLES}")
    keep = tuple(v for v in VARIABLES if v in wanted)
    drop_axes = tuple(i for i, v in enumerate(VARIABLES) if v not in keep)
    mass = P.mass.sum(axis=drop_axes) if drop_axes else P.mass
    return DiscreteDistribution(
        axes=keep,
        labels=tuple(P.alphabets.labels(v) for v in keep),
        mass=mass,
    )


def tv_distance(P: JointDistribution, Q: JointDistribution) -> float:
    """Total variation distance between two joints on the same alphabets."""
    P.alphabets.require_same(Q.alphabets, "tv_distance")
    return 0.5 * float(np.abs(P.mass - Q.mass).sum())


def conditional_decision_distribution(
    P: JointDistribution, given: Mapping[str, str]
) -> DiscreteDistribution:
    """Distribution of the decision given an assignment of a subset of {Y, G}.

    The conditioning event must have positive probability; a zero-probability
    event raises rather than returning a default, so callers decide how to
    treat vacuous cases.
    """
    unknown = [v for v in given if v not in ("Y", "G")]
    if unknown:
        raise ConfigurationError(f"can only condition on Y and G, got {unknown}")
    slab = P.mass
    if "Y" in given:
        slab = slab[:, [P.alphabets.index("Y", given["Y"])], :, :]
    if "G" in given:
        slab = slab[:, :, [P.alphabets.index("G", given["G"])], :]
    decision_mass = slab.sum(axis=(0, 1, 2))
    total = float(decision_mass.sum())
    if total <= 0.0:
        desc = ", ".join(f"{k}={v}" for k, v in sorted(given.items()))
        raise UndefinedConditionalError(desc or "(unconditional)")
    return DiscreteDistribution(
        axes=("D",), labels=(P.alphabets.decisions,), mass=decision_mass / total
    )
