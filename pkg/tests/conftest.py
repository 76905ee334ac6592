"""Shared seeded generators for randomized tests.

All randomness flows through explicit numpy Generators so every test is
reproducible; hypothesis-based tests draw a seed and expand it the same
way, which keeps shrinking meaningful.
"""

import numpy as np
import pytest

from fairwelfare import Alphabets, PayoffTable, Policy, PopulationDistribution


def make_alphabets(nx=2, ny=2, ng=2, nd=2) -> Alphabets:
    return Alphabets(
        tuple(str(i) for i in range(nx)),
        tuple(str(i) for i in range(ny)),
        tuple(str(i) for i in range(ng)),
        tuple(str(i) for i in range(nd)),
    )


def random_population(alphabets: Alphabets, rng: np.random.Generator) -> PopulationDistribution:
    nx, ny, ng, _ = alphabets.shape
    mass = rng.dirichlet(np.ones(nx * ny * ng)).reshape(nx, ny, ng)
    return PopulationDistribution(alphabets, mass)


def random_group_population(
    alphabets: Alphabets, rng: np.random.Generator
) -> PopulationDistribution:
    """Random population with X identical to G (group-only covariates)."""
    nx, ny, ng, _ = alphabets.shape
    assert nx == ng and alphabets.covariates == alphabets.groups
    flat = rng.dirichlet(np.ones(ng * ny)).reshape(ng, ny)
    mass = np.zeros((nx, ny, ng))
    for g in range(ng):
        mass[g, :, g] = flat[g]
    return PopulationDistribution(alphabets, mass)


def random_policy(alphabets: Alphabets, rng: np.random.Generator) -> Policy:
    nx, _, _, nd = alphabets.shape
    return Policy(alphabets, rng.dirichlet(np.ones(nd), size=nx))


def random_table(
    alphabets: Alphabets, rng: np.random.Generator, low=0.0, high=1.0
) -> PayoffTable:
    nd, ny = len(alphabets.decisions), len(alphabets.types)
    values = low + (high - low) * rng.random((nd, ny))
    return PayoffTable(alphabets.decisions, alphabets.types, values)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
