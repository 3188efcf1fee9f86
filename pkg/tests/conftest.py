"""Shared fixtures: seeded random spaces and Katetov maps."""
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from src.config import load_settings
from src.katetov import feasible_interval, katetov_extend
from src.ratmetric import FiniteMetricSpace

SEED = load_settings().seed


def random_space(rng: random.Random, n: int, max_weight: int = 4, denom: int = 1) -> FiniteMetricSpace:
    """Shortest-path closure of random positive integer weights on the complete graph."""
    w = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = rng.randint(1, max_weight)
    for k in range(n):
        w = np.minimum(w, w[:, k:k + 1] + w[k:k + 1, :])
    return FiniteMetricSpace(w, denom)


def random_katetov(rng: random.Random, space: FiniteMetricSpace, max_value: int = 4):
    """Katetov extension of random feasible integer values on a random nonempty subset."""
    size = rng.randint(1, space.n)
    subset = sorted(rng.sample(range(space.n), size))
    values = []
    for k, x in enumerate(subset):
        if k == 0:
            values.append(Fraction(rng.randint(1, max_value)))
            continue
        interval = feasible_interval(space, subset[:k], values, x)
        low = max(math.ceil(interval.lower), 1)
        high = math.floor(interval.upper)
        values.append(Fraction(rng.randint(low, high)) if low <= high else interval.lower)
    return katetov_extend(space, subset, values)


@pytest.fixture
def rng():
    return random.Random(SEED)


@pytest.fixture
def make_space(rng):
    return lambda n, max_weight=4, denom=1: random_space(rng, n, max_weight, denom)


@pytest.fixture
def make_katetov(rng):
    return lambda space, max_value=4: random_katetov(rng, space, max_value)


@pytest.fixture
def equilateral():
    return FiniteMetricSpace(np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]]))


@pytest.fixture
def forced_config():
    """x0, x1 at distance 1 and x at 1/2 from both."""
    return FiniteMetricSpace.from_rows([
        [0, 1, '1/2'],
        [1, 0, '1/2'],
        ['1/2', '1/2', 0],
    ])


@pytest.fixture
def triangle_112():
    return FiniteMetricSpace(np.array([[0, 1, 1], [1, 0, 2], [1, 2, 0]]))
