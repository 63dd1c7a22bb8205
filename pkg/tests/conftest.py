"""Shared fixtures: seeded random paths and weighted words."""

import numpy as np
import pytest

from sigprice.algebra import WeightedWord
from sigprice.signature import SampledPath


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_random_path(rng, n_points: int, dim: int, scale: float = 1.0) -> SampledPath:
    times = np.cumsum(rng.uniform(0.1, 1.0, n_points))
    values = np.cumsum(rng.normal(0.0, scale, (n_points, dim)), axis=0)
    return SampledPath(times - times[0], values)


def make_random_word(rng, alphabet_size: int, max_length: int, n_terms: int = 3, integer: bool = False) -> WeightedWord:
    terms = []
    for _ in range(n_terms):
        length = int(rng.integers(0, max_length + 1))
        word = tuple(int(letter) for letter in rng.integers(1, alphabet_size + 1, length))
        coef = float(rng.integers(-3, 4)) if integer else float(rng.normal())
        terms.append((word, coef))
    return WeightedWord(alphabet_size, terms)


@pytest.fixture
def random_path(rng):
    return lambda n_points=6, dim=2, scale=1.0: make_random_path(rng, n_points, dim, scale)


@pytest.fixture
def random_word(rng):
    return lambda alphabet_size=2, max_length=2, n_terms=3, integer=False: make_random_word(
        rng, alphabet_size, max_length, n_terms, integer
    )
