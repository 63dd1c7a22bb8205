"""
Exact simulation of the driving processes and closed-form moment oracles.

Randomness: path k under base seed s draws from
``Generator(Philox(SeedSequence(s, spawn_key=(k,))))``. Philox is a
counter-based generator and the spawn key is the standard SeedSequence
stream split, so a path depends only on (spec, grid, s, k) and never on how
paths are grouped into batches or spread over workers.

Batched arithmetic is written with elementwise numpy operations only, so a
row's values do not depend on the batch it was computed in.
"""

from __future__ import annotations

import logging
import math
from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy.special import expit

from sigprice.algebra import Word
from sigprice.errors import SimulationError
from sigprice.models import BrownianSpec, LogisticOUSpec, OUSpec, ProcessSpec, SimulationGrid
from sigprice.signature import SampledPath

logger = logging.getLogger(__name__)

SEED_LIMIT = 2 ** 64


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Independent generator for path ``index`` under ``seed``."""
    if not 0 <= seed < SEED_LIMIT:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _standard_normals(seed: int, indices: Sequence[int], steps: int, dim: int) -> np.ndarray:
    out = np.empty((len(indices), steps, dim))
    for row, index in enumerate(indices):
        out[row] = path_generator(seed, index).standard_normal((steps, dim))
    return out


# ---------- Brownian motion ----------

def brownian_cholesky(spec: BrownianSpec) -> np.ndarray:
    try:
        return np.linalg.cholesky(spec.correlation_matrix())
    except np.linalg.LinAlgError as e:
        raise SimulationError(f"correlation matrix is not positive definite: {e}") from e


def _simulate_bm_batch(spec: BrownianSpec, grid: SimulationGrid, seed: int, indices) -> np.ndarray:
    chol = brownian_cholesky(spec)
    z = _standard_normals(seed, indices, grid.steps, spec.dim)
    scale = math.sqrt(grid.dt)
    increments = np.zeros_like(z)
    for i in range(spec.dim):
        for j in range(i + 1):
            if chol[i, j] != 0.0:
                increments[:, :, i] += chol[i, j] * z[:, :, j]
    increments *= scale

    values = np.empty((len(indices), grid.steps + 1, spec.dim))
    values[:, 0, :] = spec.initial_values()
    values[:, 1:, :] = spec.initial_values() + np.cumsum(increments, axis=1)
    return values


# ---------- Ornstein-Uhlenbeck ----------

def ou_step_factor(spec: OUSpec, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Decay factors e^{-a_i dt} and the lower Cholesky factor of the exact
    one-step covariance of the pair.
    """
    a1, a2 = spec.mean_reversion
    s1, s2 = spec.volatility
    var1 = s1 * s1 * -math.expm1(-2.0 * a1 * dt) / (2.0 * a1)
    var2 = s2 * s2 * -math.expm1(-2.0 * a2 * dt) / (2.0 * a2)
    cov = spec.correlation * s1 * s2 * -math.expm1(-(a1 + a2) * dt) / (a1 + a2)

    l11 = math.sqrt(var1)
    l21 = cov / l11 if l11 > 0.0 else 0.0
    # rounding can push this slightly negative when |rho| = 1
    l22 = math.sqrt(max(var2 - l21 * l21, 0.0))
    decay = np.array([math.exp(-a1 * dt), math.exp(-a2 * dt)])
    return decay, np.array([[l11, 0.0], [l21, l22]])


def _simulate_ou_batch(spec: OUSpec, grid: SimulationGrid, seed: int, indices) -> np.ndarray:
    decay, chol = ou_step_factor(spec, grid.dt)
    z = _standard_normals(seed, indices, grid.steps, 2)
    values = np.empty((len(indices), grid.steps + 1, 2))
    values[:, 0, :] = spec.initial
    for k in range(grid.steps):
        prev = values[:, k, :]
        values[:, k + 1, 0] = prev[:, 0] * decay[0] + chol[0, 0] * z[:, k, 0]
        values[:, k + 1, 1] = prev[:, 1] * decay[1] + chol[1, 0] * z[:, k, 0] + chol[1, 1] * z[:, k, 1]
    return values


def simulate_batch(
    spec: ProcessSpec, grid: SimulationGrid, seed: int, indices: Iterable[int]
) -> np.ndarray:
    """
    Simulate the paths with the given indices.

    Returns:
        Array of shape (len(indices), M+1, d).
    """
    indices = list(indices)
    if isinstance(spec, BrownianSpec):
        return _simulate_bm_batch(spec, grid, seed, indices)
    if isinstance(spec, OUSpec):
        return _simulate_ou_batch(spec, grid, seed, indices)
    if isinstance(spec, LogisticOUSpec):
        return expit(_simulate_ou_batch(spec.ou, grid, seed, indices) + np.asarray(spec.shifts))
    raise TypeError(f"unsupported process spec {type(spec).__name__}")


def simulate_path(spec: ProcessSpec, grid: SimulationGrid, seed: int, index: int = 0) -> SampledPath:
    return SampledPath(grid.times(), simulate_batch(spec, grid, seed, [index])[0])


def simulate_bm(spec: BrownianSpec, grid: SimulationGrid, seed: int, index: int = 0) -> SampledPath:
    """One Brownian path with exact Gaussian increments of covariance dt * correlation."""
    return simulate_path(spec, grid, seed, index)


def simulate_ou(spec: OUSpec, grid: SimulationGrid, seed: int, index: int = 0) -> SampledPath:
    """One path of the OU pair, sampled from the exact Gaussian transition."""
    return simulate_path(spec, grid, seed, index)


# ---------- moment oracles ----------

def _double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def bm_integral_moment(t: float, n: int) -> float:
    """
    n-th moment of <21 - 31, Y> for Y = (t, B^1, B^2) with independent
    components: ((2/3) t^3)^{n/2} (n-1)!! for even n, 0 for odd n.
    """
    if n < 0:
        raise ValueError(f"moment order must be >= 0, got {n}")
    if n % 2:
        return 0.0
    return (2.0 / 3.0 * t ** 3) ** (n // 2) * _double_factorial(n - 1)


def expected_bm_signature_word(word: Word, t: float, time_enhanced: bool = True) -> float:
    """
    Expected Stratonovich signature entry of Brownian motion,
    (t/2)^{n/2} / (n/2)! if the word is a concatenation of repeated-letter
    pairs, 0 otherwise.

    With ``time_enhanced`` the word is over (t, B^1, ..., B^d); letter 1 is
    time and is rejected, letters 2.. are remapped to 1...
    """
    letters = tuple(word)
    if time_enhanced:
        if any(letter == 1 for letter in letters):
            raise ValueError(
                f"word {letters} contains the time letter; only Brownian letters are supported"
            )
        letters = tuple(letter - 1 for letter in letters)
    n = len(letters)
    if n % 2:
        return 0.0
    for j in range(0, n, 2):
        if letters[j] != letters[j + 1]:
            return 0.0
    half = n // 2
    return (t / 2.0) ** half / math.factorial(half)


def gaussian_moment(mu: float, sigma: float, n: int) -> float:
    """E[Z^n] for Z ~ Normal(mu, sigma^2), via M_n = mu M_{n-1} + (n-1) sigma^2 M_{n-2}."""
    if n < 0:
        raise ValueError(f"moment order must be >= 0, got {n}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    prev, cur = 0.0, 1.0
    var = sigma * sigma
    for k in range(1, n + 1):
        prev, cur = cur, mu * cur + (k - 1) * var * prev
    return cur


def _overlap_integral(a: float, b: float, t: float) -> float:
    # int_0^t (1 - e^{-a v})(1 - e^{-b v}) dv
    return (
        t
        + math.expm1(-a * t) / a
        + math.expm1(-b * t) / b
        - math.expm1(-(a + b) * t) / (a + b)
    )


def ou_Z_stats(spec: OUSpec, t: float) -> Tuple[float, float]:
    """
    Mean and variance of Z_t = int_0^t (Y^1_s - Y^2_s) ds.

    The variance includes the covariance of the two stochastic integrals,
    which is proportional to the driver correlation.
    """
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    a1, a2 = spec.mean_reversion
    s1, s2 = spec.volatility
    y1, y2 = spec.initial
    mu = y1 / a1 * -math.expm1(-a1 * t) - y2 / a2 * -math.expm1(-a2 * t)
    c1 = s1 / a1
    c2 = s2 / a2
    var = (
        c1 * c1 * _overlap_integral(a1, a1, t)
        - 2.0 * c1 * c2 * spec.correlation * _overlap_integral(a1, a2, t)
        + c2 * c2 * _overlap_integral(a2, a2, t)
    )
    return mu, max(var, 0.0)


def ou_spread_moment(spec: OUSpec, t: float, n: int) -> float:
    """Exact n-th moment of Z_t = int_0^t (Y^1 - Y^2) ds."""
    mu, var = ou_Z_stats(spec, t)
    return gaussian_moment(mu, math.sqrt(var), n)
