"""
Monte Carlo estimation of signature correlators
rho_m = E[prod_i <pi_i, sig>^{m_i}].

Paths are processed in fixed-size chunks on a thread pool. Each path has its
own generator and each per-path value is stored at its index, then reduced
with ``math.fsum`` (exactly rounded, so independent of summation order).
Results are therefore bit-identical for any number of threads.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from sigprice.algebra import WeightedWord, shuffle, shuffle_power
from sigprice.errors import AlphabetMismatchError, DepthError, LiftError
from sigprice.models import ProcessSpec, SimulationGrid
from sigprice.settings import RuntimeSettings, load_settings
from sigprice.signature import LiftKind, SampledPath, lift, lift_batch, pair, pair_batch
from sigprice.stochastic import simulate_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrelatorRequest:
    """Words pi_1..pi_n, exponents m, lift kind and lift depth."""

    words: Tuple[WeightedWord, ...]
    multi_index: Tuple[int, ...]
    lift: LiftKind = LiftKind.STRATONOVICH
    depth: Optional[int] = None
    time_enhanced: bool = True

    def __post_init__(self):
        words = tuple(self.words)
        index = tuple(int(m) for m in self.multi_index)
        if not words:
            raise ValueError("a correlator request needs at least one word")
        if len(index) != len(words):
            raise ValueError(f"{len(words)} words but multi_index has {len(index)} entries")
        if min(index) < 0:
            raise ValueError(f"multi_index entries must be >= 0, got {index}")
        alphabets = {pi.alphabet_size for pi in words}
        if len(alphabets) != 1:
            raise AlphabetMismatchError(f"request mixes alphabets {sorted(alphabets)}")
        depth = self.depth if self.depth is not None else max(1, max(pi.max_length() for pi in words))
        for pi in words:
            if pi.max_length() > depth:
                raise DepthError(f"word {pi} needs depth {pi.max_length()}, request depth is {depth}")
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "multi_index", index)
        object.__setattr__(self, "lift", LiftKind(self.lift))
        object.__setattr__(self, "depth", depth)

    @property
    def alphabet_size(self) -> int:
        return self.words[0].alphabet_size


@dataclass(frozen=True)
class CorrelatorEstimate:
    value: float
    std_error: float
    n_paths: int


@dataclass(frozen=True)
class CostReport:
    linearized_depth: int
    direct_depth: int
    linearized_seconds: float
    direct_seconds: float


# ---------- engine ----------

def _chunks(n_paths: int, chunk_size: int) -> List[Tuple[int, int]]:
    return [(start, min(start + chunk_size, n_paths)) for start in range(0, n_paths, chunk_size)]


def pairing_samples(
    process: ProcessSpec,
    grid: SimulationGrid,
    words: Sequence[WeightedWord],
    depth: int,
    lift_kind: LiftKind,
    n_paths: int,
    seed: int,
    time_enhanced: bool = True,
    settings: Optional[RuntimeSettings] = None,
) -> np.ndarray:
    """
    <pi_j, sig(path_k)> for every path k < n_paths and word j.

    Returns:
        Array of shape (n_paths, len(words)).
    """
    settings = settings or load_settings()
    alphabet = process.path_dim + (1 if time_enhanced else 0)
    for pi in words:
        if pi.alphabet_size != alphabet:
            raise AlphabetMismatchError(
                f"word {pi} is over {pi.alphabet_size} letters, the "
                f"{'time-enhanced ' if time_enhanced else ''}path has {alphabet}"
            )
        if pi.max_length() > depth:
            raise DepthError(f"word {pi} has length {pi.max_length()} but the lift depth is {depth}")
    times = grid.times()

    def run_chunk(bounds: Tuple[int, int]) -> Tuple[Tuple[int, int], np.ndarray]:
        start, stop = bounds
        values = simulate_batch(process, grid, seed, range(start, stop))
        if time_enhanced:
            clock = np.broadcast_to(times[None, :, None], (stop - start, times.shape[0], 1))
            values = np.concatenate([clock, values], axis=2)
        levels = lift_batch(values, depth, lift_kind)
        return bounds, np.column_stack([pair_batch(pi, levels, alphabet) for pi in words])

    out = np.empty((n_paths, len(words)))
    chunks = _chunks(n_paths, settings.chunk_size)
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        results = pool.map(run_chunk, chunks)
        if settings.show_progress:
            results = tqdm(results, total=len(chunks), desc="paths", unit="chunk")
        for (start, stop), block in results:
            out[start:stop] = block
    logger.info(
        "Simulated and lifted %d paths (%s, depth %d, %d threads)",
        n_paths, LiftKind(lift_kind).value, depth, settings.threads,
    )
    return out


def summarize(values: np.ndarray) -> CorrelatorEstimate:
    """Sample mean and standard error (ddof = 1) with exactly rounded sums."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mean = math.fsum(values) / n
    var = math.fsum(np.square(values - mean)) / (n - 1)
    return CorrelatorEstimate(value=mean, std_error=math.sqrt(var / n), n_paths=n)


def monomial_samples(samples: np.ndarray, multi_index: Sequence[int]) -> np.ndarray:
    out = np.ones(samples.shape[0])
    for j, power in enumerate(multi_index):
        if power:
            out = out * samples[:, j] ** power
    return out


def correlators_from_samples(
    samples: np.ndarray, multi_indices: Sequence[Sequence[int]]
) -> List[CorrelatorEstimate]:
    """One estimate per multi-index, all on the same pairing samples."""
    estimates = []
    for index in multi_indices:
        if not any(index):
            estimates.append(CorrelatorEstimate(1.0, 0.0, samples.shape[0]))
        else:
            estimates.append(summarize(monomial_samples(samples, index)))
    return estimates


# ---------- public operations ----------

def estimate_correlator(
    process: ProcessSpec,
    grid: SimulationGrid,
    request: CorrelatorRequest,
    n_paths: int,
    seed: int,
    settings: Optional[RuntimeSettings] = None,
    linearized: bool = False,
) -> CorrelatorEstimate:
    """
    Monte Carlo estimate of rho_m.

    With ``linearized`` the monomial is read off as a single pairing
    <shuffle_linearize(request), sig> on a deeper lift (geometric lifts only).
    """
    if n_paths < 2:
        raise ValueError(f"n_paths must be >= 2, got {n_paths}")
    if not any(request.multi_index):
        return CorrelatorEstimate(1.0, 0.0, n_paths)
    if linearized:
        phi = shuffle_linearize(request)
        samples = pairing_samples(
            process, grid, [phi], max(1, phi.max_length()), request.lift,
            n_paths, seed, request.time_enhanced, settings,
        )
        return summarize(samples[:, 0])
    samples = pairing_samples(
        process, grid, request.words, request.depth, request.lift,
        n_paths, seed, request.time_enhanced, settings,
    )
    return correlators_from_samples(samples, [request.multi_index])[0]


def estimate_correlators(
    process: ProcessSpec,
    grid: SimulationGrid,
    words: Sequence[WeightedWord],
    multi_indices: Sequence[Sequence[int]],
    n_paths: int,
    seed: int,
    lift_kind: LiftKind = LiftKind.STRATONOVICH,
    depth: Optional[int] = None,
    time_enhanced: bool = True,
    settings: Optional[RuntimeSettings] = None,
) -> List[CorrelatorEstimate]:
    """Several correlators over the same words, sharing one set of simulated paths."""
    if n_paths < 2:
        raise ValueError(f"n_paths must be >= 2, got {n_paths}")
    for index in multi_indices:
        if len(index) != len(words):
            raise ValueError(f"multi-index {tuple(index)} does not match {len(words)} words")
    depth = depth or max(1, max(pi.max_length() for pi in words))
    samples = pairing_samples(
        process, grid, words, depth, lift_kind, n_paths, seed, time_enhanced, settings
    )
    return correlators_from_samples(samples, multi_indices)


def shuffle_linearize(request: CorrelatorRequest) -> WeightedWord:
    """
    phi = shuffle over i of pi_i^{shuffle m_i}, so that <phi, sig> equals the
    monomial prod_i <pi_i, sig>^{m_i} on geometric lifts.
    """
    if request.lift is not LiftKind.STRATONOVICH:
        raise LiftError(
            "shuffle linearization needs a geometric lift; products of Ito pairings "
            "are not pairings with shuffle products"
        )
    phi = WeightedWord.unit(request.alphabet_size)
    for pi, power in zip(request.words, request.multi_index):
        phi = shuffle(phi, shuffle_power(pi, power))
    return phi


def linearized_depth(request: CorrelatorRequest) -> int:
    return sum(m * pi.max_length() for pi, m in zip(request.words, request.multi_index))


def direct_depth(request: CorrelatorRequest) -> int:
    return max(pi.max_length() for pi in request.words)


def cost_report(request: CorrelatorRequest, path: SampledPath) -> CostReport:
    """
    Depth needed by the linearized and direct routes, with wall time of
    each route measured on one sample path.
    """
    lin_depth = linearized_depth(request)
    dir_depth = direct_depth(request)

    started = time.perf_counter()
    sig = lift(path, max(dir_depth, 1), request.lift)
    math.prod(pair(pi, sig) ** m for pi, m in zip(request.words, request.multi_index))
    direct_seconds = time.perf_counter() - started

    started = time.perf_counter()
    phi = WeightedWord.unit(request.alphabet_size)
    for pi, power in zip(request.words, request.multi_index):
        phi = shuffle(phi, shuffle_power(pi, power))
    pair(phi, lift(path, max(lin_depth, 1), request.lift))
    linearized_seconds = time.perf_counter() - started

    return CostReport(lin_depth, dir_depth, linearized_seconds, direct_seconds)
