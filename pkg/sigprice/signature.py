"""
Truncated signatures of sampled paths.

Two lifts are supported:

- Stratonovich: signature of the piecewise-linear interpolant, i.e. the
  product of per-segment truncated tensor exponentials exp(dx).
- Ito: the discrete left-point lift, i.e. the product of per-step factors
  (1 + dx). Level by level this is <w a, S_{s,t}> = sum_k <w, S_{s,t_k}> dX^a_k.

Both are computed as S <- S (x) F_k over the grid, so Chen's identity holds
for either lift up to accumulation round-off.

Internally levels are stored flat with a leading batch axis, shape
``(P, d**k)``, with letters in C order (the word ``i_1 ... i_k`` sits at
index sum (i_j - 1) d^(k - j)). ``lift_batch`` and ``pair_batch`` operate on
that layout and are what the Monte Carlo engine uses; the public per-path
functions reshape to dense tensors of shape ``(d,) * k``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from sigprice.algebra import WeightedWord, Word, format_word, parse_word
from sigprice.errors import AlphabetMismatchError, DepthError, LiftError, PathError

logger = logging.getLogger(__name__)

MAX_LEVEL_ENTRIES = 10 ** 8


class LiftKind(str, Enum):
    STRATONOVICH = "stratonovich"
    ITO = "ito"


@dataclass(frozen=True)
class SampledPath:
    """Observations of a d-dimensional path on a strictly increasing grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1:
            raise PathError(f"times must be one-dimensional, got shape {times.shape}")
        if values.ndim != 2 or values.shape[1] < 1:
            raise PathError(f"values must have shape (M+1, d) with d >= 1, got {values.shape}")
        if values.shape[0] != times.shape[0]:
            raise PathError(
                f"{times.shape[0]} sample times but {values.shape[0]} sample values"
            )
        if times.shape[0] > 1 and not np.all(np.diff(times) > 0):
            raise PathError("sample times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def n_points(self) -> int:
        return self.times.shape[0]

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)


@dataclass(frozen=True)
class TruncatedSignature:
    """
    Levels 0..depth of the signature of one path over one interval.

    ``levels[k]`` is a dense array of shape ``(dim,) * k``; level 0 is the
    scalar 1. ``kind`` is None only for the identity element.
    """

    depth: int
    dim: int
    levels: Tuple[np.ndarray, ...]
    interval: Tuple[float, float]
    kind: Optional[LiftKind] = None

    def level(self, k: int) -> np.ndarray:
        return self.levels[k]

    def level_norm(self, k: int) -> float:
        """Euclidean (Hilbert-Schmidt) norm of level k."""
        return float(np.sqrt(np.sum(np.square(self.levels[k]))))

    def is_unit(self) -> bool:
        """(1, 0, ..., 0) over a degenerate interval."""
        if self.interval[0] != self.interval[1]:
            return False
        return float(self.levels[0]) == 1.0 and not any(np.any(level) for level in self.levels[1:])


@dataclass(frozen=True)
class DecayReport:
    """Per-level ratios |level k| k! / V^k of the p = 1 decay bound."""

    variation: float
    ratios: Tuple[float, ...] = field(default_factory=tuple)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)

    @property
    def holds(self) -> bool:
        return self.max_ratio <= 1.0 + 1e-12


# ---------- checks ----------

def check_depth(depth: int, dim: int) -> None:
    if depth < 1:
        raise DepthError(f"signature depth must be >= 1, got {depth}")
    if dim ** depth > MAX_LEVEL_ENTRIES:
        raise DepthError(
            f"level {depth} over dimension {dim} has {dim ** depth} entries, "
            f"more than the {MAX_LEVEL_ENTRIES} allowed"
        )


def word_index(word: Word, dim: int) -> int:
    """Flat C-order index of a word inside its level."""
    index = 0
    for letter in word:
        index = index * dim + (letter - 1)
    return index


# ---------- batched kernels ----------

def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)


def _step_factor(dx: np.ndarray, depth: int, kind: LiftKind) -> List[Optional[np.ndarray]]:
    # Level k of exp(dx) is dx^{(x)k}/k!; the Ito step factor stops at level 1.
    factor: List[Optional[np.ndarray]] = [None, dx]
    for k in range(2, depth + 1):
        if kind is LiftKind.ITO:
            factor.append(None)
        else:
            factor.append(_outer(factor[k - 1], dx) / k)
    return factor


def _extend(levels: List[np.ndarray], factor: List[Optional[np.ndarray]]) -> List[np.ndarray]:
    """levels (x) factor, truncated; factor[0] is the implicit 1."""
    depth = len(levels) - 1
    out = [levels[0]]
    for n in range(1, depth + 1):
        acc = levels[n].copy()
        for k in range(1, n + 1):
            if factor[k] is None:
                continue
            if n - k == 0:
                acc += factor[k]
            else:
                acc += _outer(levels[n - k], factor[k])
        out.append(acc)
    return out


def identity_levels(batch: int, dim: int, depth: int) -> List[np.ndarray]:
    return [np.ones((batch, 1))] + [np.zeros((batch, dim ** k)) for k in range(1, depth + 1)]


def lift_batch(values: np.ndarray, depth: int, kind: LiftKind) -> List[np.ndarray]:
    """
    Lift a batch of paths sampled on a common grid.

    Args:
        values: array of shape (P, M+1, d)
        depth: truncation depth N >= 1
        kind: Stratonovich or Ito

    Returns:
        List of N+1 arrays, level k of shape (P, d**k).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3:
        raise PathError(f"batched values must have shape (P, M+1, d), got {values.shape}")
    batch, n_points, dim = values.shape
    if n_points < 2:
        raise PathError(f"a lift needs at least 2 sample points, got {n_points}")
    check_depth(depth, dim)
    kind = LiftKind(kind)

    levels = identity_levels(batch, dim, depth)
    increments = np.diff(values, axis=1)
    for step in range(n_points - 1):
        levels = _extend(levels, _step_factor(increments[:, step, :], depth, kind))
    # level 1 is the increment itself, not a running sum of increments
    levels[1] = values[:, -1, :] - values[:, 0, :]
    return levels


def pair_batch(pi: WeightedWord, levels: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """<pi, S> for every path in a batch of flat levels."""
    if pi.alphabet_size != dim:
        raise AlphabetMismatchError(
            f"weighted word over {pi.alphabet_size} letters paired with a signature over {dim}"
        )
    depth = len(levels) - 1
    batch = levels[0].shape[0]
    out = np.zeros(batch)
    for word, coef in pi.items():
        if len(word) > depth:
            raise DepthError(
                f"word {format_word(word, dim)} has length {len(word)} "
                f"but the signature is truncated at depth {depth}"
            )
        out += coef * levels[len(word)][:, word_index(word, dim)]
    return out


# ---------- per-path operations ----------

def time_enhance(path: SampledPath) -> SampledPath:
    """Prepend time as component 1; original components become 2..d+1."""
    return SampledPath(path.times, np.hstack([path.times[:, None], path.values]))


def _as_signature(flat: List[np.ndarray], dim: int, interval, kind) -> TruncatedSignature:
    levels = []
    for k, level in enumerate(flat):
        dense = level[0].reshape((dim,) * k) if k else np.array(1.0)
        dense.setflags(write=False)
        levels.append(dense)
    return TruncatedSignature(len(flat) - 1, dim, tuple(levels), interval, kind)


def lift(
    path: SampledPath,
    depth: int,
    kind: LiftKind = LiftKind.STRATONOVICH,
    start: int = 0,
    stop: Optional[int] = None,
) -> TruncatedSignature:
    """
    Signature over the grid index range [start, stop] (inclusive indices).
    """
    stop = path.n_points - 1 if stop is None else stop
    if not 0 <= start < stop <= path.n_points - 1:
        raise PathError(
            f"index range [{start}, {stop}] needs at least 2 of the {path.n_points} sample points"
        )
    kind = LiftKind(kind)
    flat = lift_batch(path.values[None, start:stop + 1, :], depth, kind)
    interval = (float(path.times[start]), float(path.times[stop]))
    return _as_signature(flat, path.dim, interval, kind)


def stratonovich_lift(path: SampledPath, depth: int) -> TruncatedSignature:
    return lift(path, depth, LiftKind.STRATONOVICH)


def ito_lift(path: SampledPath, depth: int) -> TruncatedSignature:
    return lift(path, depth, LiftKind.ITO)


def identity_signature(depth: int, dim: int, at: float = 0.0) -> TruncatedSignature:
    """The unit (1, 0, ..., 0) over the degenerate interval [at, at]."""
    check_depth(depth, dim)
    return _as_signature(identity_levels(1, dim, depth), dim, (at, at), None)


def chen_combine(a: TruncatedSignature, b: TruncatedSignature) -> TruncatedSignature:
    """Truncated tensor product z_n = sum_k a_k (x) b_{n-k}."""
    if a.depth != b.depth:
        raise DepthError(f"cannot combine signatures of depth {a.depth} and {b.depth}")
    if a.dim != b.dim:
        raise AlphabetMismatchError(f"cannot combine signatures over {a.dim} and {b.dim} letters")
    is_unit_a = a.is_unit()
    is_unit_b = b.is_unit()
    if not (is_unit_a or is_unit_b) and not math.isclose(
        a.interval[1], b.interval[0], rel_tol=1e-12, abs_tol=1e-12
    ):
        raise PathError(f"interval {a.interval} does not end where {b.interval} starts")
    if a.kind is not None and b.kind is not None and a.kind != b.kind:
        raise LiftError(f"cannot combine a {a.kind.value} lift with a {b.kind.value} lift")

    levels = []
    for n in range(a.depth + 1):
        acc = np.zeros((a.dim,) * n) if n else np.array(0.0)
        for k in range(n + 1):
            acc = acc + np.multiply.outer(a.levels[k], b.levels[n - k])
        acc.setflags(write=False)
        levels.append(acc)
    start = b.interval[0] if is_unit_a else a.interval[0]
    end = a.interval[1] if is_unit_b else b.interval[1]
    return TruncatedSignature(a.depth, a.dim, tuple(levels), (start, end), a.kind or b.kind)


def pair(pi: WeightedWord, sig: TruncatedSignature) -> float:
    """<pi, sig>: linear extension of reading the entry indexed by each word."""
    if pi.alphabet_size != sig.dim:
        raise AlphabetMismatchError(
            f"weighted word over {pi.alphabet_size} letters paired with a signature over {sig.dim}"
        )
    total = 0.0
    for word, coef in pi.items():
        if len(word) > sig.depth:
            raise DepthError(
                f"word {format_word(word, sig.dim)} has length {len(word)} "
                f"but the signature is truncated at depth {sig.depth}"
            )
        entry = sig.levels[len(word)][tuple(letter - 1 for letter in word)] if word else 1.0
        total += coef * float(entry)
    return total


def total_variation(path: SampledPath) -> float:
    """1-variation of the piecewise-linear interpolant (Euclidean norm)."""
    return float(np.sum(np.linalg.norm(path.increments(), axis=1)))


def decay_check(sig: TruncatedSignature, path: SampledPath) -> DecayReport:
    """
    Check |level k| <= V^k / k! for the p = 1 specialisation of the
    extension bound, V being the 1-variation of the interpolant.
    """
    if sig.kind is LiftKind.ITO:
        logger.warning("decay_check is stated for Stratonovich lifts; got an Ito lift")
    variation = total_variation(path)
    ratios = []
    for k in range(1, sig.depth + 1):
        if variation == 0.0:
            ratios.append(0.0)
            continue
        ratios.append(sig.level_norm(k) * math.factorial(k) / variation ** k)
    return DecayReport(variation=variation, ratios=tuple(ratios))


def signature_rows(sig: TruncatedSignature) -> List[Tuple[int, str, float]]:
    """``(level, word, value)`` rows in graded-lex order."""
    rows = [(0, "e", 1)]
    for k in range(1, sig.depth + 1):
        flat = sig.levels[k].reshape(-1)
        for index, letters in enumerate(itertools.product(range(1, sig.dim + 1), repeat=k)):
            rows.append((k, format_word(letters, sig.dim), float(flat[index])))
    return rows


def signature_from_rows(
    rows: Sequence[Tuple[int, str, float]],
    dim: int,
    interval: Tuple[float, float],
    kind: Optional[LiftKind],
) -> TruncatedSignature:
    """
    Inverse of ``signature_rows`` (rows must be complete and graded-lex).

    The rows carry neither the interval nor the lift kind, so the caller
    supplies both; Chen's identity checks them.
    """
    depth = max(level for level, _, _ in rows)
    flat = [np.ones((1, 1))] + [np.zeros((1, dim ** k)) for k in range(1, depth + 1)]

    for level, word_text, value in rows:
        if level == 0:
            continue
        word = parse_word(word_text, dim)
        flat[level][0, word_index(word, dim)] = value
    return _as_signature(flat, dim, interval, LiftKind(kind) if kind else None)
