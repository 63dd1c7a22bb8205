"""
Polynomial approximation of payoff functions.

A payoff F of the signature is approximated by f_N(<pi_1, X>, ..., <pi_n, X>)
with f_N a polynomial in n variables. This module builds f_N for the
catalogue functions (Taylor, Hermite, Bernstein, smoothed max), evaluates it,
and checks the coefficient-decay condition together with its remainder
bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.special import bernoulli, expit, lambertw
from scipy.stats import norm

from sigprice.algebra import WeightedWord
from sigprice.errors import QuadratureError

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]
ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class MultiIndexPolynomial:
    """sum_m alpha_m x^m over a finite set of multi-indices m in N^n."""

    n_vars: int
    terms: Mapping[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_vars < 1:
            raise ValueError(f"n_vars must be >= 1, got {self.n_vars}")
        clean: Dict[MultiIndex, float] = {}
        for index, coef in dict(self.terms).items():
            index = tuple(int(i) for i in index)
            if len(index) != self.n_vars or min(index) < 0:
                raise ValueError(f"multi-index {index} is not in N^{self.n_vars}")
            if not math.isfinite(coef):
                raise ValueError(f"coefficient of {index} is not finite: {coef}")
            clean[index] = float(coef)
        ordered = {m: clean[m] for m in sorted(clean, key=lambda m: (sum(m), m))}
        object.__setattr__(self, "terms", MappingProxyType(ordered))

    @classmethod
    def univariate(cls, coefficients: Sequence[float]) -> "MultiIndexPolynomial":
        """Polynomial sum_k c_k x^k (zero coefficients dropped)."""
        return cls(1, {(k,): c for k, c in enumerate(coefficients) if c != 0.0})

    def coefficient(self, index: MultiIndex) -> float:
        return self.terms.get(tuple(index), 0.0)

    def univariate_coefficients(self) -> np.ndarray:
        if self.n_vars != 1:
            raise ValueError(f"polynomial has {self.n_vars} variables, expected 1")
        out = np.zeros(self.degree() + 1)
        for (k,), coef in self.terms.items():
            out[k] = coef
        return out

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def __call__(self, x: ArrayLike):
        return eval_poly(self, x)


def eval_poly(poly: MultiIndexPolynomial, x: ArrayLike):
    """
    Evaluate at one point (shape (n,)) or at a batch of points (shape (P, n)).

    Univariate polynomials also accept scalars and 1-d batches.
    """
    x = np.asarray(x, dtype=np.float64)
    # a univariate point may come as a scalar or as shape (1,)
    scalar = x.ndim == 0 or (x.shape == (1,) and poly.n_vars == 1)
    if poly.n_vars == 1 and x.ndim <= 1:
        x = x.reshape(-1, 1)
    if x.shape[-1] != poly.n_vars:
        raise ValueError(f"point has dimension {x.shape[-1]}, polynomial has {poly.n_vars} variables")
    total = np.zeros(x.shape[:-1])
    for index, coef in poly.terms.items():
        monomial = np.ones(x.shape[:-1])
        for i, power in enumerate(index):
            if power:
                monomial = monomial * x[..., i] ** power
        total = total + coef * monomial
    if scalar or total.ndim == 0:
        return float(total.reshape(-1)[0])
    return total


def shift_polynomial(poly: MultiIndexPolynomial, shift: float) -> MultiIndexPolynomial:
    """Re-expand x -> p(x - shift) in powers of x (univariate)."""
    coefficients = poly.univariate_coefficients()
    out = np.zeros_like(coefficients)
    for j, c in enumerate(coefficients):
        if c == 0.0:
            continue
        for i in range(j + 1):
            out[i] += c * math.comb(j, i) * (-shift) ** (j - i)
    return MultiIndexPolynomial.univariate(out)


def product_polynomial(*factors: MultiIndexPolynomial) -> MultiIndexPolynomial:
    """Tensor product of univariate polynomials: p_1(x_1) p_2(x_2) ..."""
    terms: Dict[MultiIndex, float] = {(): 1.0}
    for factor in factors:
        coefficients = factor.univariate_coefficients()
        terms = {
            index + (k,): coef * c
            for index, coef in terms.items()
            for k, c in enumerate(coefficients)
            if c != 0.0
        }
    return MultiIndexPolynomial(len(factors), terms)


# ---------- Taylor ----------

TAYLOR_CATALOG = ("exp", "sigmoid_smoothmax")


def taylor_series(fn_id: str, order: int, smoothing: float = 1.0) -> MultiIndexPolynomial:
    """
    Maclaurin polynomial of a catalogue function.

    Args:
        fn_id: ``exp`` or ``sigmoid_smoothmax`` (x * sigmoid(smoothing * x))
        order: highest power k >= 0 (for the smoothed max, the series order
            M, i.e. powers up to M + 1)
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if fn_id == "exp":
        return MultiIndexPolynomial.univariate([1.0 / math.factorial(k) for k in range(order + 1)])
    if fn_id == "sigmoid_smoothmax":
        return smoothmax_series(smoothing, order).poly
    raise ValueError(f"unknown Taylor catalogue id {fn_id!r}; expected one of {TAYLOR_CATALOG}")


def taylor_remainder(fn_id: str, order: int, x: float) -> Optional[float]:
    """Lagrange remainder bound, where a derivative bound is known (``exp`` only)."""
    if fn_id == "exp":
        return math.exp(max(x, 0.0)) * abs(x) ** (order + 1) / math.factorial(order + 1)
    if fn_id in TAYLOR_CATALOG:
        return None
    raise ValueError(f"unknown Taylor catalogue id {fn_id!r}")


# ---------- Hermite ----------

def hermite_basis(order: int, x: ArrayLike) -> np.ndarray:
    """
    Orthonormal probabilists' Hermite functions e_0..e_order at x.

    e_n = He_n / sqrt(n!), from e_{n+1} = (x e_n - sqrt(n) e_{n-1}) / sqrt(n+1).
    Returns an array of shape (order + 1, *x.shape).
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((order + 1,) + x.shape)
    out[0] = 1.0
    if order >= 1:
        out[1] = x
    for n in range(1, order):
        out[n + 1] = (x * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def call_payoff(strike: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.maximum(np.asarray(x) - strike, 0.0)


QUAD_LIMITS = (100, 200, 400)
QUAD_TOLERANCE = 1e-10


def _coefficient(integrand, lower: float) -> float:
    previous = None
    for limit in QUAD_LIMITS:
        value, abserr = integrate.quad(
            integrand, lower, np.inf, limit=limit, epsabs=1e-13, epsrel=1e-12
        )
        if abserr <= QUAD_TOLERANCE * max(abs(value), 1.0):
            return value
        if previous is not None and abs(value - previous) <= QUAD_TOLERANCE * max(abs(value), 1.0):
            return value
        previous = value
    raise QuadratureError(
        f"quadrature did not converge: estimate {value!r}, error {abserr!r} after limit={limit}"
    )


def hermite_coeffs(
    strike: float,
    order: int,
    payoff: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """
    alpha_n = <f, e_n> in L^2 of the standard Gaussian, n = 0..order.

    By default f(x) = max(x - strike, 0) and the integral runs over
    [strike, inf). A custom ``payoff`` is integrated over the whole line.
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if payoff is None:
        f = call_payoff(strike)
        lower = strike
    else:
        f = payoff
        lower = -np.inf

    coeffs = np.empty(order + 1)
    for n in range(order + 1):
        def integrand(x, n=n):
            return float(f(x)) * hermite_basis(n, x)[n] * norm.pdf(x)

        if lower == -np.inf:
            coeffs[n] = _coefficient(lambda x, g=integrand: g(-x), 0.0) + _coefficient(integrand, 0.0)
        else:
            coeffs[n] = _coefficient(integrand, lower)
    logger.debug("Hermite coefficients (K=%s, N=%d): %s", strike, order, coeffs)
    return coeffs


def hermite_eval(coeffs: Sequence[float], order: Optional[int], x: ArrayLike):
    """sum_{n <= order} alpha_n e_n(x); ``order=None`` uses every coefficient."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    order = len(coeffs) - 1 if order is None else min(order, len(coeffs) - 1)
    basis = hermite_basis(order, x)
    value = np.tensordot(coeffs[: order + 1], basis, axes=(0, 0))
    return float(value) if np.ndim(value) == 0 else value


def hermite_l2_error(strike: float, coeffs: Sequence[float]) -> float:
    """
    Squared L^2 truncation error ||f||^2 - sum alpha_n^2 for the call payoff
    (Parseval), with ||f||^2 = E[max(Z - K, 0)^2] in closed form.
    """
    k = strike
    norm_sq = (1.0 + k * k) * norm.sf(k) - k * norm.pdf(k)
    return float(norm_sq - np.sum(np.square(coeffs)))


# ---------- Bernstein ----------

def bernstein_approx(f_samples: Sequence[float], x: ArrayLike):
    """
    B_n(f)(x) = sum_{k=0}^{n} f(k/n) C(n, k) x^k (1 - x)^{n-k}.

    ``f_samples`` holds f(k/n) for k = 0..n.
    """
    samples = np.asarray(f_samples, dtype=np.float64)
    n = samples.shape[0] - 1
    if n < 1:
        raise ValueError(f"need f(k/n) for k = 0..n with n >= 1, got {samples.shape[0]} samples")
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("Bernstein polynomials are defined on [0, 1]")
    total = np.zeros(x.shape)
    for k in range(n + 1):
        total = total + samples[k] * math.comb(n, k) * np.power(x, k) * np.power(1.0 - x, n - k)
    return float(total) if total.ndim == 0 else total


# ---------- smoothed max ----------

@dataclass(frozen=True)
class SmoothMaxSeries:
    poly: MultiIndexPolynomial
    smoothing: float
    order: int

    @property
    def radius(self) -> float:
        return math.pi / self.smoothing


def euler_zero_values(count: int) -> np.ndarray:
    """E_n(0) for n = 0..count-1, from E_n(0) = 2 (1 - 2^{n+1}) B_{n+1} / (n+1)."""
    b = bernoulli(count + 1)
    out = np.empty(count)
    for n in range(count):
        out[n] = 1.0 if n == 0 else 2.0 * (1.0 - 2.0 ** (n + 1)) * b[n + 1] / (n + 1)
    return out


def smoothmax_series(smoothing: float, order: int) -> SmoothMaxSeries:
    """
    Maclaurin series of x * sigmoid(N x) up to x^{M+1}:

        sum_{n=0}^{M} (-1)^n E_n(0) N^n x^{n+1} / (2 n!)

    It converges for |x| < pi / N.
    """
    if smoothing <= 0:
        raise ValueError(f"smoothing must be > 0, got {smoothing}")
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    euler = euler_zero_values(order + 1)
    coefficients = np.zeros(order + 2)
    for n in range(order + 1):
        coefficients[n + 1] = (-1) ** n * euler[n] * smoothing ** n / (2.0 * math.factorial(n))
    return SmoothMaxSeries(MultiIndexPolynomial.univariate(coefficients), smoothing, order)


def smoothmax(x: ArrayLike, smoothing: float):
    """x * sigmoid(N x)."""
    x = np.asarray(x, dtype=np.float64)
    value = x * expit(smoothing * x)
    return float(value) if value.ndim == 0 else value


def smoothing_bias(smoothing: float) -> float:
    """sup_x |x sigmoid(N x) - max(x, 0)| = W(1/e) / N."""
    return float(lambertw(1.0 / math.e).real) / smoothing


CAUCHY_RADII = 32
CAUCHY_ANGLES = 4096
EXACT_TAIL_TERMS = 40


@lru_cache(maxsize=64)
def _circle_maxima(smoothing: float) -> Tuple[np.ndarray, np.ndarray]:
    """Radii rho_j < pi/N and max_{|z| = rho_j} |z sigmoid(N z)|."""
    radius = math.pi / smoothing
    rhos = radius * np.arange(1, CAUCHY_RADII + 1) / (CAUCHY_RADII + 1)
    # the grid contains theta = pi/2, the point closest to the pole i pi/N
    theta = np.linspace(0.0, 2.0 * np.pi, CAUCHY_ANGLES, endpoint=False)
    z = rhos[:, None] * np.exp(1j * theta)[None, :]
    maxima = np.max(np.abs(z / (1.0 + np.exp(-smoothing * z))), axis=1)
    return rhos, maxima


def _power_sum(magnitudes: np.ndarray, first: int, t: np.ndarray) -> np.ndarray:
    """sum_j magnitudes[j] t^(first + j)."""
    total = np.zeros(t.shape)
    power = t ** first
    for magnitude in magnitudes:
        total = total + magnitude * power
        power = power * t
    return total


def truncation_error_bound(x: ArrayLike, smoothing: float, order: int):
    """
    Pointwise bound on |f_M(x) - x sigmoid(N x)| for the order-M series.

    The bound is rebuilt from the Maclaurin data of x sigmoid(N x) and never
    reads a caller's polynomial. With t = |x| and c_k the series coefficients:

        inside:   sum_{M+1 < k <= K} |c_k| t^k + A_rho q^{K+1} / (1 - q),  q = t / rho < 1
        anywhere: sum_{k <= M+1} |c_k| t^k + t

    where A_rho = max_{|z| = rho} |z sigmoid(N z)| bounds the terms past K by
    Cauchy's estimate. The smaller of the two is returned.
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    t = np.abs(np.asarray(x, dtype=np.float64))
    top = order + 1 + EXACT_TAIL_TERMS
    magnitudes = np.zeros(top + 1)
    known = np.abs(smoothmax_series(smoothing, top - 1).poly.univariate_coefficients())
    magnitudes[: known.shape[0]] = known

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        anywhere = _power_sum(magnitudes[: order + 2], 0, t) + t
        cauchy = np.full(t.shape, np.inf)
        for rho, peak in zip(*_circle_maxima(float(smoothing))):
            q = t / rho
            cauchy = np.minimum(cauchy, np.where(q < 1.0, peak * q ** (top + 1) / (1.0 - q), np.inf))
        inside = _power_sum(magnitudes[order + 2:], order + 2, t) + cauchy
        best = np.minimum(inside, anywhere)
    return float(best) if best.ndim == 0 else best


# ---------- coefficient condition ----------

@dataclass(frozen=True)
class BoundParams:
    """
    Constants of the coefficient-decay condition.

    ``kappas[i][j]`` and ``word_lengths[i][j]`` describe the weighted word
    pi_i = sum_j kappa_ij w_ij of variable i.
    """

    C: float
    kappas: Tuple[Tuple[float, ...], ...]
    word_lengths: Tuple[Tuple[int, ...], ...]
    p: float = 1.0
    K_norm: float = 1.0

    def __post_init__(self):
        if self.C <= 0 or self.K_norm <= 0:
            raise ValueError(f"C and K_norm must be > 0, got C={self.C}, K_norm={self.K_norm}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if len(self.kappas) != len(self.word_lengths):
            raise ValueError("kappas and word_lengths describe a different number of variables")
        for ks, ls in zip(self.kappas, self.word_lengths):
            if len(ks) != len(ls) or any(length < 0 for length in ls):
                raise ValueError("each kappa needs a word length >= 0")

    @classmethod
    def for_words(cls, words: Iterable[WeightedWord], C: float = 1.0, p: float = 1.0, K_norm: float = 1.0):
        kappas, lengths = [], []
        for pi in words:
            kappas.append(tuple(coef for _, coef in pi.items()))
            lengths.append(tuple(len(word) for word, _ in pi.items()))
        return cls(C=C, kappas=tuple(kappas), word_lengths=tuple(lengths), p=p, K_norm=K_norm)

    def word_factors(self) -> Tuple[float, ...]:
        return tuple(
            sum(abs(k) * math.gamma(length / self.p + 1.0) / self.K_norm ** length for k, length in zip(ks, ls))
            for ks, ls in zip(self.kappas, self.word_lengths)
        )


def _coefficient_bound(index: MultiIndex, C: float, factors: Sequence[float]) -> float:
    bound = C ** sum(index)
    for m_i, factor in zip(index, factors):
        bound *= factor ** m_i / math.factorial(m_i)
    return bound


def coefficient_condition(poly: MultiIndexPolynomial, params: BoundParams) -> bool:
    """True iff |alpha_m| <= C^{|m|} / m! * prod_i factor_i^{m_i} for every term."""
    factors = params.word_factors()
    if len(factors) != poly.n_vars:
        raise ValueError(f"bound parameters describe {len(factors)} variables, polynomial has {poly.n_vars}")
    for index, coef in poly.terms.items():
        if abs(coef) > _coefficient_bound(index, params.C, factors) * (1.0 + 1e-12):
            return False
    return True


def fit_bound_constant(poly: MultiIndexPolynomial, params: BoundParams) -> Optional[float]:
    """Smallest C for which the coefficient condition holds, or None if none does."""
    factors = params.word_factors()
    best = 0.0
    for index, coef in poly.terms.items():
        base = _coefficient_bound(index, 1.0, factors)
        if sum(index) == 0:
            if abs(coef) > base:
                return None
            continue
        if base == 0.0:
            return None
        best = max(best, (abs(coef) / base) ** (1.0 / sum(index)))
    return best if best > 0.0 else None


def remainder_bound(params: BoundParams, n_vars: int, card_n: int) -> float:
    """exp(C) C^{|N|+1} / ((n-1)! (|N|-n-1)!)."""
    if card_n < n_vars + 1:
        raise ValueError(f"|N| = {card_n} must be at least n + 1 = {n_vars + 1}")
    C = params.C
    return math.exp(C) * C ** (card_n + 1) / (math.factorial(n_vars - 1) * math.factorial(card_n - n_vars - 1))
