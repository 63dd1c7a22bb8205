"""
Pricing by the correlator expansion p ~ sum_m alpha_m rho_m.

Each payoff variant supplies its weighted words pi_i over the time-enhanced
path, its exact payoff f(<pi_1, X>, ..., <pi_n, X>) and a polynomial
approximation f_N. The expansion and the direct Monte Carlo reference are
computed from the same pairing samples when run together.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from sigprice.algebra import WeightedWord, shuffle
from sigprice.approx import (
    BoundParams,
    MultiIndexPolynomial,
    coefficient_condition,
    fit_bound_constant,
    product_polynomial,
    remainder_bound,
    shift_polynomial,
    smoothing_bias,
    smoothmax_series,
    truncation_error_bound,
)
from sigprice.correlator import correlators_from_samples, pairing_samples, summarize
from sigprice.errors import LiftError
from sigprice.models import (
    AsianCall,
    AsianSpreadCall,
    BrownianSpec,
    ConvergenceRow,
    OUSpec,
    PayoffSpec,
    PriceReport,
    ProcessSpec,
    QualityFactor,
    QuantoPutCall,
    SimulationGrid,
    Spread,
)
from sigprice.settings import RuntimeSettings
from sigprice.signature import LiftKind
from sigprice.stochastic import gaussian_moment, ou_Z_stats

logger = logging.getLogger(__name__)

ALPHABET = {
    "asian_call": 2,
    "asian_spread_call": 3,
    "spread": 3,
    "quanto": 3,
    "quality_factor": 3,
}


def _initial(payoff: PayoffSpec, initial_values: Optional[Sequence[float]]) -> Tuple[float, float]:
    if initial_values is None or len(initial_values) != 2:
        raise ValueError(f"payoff '{payoff.variant}' needs the two initial values of the path, got {initial_values}")
    return float(initial_values[0]), float(initial_values[1])


def payoff_words(payoff: PayoffSpec, initial_values: Optional[Sequence[float]] = None) -> List[WeightedWord]:
    """
    Weighted words over the time-enhanced path (letter 1 is time).

    Pairings of words give increments, so absolute levels are restored with
    constant terms: an empty-word term for terminal values, a term on the
    time letter for time integrals.
    """
    d = ALPHABET[payoff.variant]
    word = lambda *letters, coef=1.0: WeightedWord.word(d, *letters, coef=coef)  # noqa: E731

    if isinstance(payoff, AsianCall):
        return [word(2, 1)]
    x1, x2 = _initial(payoff, initial_values)
    if isinstance(payoff, AsianSpreadCall):
        return [word(2, 1) - word(3, 1) + word(1, coef=x1 - x2)]
    if isinstance(payoff, Spread):
        c = payoff.conversion
        return [word(2) - word(3, coef=c) + WeightedWord.unit(d, x1 - c * x2)]
    if isinstance(payoff, QuantoPutCall):
        return [word(2, 1) + word(1, coef=x1), -word(3, 1) - word(1, coef=x2)]
    if isinstance(payoff, QualityFactor):
        c0, s0 = x1, x2
        # int C S ds = <(2 sh 3)1 + C_0 31 + S_0 21 + C_0 S_0 1, Y>
        pi1 = (
            _append_time(shuffle(word(2), word(3)))
            + word(3, 1, coef=c0)
            + word(2, 1, coef=s0)
            + word(1, coef=c0 * s0)
        )
        pi2 = word(2, 1) + word(1, coef=c0 - 1.0)
        pi3 = word(3, 1) + word(1, coef=s0 - 1.0)
        return [pi1, pi2, pi3]
    raise ValueError(f"unknown payoff variant {payoff!r}")


def _append_time(pi: WeightedWord) -> WeightedWord:
    return WeightedWord(pi.alphabet_size, {w + (1,): c for w, c in pi.items()})


def check_process(payoff: PayoffSpec, process: ProcessSpec) -> None:
    expected = ALPHABET[payoff.variant] - 1
    if process.path_dim != expected:
        raise ValueError(
            f"payoff '{payoff.variant}' needs a {expected}-dimensional process, "
            f"'{process.kind}' is {process.path_dim}-dimensional"
        )


def payoff_function(payoff: PayoffSpec, horizon: float) -> Callable[[np.ndarray], np.ndarray]:
    """Exact payoff as a function of the pairing samples, shape (P, n) -> (P,)."""
    if isinstance(payoff, (AsianCall, AsianSpreadCall)):
        return lambda x: np.maximum(x[:, 0] - payoff.strike, 0.0)
    if isinstance(payoff, Spread):
        return lambda x: np.maximum(x[:, 0], 0.0)
    if isinstance(payoff, QuantoPutCall):
        return lambda x: (
            np.maximum(x[:, 0] - payoff.volume_strike, 0.0) * np.maximum(x[:, 1] + payoff.price_strike, 0.0)
        )
    if isinstance(payoff, QualityFactor):
        T = horizon
        return lambda x: (x[:, 0] / T) / ((1.0 + x[:, 1] / T) * (1.0 + x[:, 2] / T))
    raise ValueError(f"unknown payoff variant {payoff!r}")


def _kink_offsets(payoff: PayoffSpec) -> Tuple[float, ...]:
    # value subtracted from each pairing before the smoothed max is applied
    if isinstance(payoff, (AsianCall, AsianSpreadCall)):
        return (payoff.strike,)
    if isinstance(payoff, Spread):
        return (0.0,)
    if isinstance(payoff, QuantoPutCall):
        return (payoff.volume_strike, -payoff.price_strike)
    return ()


def payoff_polynomial(payoff: PayoffSpec, horizon: float) -> MultiIndexPolynomial:
    """Polynomial f_N in the pairing variables."""
    if isinstance(payoff, QualityFactor):
        T = horizon
        return MultiIndexPolynomial(
            3,
            {
                (1, m, n): (1.0 / T) * (-T) ** (-(m + n))
                for m in range(payoff.m_order + 1)
                for n in range(payoff.n_order + 1)
            },
        )
    series = smoothmax_series(payoff.smoothing, payoff.order).poly
    factors = [shift_polynomial(series, offset) for offset in _kink_offsets(payoff)]
    return factors[0] if len(factors) == 1 else product_polynomial(*factors)


def payoff_orders(payoff: PayoffSpec) -> dict:
    if isinstance(payoff, QualityFactor):
        return {"M": payoff.m_order, "N": payoff.n_order}
    return {"M": payoff.order}


def with_order(payoff: PayoffSpec, order: int) -> PayoffSpec:
    if isinstance(payoff, QualityFactor):
        return payoff.copy(update={"m_order": order, "n_order": order})
    return payoff.copy(update={"order": order})


# ---------- truncation diagnostics ----------

def _quality_factor_tail(payoff: QualityFactor, samples: np.ndarray, horizon: float) -> float:
    """
    Geometric tail bound max|A| (t_C / (1 - r_S) + t_S / (1 - r_C)) with
    A = <pi_1>/T, r = max |<pi_i>| / T and t = r^{order+1} / (1 - r).
    """
    T = horizon
    a = float(np.max(np.abs(samples[:, 0]))) / T
    r_c = float(np.max(np.abs(samples[:, 1]))) / T
    r_s = float(np.max(np.abs(samples[:, 2]))) / T
    if r_c >= 1.0 or r_s >= 1.0:
        return math.inf
    t_c = r_c ** (payoff.m_order + 1) / (1.0 - r_c)
    t_s = r_s ** (payoff.n_order + 1) / (1.0 - r_s)
    return a * (t_c / (1.0 - r_s) + t_s / (1.0 - r_c))


def _smoothed_max_errors(payoff: PayoffSpec, samples: np.ndarray) -> np.ndarray:
    """
    Pathwise bound on |f_N(x) - f(x)| for the smoothed-max payoffs.

    Each factor contributes the smoothing bias plus the truncation bound of
    ``truncation_error_bound``; neither reads the polynomial. For the quanto
    product |f_N g_N - f g| <= e_f (|v| + e_g) + |u| e_g.
    """
    bias = smoothing_bias(payoff.smoothing)
    factors = []
    for j, offset in enumerate(_kink_offsets(payoff)):
        shifted = samples[:, j] - offset
        error = truncation_error_bound(shifted, payoff.smoothing, payoff.order) + bias
        factors.append((error, np.abs(shifted)))
    if len(factors) == 1:
        return factors[0][0]
    (e_u, u), (e_v, v) = factors
    return e_u * (v + e_v) + u * e_v


GAUSSIAN_TAIL_POINTS = 20001
GAUSSIAN_TAIL_WIDTH = 12.0


def _gaussian_tail(payoff: PayoffSpec, mu: float, sigma: float) -> float:
    """E|f_N(Z) - f(Z)| bound for Z ~ N(mu, sigma^2), by the trapezoid rule."""
    strike = _kink_offsets(payoff)[0]
    bias = smoothing_bias(payoff.smoothing)
    if sigma == 0.0:
        return truncation_error_bound(mu - strike, payoff.smoothing, payoff.order) + bias
    z = np.linspace(mu - GAUSSIAN_TAIL_WIDTH * sigma, mu + GAUSSIAN_TAIL_WIDTH * sigma, GAUSSIAN_TAIL_POINTS)
    errors = truncation_error_bound(z - strike, payoff.smoothing, payoff.order) + bias
    return float(np.trapz(errors * norm.pdf(z, loc=mu, scale=sigma), z))


def _radius_warnings(payoff: PayoffSpec, samples: np.ndarray) -> List[str]:
    if isinstance(payoff, QualityFactor):
        return []
    radius = math.pi / payoff.smoothing
    messages = []
    for j, offset in enumerate(_kink_offsets(payoff)):
        shifted = samples[:, j] - offset
        outside = float(np.mean(np.abs(shifted) >= radius))
        if outside > 0.0:
            messages.append(
                f"pairing {j + 1}: {outside:.2%} of samples lie outside the series radius {radius:.6g}"
            )
    return messages


def expansion_from_samples(
    payoff: PayoffSpec, samples: np.ndarray, horizon: float, seed: Optional[int]
) -> PriceReport:
    poly = payoff_polynomial(payoff, horizon)
    indices = list(poly.terms)
    estimates = correlators_from_samples(samples, indices)
    price = math.fsum(poly.terms[m] * est.value for m, est in zip(indices, estimates))
    std_error = math.fsum(abs(poly.terms[m]) * est.std_error for m, est in zip(indices, estimates))

    if isinstance(payoff, QualityFactor):
        tail = _quality_factor_tail(payoff, samples, horizon)
        radius = None
        bias = None
    else:
        tail = math.fsum(_smoothed_max_errors(payoff, samples)) / samples.shape[0]
        radius = math.pi / payoff.smoothing
        bias = smoothing_bias(payoff.smoothing)

    warnings = _radius_warnings(payoff, samples)
    for message in warnings:
        logger.warning(message)
    return PriceReport(
        price=price,
        std_error=std_error,
        method="correlator_expansion",
        variant=payoff.variant,
        terms=len(indices),
        orders=payoff_orders(payoff),
        n_paths=samples.shape[0],
        seed=seed,
        series_tail=tail,
        radius=radius,
        smoothing_bias=bias,
        warnings=warnings,
    )


def direct_from_samples(payoff: PayoffSpec, samples: np.ndarray, horizon: float, seed: Optional[int]) -> PriceReport:
    estimate = summarize(payoff_function(payoff, horizon)(samples))
    return PriceReport(
        price=estimate.value,
        std_error=estimate.std_error,
        method="direct_mc",
        variant=payoff.variant,
        n_paths=estimate.n_paths,
        seed=seed,
    )


def _samples(
    payoff: PayoffSpec,
    process: ProcessSpec,
    grid: SimulationGrid,
    lift_kind: LiftKind,
    n_paths: int,
    seed: int,
    settings: Optional[RuntimeSettings],
) -> np.ndarray:
    if n_paths < 2:
        raise ValueError(f"n_paths must be >= 2, got {n_paths}")
    check_process(payoff, process)
    lift_kind = LiftKind(lift_kind)
    if isinstance(payoff, QualityFactor) and lift_kind is not LiftKind.STRATONOVICH:
        raise LiftError("the quality factor words rely on the shuffle identity and need a Stratonovich lift")
    words = payoff_words(payoff, process.initial_values())
    depth = max(pi.max_length() for pi in words)
    return pairing_samples(process, grid, words, depth, lift_kind, n_paths, seed, True, settings)


# ---------- public operations ----------

def price_via_correlators(
    payoff: PayoffSpec,
    process: ProcessSpec,
    grid: SimulationGrid,
    n_paths: int,
    seed: int,
    lift_kind: LiftKind = LiftKind.STRATONOVICH,
    settings: Optional[RuntimeSettings] = None,
) -> PriceReport:
    """sum_m alpha_m rho_m with every rho_m estimated on the same paths."""
    samples = _samples(payoff, process, grid, lift_kind, n_paths, seed, settings)
    return expansion_from_samples(payoff, samples, grid.horizon, seed)


def price_direct_mc(
    payoff: PayoffSpec,
    process: ProcessSpec,
    grid: SimulationGrid,
    n_paths: int,
    seed: int,
    lift_kind: LiftKind = LiftKind.STRATONOVICH,
    settings: Optional[RuntimeSettings] = None,
) -> PriceReport:
    """Sample mean of the exact payoff applied to the pairings of each path."""
    samples = _samples(payoff, process, grid, lift_kind, n_paths, seed, settings)
    return direct_from_samples(payoff, samples, grid.horizon, seed)


def price_both(
    payoff: PayoffSpec,
    process: ProcessSpec,
    grid: SimulationGrid,
    n_paths: int,
    seed: int,
    lift_kind: LiftKind = LiftKind.STRATONOVICH,
    settings: Optional[RuntimeSettings] = None,
) -> Tuple[PriceReport, PriceReport]:
    """(expansion, direct) on one shared set of paths."""
    samples = _samples(payoff, process, grid, lift_kind, n_paths, seed, settings)
    return (
        expansion_from_samples(payoff, samples, grid.horizon, seed),
        direct_from_samples(payoff, samples, grid.horizon, seed),
    )


def quality_factor_expectation(
    process: ProcessSpec,
    grid: SimulationGrid,
    m_order: int,
    n_order: int,
    n_paths: int,
    seed: int,
    lift_kind: LiftKind = LiftKind.STRATONOVICH,
    settings: Optional[RuntimeSettings] = None,
) -> PriceReport:
    """Truncated double series for E[Q]; all (m, n) terms share the same paths."""
    payoff = QualityFactor(m_order=m_order, n_order=n_order)
    return price_via_correlators(payoff, process, grid, n_paths, seed, lift_kind, settings)


def _bound_for(payoff: PayoffSpec, poly: MultiIndexPolynomial, words: Sequence[WeightedWord]) -> Optional[float]:
    """Remainder bound at the payoff's own constant, or None where the decay condition fails."""
    if len(poly) < poly.n_vars + 1:
        return None
    params = BoundParams.for_words(words, C=payoff.bound_constant)
    if not coefficient_condition(poly, params):
        logger.info(
            "%s %s: coefficients break the decay condition at C=%g (smallest admissible C: %s)",
            payoff.variant, payoff_orders(payoff), params.C, fit_bound_constant(poly, params),
        )
        return None
    return remainder_bound(params, poly.n_vars, len(poly))


def convergence_report(
    payoff: PayoffSpec,
    process: ProcessSpec,
    grid: SimulationGrid,
    orders: Sequence[int],
    n_paths: int,
    seed: int,
    lift_kind: LiftKind = LiftKind.STRATONOVICH,
    settings: Optional[RuntimeSettings] = None,
) -> List[ConvergenceRow]:
    """
    Expansion price per truncation order against one direct Monte Carlo
    reference, all on the same paths.
    """
    if not orders:
        raise ValueError("need at least one truncation order")
    samples = _samples(payoff, process, grid, lift_kind, n_paths, seed, settings)
    direct = direct_from_samples(payoff, samples, grid.horizon, seed)
    words = payoff_words(payoff, process.initial_values())
    rows = []
    for order in orders:
        truncated = with_order(payoff, order)
        report = expansion_from_samples(truncated, samples, grid.horizon, seed)
        rows.append(
            ConvergenceRow(
                order=order,
                expansion=report.price,
                expansion_se=report.std_error,
                direct=direct.price,
                direct_se=direct.std_error,
                gap=abs(report.price - direct.price),
                tail=report.series_tail,
                smoothing_bias=report.smoothing_bias,
                bound=_bound_for(truncated, payoff_polynomial(truncated, grid.horizon), words),
            )
        )
    return rows


def price_via_moments(payoff: PayoffSpec, process: ProcessSpec, grid: SimulationGrid) -> PriceReport:
    """
    The expansion with closed-form Gaussian moments in place of Monte Carlo
    correlators (Asian payoffs on Brownian or OU drivers).
    """
    t = grid.horizon
    if isinstance(payoff, AsianCall) and isinstance(process, BrownianSpec) and process.dim == 1:
        mu, var = 0.0, t ** 3 / 3.0
    elif isinstance(payoff, AsianSpreadCall) and isinstance(process, BrownianSpec) and process.dim == 2:
        x1, x2 = process.initial_values()
        rho = process.correlation_matrix()[0, 1]
        mu, var = (x1 - x2) * t, (2.0 - 2.0 * rho) * t ** 3 / 3.0
    elif isinstance(payoff, AsianSpreadCall) and isinstance(process, OUSpec):
        mu, var = ou_Z_stats(process, t)
    else:
        raise ValueError(
            f"no closed-form moments for payoff '{payoff.variant}' on process '{process.kind}'"
        )
    poly = payoff_polynomial(payoff, t)
    coefficients = poly.univariate_coefficients()
    sigma = math.sqrt(var)
    price = math.fsum(c * gaussian_moment(mu, sigma, k) for k, c in enumerate(coefficients) if c != 0.0)
    return PriceReport(
        price=price,
        std_error=0.0,
        method="moment_expansion",
        variant=payoff.variant,
        terms=len(poly),
        orders=payoff_orders(payoff),
        radius=math.pi / payoff.smoothing,
        series_tail=_gaussian_tail(payoff, mu, sigma),
        smoothing_bias=smoothing_bias(payoff.smoothing),
    )
