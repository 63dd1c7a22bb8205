import itertools
import math

import numpy as np
import pytest

from sigprice.algebra import WeightedWord, parse_weighted_word
from sigprice.correlator import (
    CorrelatorRequest,
    cost_report,
    direct_depth,
    estimate_correlator,
    estimate_correlators,
    linearized_depth,
    pairing_samples,
    shuffle_linearize,
    summarize,
)
from sigprice.errors import AlphabetMismatchError, DepthError, LiftError
from sigprice.models import BrownianSpec, OUSpec, SimulationGrid
from sigprice.settings import load_settings
from sigprice.signature import LiftKind, lift, pair
from sigprice.stochastic import bm_integral_moment, expected_bm_signature_word

BM1 = BrownianSpec(dim=1)
BM2 = BrownianSpec(dim=2)
UNIT_GRID = SimulationGrid(horizon=1.0, steps=200)


def W(text, d=3):
    return parse_weighted_word(text, d)


def within(estimate, expected, n_se=4.0):
    return abs(estimate.value - expected) <= n_se * estimate.std_error


# ---------- requests ----------

def test_request_defaults_and_validation():
    request = CorrelatorRequest(words=(W("21 - 31"),), multi_index=(2,))
    assert request.depth == 2
    assert request.lift is LiftKind.STRATONOVICH
    assert request.alphabet_size == 3
    with pytest.raises(DepthError):
        CorrelatorRequest(words=(W("211"),), multi_index=(1,), depth=2)
    with pytest.raises(ValueError):
        CorrelatorRequest(words=(W("1"), W("2")), multi_index=(1,))
    with pytest.raises(ValueError):
        CorrelatorRequest(words=(), multi_index=())
    with pytest.raises(AlphabetMismatchError):
        CorrelatorRequest(words=(W("1", 2), W("1", 3)), multi_index=(1, 1))


def test_empty_monomial_is_one():
    request = CorrelatorRequest(words=(W("21"),), multi_index=(0,))
    estimate = estimate_correlator(BM2, UNIT_GRID, request, 100, 0)
    assert (estimate.value, estimate.std_error, estimate.n_paths) == (1.0, 0.0, 100)


def test_summarize():
    estimate = summarize(np.array([1.0, 2.0, 3.0, 4.0]))
    assert estimate.value == 2.5
    assert estimate.std_error == pytest.approx(math.sqrt(5.0 / 3.0 / 4.0))
    with pytest.raises(ValueError):
        summarize(np.array([1.0]))


# ---------- Monte Carlo against closed forms ----------

def test_time_integral_moments_of_brownian_motion():
    estimates = estimate_correlators(
        BM2, UNIT_GRID, [W("21 - 31")], [(1,), (2,), (3,), (4,)], n_paths=10000, seed=2024
    )
    for n, estimate in zip((1, 2, 3, 4), estimates):
        assert estimate.n_paths == 10000
        assert within(estimate, bm_integral_moment(1.0, n))


def test_expected_brownian_signature():
    words = [w for k in range(1, 5) for w in itertools.product((1, 2), repeat=k)]
    pis = [WeightedWord(2, {w: 1.0}) for w in words]
    unit_indices = [tuple(int(i == j) for i in range(len(words))) for j in range(len(words))]
    grid = SimulationGrid(horizon=1.0, steps=50)
    estimates = estimate_correlators(
        BM2, grid, pis, unit_indices, n_paths=10000, seed=99, time_enhanced=False
    )
    for word, estimate in zip(words, estimates):
        expected = expected_bm_signature_word(word, 1.0, time_enhanced=False)
        assert within(estimate, expected), word


def test_ito_and_stratonovich_second_level_means():
    grid = SimulationGrid(horizon=1.0, steps=100)
    words = [W("11", 1), W("1", 1)]
    strat = pairing_samples(BM1, grid, words, 2, LiftKind.STRATONOVICH, 10000, 5, time_enhanced=False)
    ito = pairing_samples(BM1, grid, words, 2, LiftKind.ITO, 10000, 5, time_enhanced=False)
    np.testing.assert_allclose(2.0 * strat[:, 0], strat[:, 1] ** 2, rtol=1e-10, atol=1e-12)
    assert within(summarize(strat[:, 0]), 0.5)
    assert within(summarize(ito[:, 0]), 0.0)
    np.testing.assert_array_equal(strat[:, 1], ito[:, 1])


def test_standard_error_scales_with_sample_size():
    grid = SimulationGrid(horizon=1.0, steps=1)
    request = CorrelatorRequest(words=(W("1", 1),), multi_index=(1,), time_enhanced=False)
    sizes = [1000, 10000, 100000]
    errors = [estimate_correlator(BM1, grid, request, n, 17).std_error for n in sizes]
    slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


# ---------- determinism ----------

def test_results_do_not_depend_on_threads():
    request = CorrelatorRequest(words=(W("21"), W("31 + 0.5*32")), multi_index=(1, 2))
    process = OUSpec(mean_reversion=(1.0, 2.0), volatility=(0.5, 0.3), correlation=0.3)
    grid = SimulationGrid(horizon=1.0, steps=20)
    results = {
        threads: estimate_correlator(
            process, grid, request, 500, 8, load_settings(threads=threads, chunk_size=64)
        )
        for threads in (1, 2, 8)
    }
    assert results[1] == results[2] == results[8]
    assert results[1] == estimate_correlator(process, grid, request, 500, 8)


def test_seed_changes_the_estimate():
    request = CorrelatorRequest(words=(W("21"),), multi_index=(1,))
    a = estimate_correlator(BM2, UNIT_GRID, request, 50, 1)
    b = estimate_correlator(BM2, UNIT_GRID, request, 50, 2)
    assert a.value != b.value


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("SIGPRICE_THREADS", "3")
    assert load_settings().threads == 3
    assert load_settings(threads=None).threads == 3
    assert load_settings(threads=5).threads == 5
    with pytest.raises(ValueError):
        load_settings(chunk_size=0)


# ---------- shuffle linearization ----------

@pytest.mark.parametrize("k", [1, 2, 4])
def test_linearize_single_letter(k):
    request = CorrelatorRequest(words=(W("2"),), multi_index=(k,))
    assert shuffle_linearize(request) == WeightedWord(3, {(2,) * k: float(math.factorial(k))})


def test_linearize_first_power_is_identity():
    pi = W("2*21 - 31 + 0.5*e")
    assert shuffle_linearize(CorrelatorRequest(words=(pi,), multi_index=(1,))) == pi


def test_linearize_rejects_ito():
    request = CorrelatorRequest(words=(W("21"),), multi_index=(2,), lift=LiftKind.ITO)
    with pytest.raises(LiftError):
        shuffle_linearize(request)


def test_linearized_pairing_matches_monomial(random_path, random_word):
    path = random_path(n_points=8, dim=3, scale=0.5)
    for _ in range(5):
        pi, rho = random_word(3, 2), random_word(3, 2)
        request = CorrelatorRequest(words=(pi, rho), multi_index=(2, 1))
        phi = shuffle_linearize(request)
        sig = lift(path, max(1, linearized_depth(request)), LiftKind.STRATONOVICH)
        expected = pair(pi, sig) ** 2 * pair(rho, sig)
        assert pair(phi, sig) == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_linearized_estimate_matches_direct():
    request = CorrelatorRequest(words=(W("21 - 31"),), multi_index=(2,))
    grid = SimulationGrid(horizon=1.0, steps=20)
    direct = estimate_correlator(BM2, grid, request, 300, 4)
    linear = estimate_correlator(BM2, grid, request, 300, 4, linearized=True)
    assert linear.value == pytest.approx(direct.value, rel=1e-10)
    assert linear.std_error == pytest.approx(direct.std_error, rel=1e-8)


# ---------- cost ----------

def test_cost_report_depths(random_path):
    letter = CorrelatorRequest(words=(W("2"),), multi_index=(6,))
    assert (linearized_depth(letter), direct_depth(letter)) == (6, 1)
    pair_request = CorrelatorRequest(words=(W("21"), W("31")), multi_index=(2, 2))
    assert (linearized_depth(pair_request), direct_depth(pair_request)) == (8, 2)

    report = cost_report(pair_request, random_path(n_points=20, dim=3))
    assert (report.linearized_depth, report.direct_depth) == (8, 2)
    assert report.linearized_seconds >= report.direct_seconds


# ---------- input errors ----------

def test_pairing_samples_checks_words_before_simulating():
    with pytest.raises(AlphabetMismatchError):
        pairing_samples(BM2, UNIT_GRID, [W("21", 2)], 2, LiftKind.STRATONOVICH, 10, 0)
    with pytest.raises(DepthError):
        pairing_samples(BM2, UNIT_GRID, [W("211")], 2, LiftKind.STRATONOVICH, 10, 0)


def test_estimators_reject_bad_sizes():
    request = CorrelatorRequest(words=(W("21"),), multi_index=(1,))
    with pytest.raises(ValueError):
        estimate_correlator(BM2, UNIT_GRID, request, 1, 0)
    with pytest.raises(ValueError):
        estimate_correlators(BM2, UNIT_GRID, [W("21")], [(1, 1)], 10, 0)
