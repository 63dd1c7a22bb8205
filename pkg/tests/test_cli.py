import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from sigprice import csv_io
from sigprice.algebra import parse_weighted_word
from sigprice.approx import smoothing_bias
from sigprice.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, main
from sigprice.errors import ScenarioError
from sigprice.scenario import apply_overrides, correlator_requests, load_scenario, parse_scenario
from sigprice.signature import LiftKind, pair, signature_from_rows, stratonovich_lift

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def write_scenario(tmp_path, data, name="scenario.json"):
    target = tmp_path / name
    target.write_text(json.dumps(data), encoding="utf-8")
    return str(target)


def base_scenario(**extra):
    data = {
        "schema": "sigprice/1",
        "process": {"kind": "brownian", "dim": 2},
        "grid": {"horizon": 1.0, "steps": 10},
        "n_paths": 100,
        "seed": 1,
    }
    data.update(extra)
    return data


# ---------- sig ----------

def test_sig_writes_graded_rows(tmp_path, random_path):
    path = random_path(n_points=6, dim=2)
    path_csv = tmp_path / "path.csv"
    csv_io.write_path_csv(path_csv, path)
    out = tmp_path / "sig.csv"

    assert main(["sig", "--path", str(path_csv), "--depth", "2", "--out", str(out)]) == EXIT_OK

    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "level,word,value"
    assert lines[1] == "0,e,1"
    rows = csv_io.read_signature_csv(out)
    assert len(rows) == 7
    sig = signature_from_rows(
        rows, csv_io.signature_dim(rows), (path.times[0], path.times[-1]), LiftKind.STRATONOVICH
    )
    pi = parse_weighted_word("3*12 - 21 + 0.5*2", 2)
    assert pair(pi, sig) == pair(pi, stratonovich_lift(path, 2))


def test_sig_to_stdout_with_time(tmp_path, capsys, random_path):
    path_csv = tmp_path / "path.csv"
    csv_io.write_path_csv(path_csv, random_path(n_points=4, dim=1))
    assert main(["sig", "--path", str(path_csv), "--depth", "3", "--time-enhance", "--lift", "ito"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[:2] == ["level,word,value", "0,e,1"]
    assert len(lines) == 1 + 1 + 2 + 4 + 8


def test_path_csv_round_trip(tmp_path, random_path):
    path = random_path(n_points=5, dim=3)
    target = tmp_path / "p.csv"
    csv_io.write_path_csv(target, path)
    back = csv_io.read_path_csv(target)
    np.testing.assert_array_equal(back.times, path.times)
    np.testing.assert_array_equal(back.values, path.values)


def test_malformed_path_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,x1\n0.0,1.0\n0.5,abc\n", encoding="utf-8")
    with pytest.raises(ScenarioError, match=":3:"):
        csv_io.read_path_csv(bad)
    assert main(["sig", "--path", str(bad), "--depth", "2"]) == EXIT_INPUT

    unordered = tmp_path / "unordered.csv"
    unordered.write_text("t,x1\n1.0,1.0\n0.5,2.0\n", encoding="utf-8")
    assert main(["sig", "--path", str(unordered), "--depth", "2"]) == EXIT_INPUT


def test_malformed_signature_csv(tmp_path):
    misplaced = tmp_path / "misplaced.csv"
    misplaced.write_text("level,word,value\n0,e,1\n1,1,0.5\n1,12,0.25\n", encoding="utf-8")
    with pytest.raises(ScenarioError, match="level 1"):
        csv_io.read_signature_csv(misplaced)

    incomplete = tmp_path / "incomplete.csv"
    incomplete.write_text("level,word,value\n0,e,1\n1,1,0.5\n1,2,0.1\n2,11,0.125\n", encoding="utf-8")
    with pytest.raises(ScenarioError, match="has 7"):
        csv_io.read_signature_csv(incomplete)


# ---------- simulate ----------

def test_simulate_writes_deterministic_paths(tmp_path):
    scenario = write_scenario(
        tmp_path,
        base_scenario(
            process={"kind": "ou", "mean_reversion": [0.5, 2.0], "volatility": [0.0, 0.0], "initial": [1.0, -1.0]},
            grid={"horizon": 2.0, "steps": 8},
        ),
    )
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        code = main(["simulate", "--scenario", scenario, "--out", str(out), "--paths-to-write", "2"])
        assert code == EXIT_OK
    for name in ("path_0000.csv", "path_0001.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()

    path = csv_io.read_path_csv(first / "path_0000.csv")
    assert path.n_points == 9
    expected = np.column_stack([np.exp(-0.5 * path.times), -np.exp(-2.0 * path.times)])
    np.testing.assert_allclose(path.values, expected, rtol=1e-12)


def test_simulate_seed_override(tmp_path):
    scenario = write_scenario(tmp_path, base_scenario())
    main(["simulate", "--scenario", scenario, "--out", str(tmp_path / "a")])
    main(["simulate", "--scenario", scenario, "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "path_0000.csv").read_bytes() != (tmp_path / "b" / "path_0000.csv").read_bytes()


def test_simulation_failure_is_numerical(tmp_path):
    scenario = write_scenario(
        tmp_path,
        base_scenario(process={"kind": "brownian", "dim": 2, "correlation": [[1.0, 2.0], [2.0, 1.0]]}),
    )
    assert main(["simulate", "--scenario", scenario, "--out", str(tmp_path / "out")]) == EXIT_NUMERICAL


# ---------- correlators ----------

def test_correlators_csv(tmp_path):
    scenario = str(SCENARIOS / "bm_spread_correlators" / "scenario.json")
    out_a, out_b, out_c = (tmp_path / name for name in ("a", "b", "c"))
    assert main(["correlators", "--scenario", scenario, "--paths", "3000", "--out", str(out_a)]) == EXIT_OK
    main(["correlators", "--scenario", scenario, "--paths", "3000", "--out", str(out_b)])
    main(["correlators", "--scenario", scenario, "--paths", "3000", "--out", str(out_c), "--threads", "3"])

    target = out_a / "correlators.csv"
    assert target.read_bytes() == (out_b / "correlators.csv").read_bytes()
    assert target.read_bytes() == (out_c / "correlators.csv").read_bytes()

    rows = {row["request_id"]: row for row in read_csv(target)}
    assert list(rows) == ["m0", "m1", "m2", "m3", "m4"]
    assert (rows["m0"]["value"], rows["m0"]["std_error"], rows["m0"]["n_paths"]) == ("1.0", "0.0", "3000")
    m2 = rows["m2"]
    assert abs(float(m2["value"]) - 2.0 / 3.0) <= 4.0 * float(m2["std_error"])


# ---------- price ----------

def test_price_constant_quality_factor(tmp_path, capsys):
    scenario = str(SCENARIOS / "quality_factor_constant" / "scenario.json")
    assert main(["price", "--scenario", scenario, "--out", str(tmp_path)]) == EXIT_OK

    rows = {row["method"]: row for row in read_csv(tmp_path / "price.csv")}
    assert float(rows["correlator_expansion"]["price"]) == pytest.approx(1.0, abs=1e-6)
    assert float(rows["direct_mc"]["price"]) == pytest.approx(1.0, abs=1e-12)
    assert rows["direct_mc"]["series_tail"] == ""

    polynomial = read_csv(tmp_path / "polynomial.csv")
    assert len(polynomial) == 25
    assert list(polynomial[0]) == ["m1", "m2", "m3", "alpha"]
    assert not (tmp_path / "convergence.csv").exists()
    assert "quality_factor: expansion" in capsys.readouterr().out


def test_price_with_convergence_table(tmp_path):
    scenario = str(SCENARIOS / "asian_bm" / "scenario.json")
    assert main(["price", "--scenario", scenario, "--out", str(tmp_path), "--paths", "400"]) == EXIT_OK
    table = read_csv(tmp_path / "convergence.csv")
    assert [row["order"] for row in table] == ["1", "3", "5", "7"]
    assert len({row["direct"] for row in table}) == 1
    assert [row["bound"] != "" for row in table] == [True, True, True, False]
    for row in table:
        assert float(row["smoothing_bias"]) == pytest.approx(smoothing_bias(2.0))
        assert float(row["gap"]) <= float(row["tail"]) + 1e-12
    price = read_csv(tmp_path / "price.csv")
    assert [row["n_paths"] for row in price] == ["400", "400"]
    assert math.isclose(float(price[0]["radius"]), math.pi / 2.0)
    assert float(price[0]["series_tail"]) >= float(price[0]["smoothing_bias"])


def test_price_needs_a_payoff(tmp_path):
    scenario = write_scenario(tmp_path, base_scenario())
    assert main(["price", "--scenario", scenario, "--out", str(tmp_path / "out")]) == EXIT_INPUT


# ---------- input errors ----------

def test_unknown_payoff_variant(tmp_path):
    scenario = write_scenario(tmp_path, base_scenario(payoff={"variant": "digital", "strike": 1.0}))
    assert main(["price", "--scenario", scenario]) == EXIT_INPUT


def test_missing_and_malformed_files(tmp_path):
    assert main(["price", "--scenario", str(tmp_path / "nope.json")]) == EXIT_INPUT
    broken = tmp_path / "broken.json"
    broken.write_text('{"schema": "sigprice/1",\n  "grid": }', encoding="utf-8")
    with pytest.raises(ScenarioError, match=":2:"):
        load_scenario(broken)
    assert main(["simulate", "--scenario", str(broken)]) == EXIT_INPUT


def test_bad_arguments():
    assert main(["sig"]) == EXIT_INPUT
    assert main(["frobnicate"]) == EXIT_INPUT


def test_log_level_is_validated(tmp_path, random_path):
    path_csv = tmp_path / "path.csv"
    csv_io.write_path_csv(path_csv, random_path(n_points=4, dim=1))
    assert main(["--log-level", "LOUD", "sig", "--path", str(path_csv), "--depth", "2"]) == EXIT_INPUT
    assert main(["--log-level", "warning", "sig", "--path", str(path_csv), "--depth", "2"]) == EXIT_OK


# ---------- scenario loading ----------

def test_bundled_scenarios_load():
    for path in sorted(SCENARIOS.glob("*/scenario.json")):
        scenario = load_scenario(path)
        assert scenario.payoff is not None or scenario.correlators is not None, path


def test_scenario_validation_names_the_field():
    with pytest.raises(ScenarioError, match="grid.steps"):
        parse_scenario(base_scenario(grid={"horizon": 1.0, "steps": 0}))
    with pytest.raises(ScenarioError, match="schema"):
        parse_scenario(dict(base_scenario(), schema="sigprice/0"))


def test_scenario_words_must_fit_the_alphabet():
    block = {"requests": [{"id": "a", "words": ["41"], "multi_index": [1]}]}
    with pytest.raises(ScenarioError):
        parse_scenario(base_scenario(correlators=block))
    deep = {"depth": 1, "requests": [{"id": "a", "words": ["21"], "multi_index": [1]}]}
    with pytest.raises(ScenarioError):
        parse_scenario(base_scenario(correlators=deep))


def test_overrides_and_requests():
    scenario = load_scenario(SCENARIOS / "bm_spread_correlators" / "scenario.json")
    updated = apply_overrides(scenario, seed=99, n_paths=50, out="elsewhere")
    assert (updated.seed, updated.n_paths, updated.output.dir) == (99, 50, "elsewhere")
    assert updated.output.paths_to_write == scenario.output.paths_to_write
    assert apply_overrides(scenario) == scenario

    requests = correlator_requests(updated)
    assert [request_id for request_id, _ in requests] == ["m0", "m1", "m2", "m3", "m4"]
    _, request = requests[2]
    assert request.multi_index == (2,)
    assert request.lift is LiftKind.STRATONOVICH
    assert request.words == (parse_weighted_word("21 - 31", 3),)
