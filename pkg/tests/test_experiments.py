import csv
import io
import json
import math

import numpy as np
import pytest

import experiments
from errors import UsageError


# ===== CONFIG FILES =====
def test_parse_config_text_splits_structural_keys():
    text = """
    # lemma run
    experiment = prob.lemma1
    seed = 12
    instances = 5   # small
    output = out/lemma.json
    """
    data = experiments.parse_config_text(text)
    assert data["experiment"] == "prob.lemma1"
    assert data["seed"] == "12"
    assert data["output"] == "out/lemma.json"
    assert data["parameters"] == {"instances": "5"}


@pytest.mark.parametrize("text", [
    # Case 1: Missing separator
    "experiment prob.lemma1",
    # Case 2: Empty key
    "= 3",
])
def test_parse_config_text_errors(text):
    with pytest.raises(UsageError):
        experiments.parse_config_text(text)


def test_merge_overrides_flags_win():
    """Test that command-line values replace file values key by key."""
    data = {"experiment": "prob.lemma1", "seed": "1", "parameters": {"instances": "5"}, "format": "csv"}
    merged = experiments.merge_overrides(data, {"seed": 9, "format": None, "parameters": {"instances": "2"}})
    assert merged["seed"] == 9
    assert merged["experiment"] == "prob.lemma1"
    assert merged["parameters"] == {"instances": "2"}
    assert merged["output"] == {"format": "csv"}


@pytest.mark.parametrize("data", [
    # Case 1: Unknown experiment
    {"experiment": "ic.nope"},
    # Case 2: Sampling without a seed
    {"experiment": "prob.lemma1"},
    # Case 3: Seed beyond 64 bits
    {"experiment": "bell.chsh", "seed": 2 ** 64},
    # Case 4: Unknown parameter
    {"experiment": "bell.chsh", "parameters": {"boxx": "pr"}},
    # Case 5: Parameter out of range
    {"experiment": "prob.series", "parameters": {"step": "1.5"}},
    # Case 6: Unknown output format
    {"experiment": "bell.chsh", "output": {"format": "xml"}},
])
def test_invalid_configs_are_usage_errors(data):
    """Test that every configuration problem maps to the usage error category."""
    with pytest.raises(UsageError):
        experiments.load_config(data)


def test_parameters_are_coerced():
    config = experiments.load_config({"experiment": "ic.protocol", "parameters": {"levels": "2", "e0": "0.5"}})
    params = config.typed_parameters()
    assert params.levels == 2
    assert params.e0 == 0.5


# ===== RUNNING =====
def test_run_report_layout():
    config = experiments.load_config({"experiment": "bell.chsh", "parameters": {"box": "pr"}})
    report = experiments.run(config)
    assert set(report) == {"experiment", "version", "seed", "config", "tolerances", "results"}
    assert report["version"] == experiments.LAB_VERSION
    assert report["results"]["value"] == pytest.approx(4.0)
    assert report["results"]["pass_ns"] is True
    assert report["results"]["pass_quantum"] is False
    assert report["config"]["parameters"]["box"] == "pr"


def test_same_seed_same_bytes():
    config = experiments.load_config({"experiment": "prob.lemma1", "seed": 5, "parameters": {"instances": 3}})
    first = experiments.render(experiments.run(config))
    second = experiments.render(experiments.run(config))
    assert first == second


def test_different_seeds_differ():
    reports = [
        experiments.run(experiments.load_config({"experiment": "bell.monogamy", "seed": seed,
                                                 "parameters": {"source": "random", "trials": 2}}))
        for seed in (1, 2)
    ]
    assert reports[0]["results"]["max_quantum"] != reports[1]["results"]["max_quantum"]


@pytest.mark.parametrize("experiment,parameters,key,expected", [
    # Case 1: Classical maximum
    ("bell.chsh", {"box": "classical-max"}, "value", 2.0),
    # Case 2: Exact information-causality quantity of the PR game
    ("ic.game", {"resource": "pr"}, "value", 2.0),
    # Case 3: Perfect nested protocol
    ("ic.protocol", {"levels": 1}, "value_formula", 2.0),
    # Case 4: Contextuality demo
    ("cf.contextuality", {}, "correlation_difference", 2.0),
    # Case 5: Identity against negation loop
    ("cf.loop", {"pair": "identity-negation"}, "contradiction_fraction", 1.0),
])
def test_experiment_values(experiment, parameters, key, expected):
    report = experiments.run(experiments.load_config({"experiment": experiment, "parameters": parameters}))
    assert report["results"][key] == pytest.approx(expected)


def test_multi_experiment_reports_both_definitions():
    results = experiments.run(experiments.load_config({"experiment": "ic.multi"}))["results"]
    assert results["flawed"]["value"] == pytest.approx(2.0)
    assert results["corrected"]["value"] == pytest.approx(1.0)


def test_protocol_skips_exact_when_too_large():
    results = experiments.run(
        experiments.load_config({"experiment": "ic.protocol", "parameters": {"levels": 4}})
    )["results"]
    assert results["ic"] is None
    assert len(results["success_formula"]) == 16


def test_protocol_simulation_needs_seed():
    with pytest.raises(UsageError):
        experiments.load_config({"experiment": "ic.protocol", "parameters": {"samples": 100}})


def test_witness_cpi_source():
    results = experiments.run(experiments.load_config({"experiment": "cf.cpi", "parameters": {"source": "witness"}}))
    assert results["results"]["feasible"] is True
    assert results["results"]["cpi"] <= 1e-6


# ===== HELPERS =====
def test_spawn_seeds_are_stable_and_distinct():
    first = experiments.spawn_seeds(7, 4)
    assert first == experiments.spawn_seeds(7, 4)
    assert len(set(first)) == 4
    assert experiments.spawn_seeds(7, 2) == first[:2]


def test_parse_angles():
    assert experiments.parse_angles("tsirelson") == experiments.quantum.TSIRELSON_ANGLES
    assert experiments.parse_angles("0,1.5;0.5,2") == ((0.0, 1.5), (0.5, 2.0))
    with pytest.raises(UsageError):
        experiments.parse_angles("0,1")


def test_build_resource_rejects_unknown_kind():
    with pytest.raises(UsageError):
        experiments.build_resource("teleport")


def test_to_builtin_converts_numpy():
    converted = experiments.to_builtin({"a": np.float64(0.5), "b": np.array([1, 2]), "c": math.nan, "d": np.bool_(True)})
    assert converted == {"a": 0.5, "b": [1, 2], "c": None, "d": True}
    assert json.dumps(converted)


# ===== RENDERING =====
def test_render_json_is_sorted():
    text = experiments.render({"b": 1, "a": {"d": 2, "c": 3}})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert text.index('"c"') < text.index('"d"')


def test_render_csv_rows_table():
    report = {"experiment": "suite.x", "seed": 0, "results": {"rows": [{"check": 1, "pass": True, "v": {"x": 1}}]}}
    rows = list(csv.DictReader(io.StringIO(experiments.render(report, "csv"))))
    assert rows == [{"experiment": "suite.x", "seed": "0", "check": "1", "pass": "True", "v.x": "1"}]


def test_render_csv_key_value():
    report = {"experiment": "bell.chsh", "seed": None, "results": {"value": 4.0, "pairing": {"boxes": [0, 1]}}}
    rows = list(csv.reader(io.StringIO(experiments.render(report, "csv"))))
    assert rows[0] == ["experiment", "seed", "key", "value"]
    assert ["bell.chsh", "", "pairing.boxes[1]", "1"] in rows


def test_render_unknown_format():
    with pytest.raises(UsageError):
        experiments.render({}, "xml")


# ===== SUITE =====
SMALL_SUITE = {
    "ic_trials": 2,
    "monogamy_trials": 5,
    "protocol_trials": 500,
    "sample_draws": 2000,
    "lemma_instances": 5,
}


def test_suite_rows():
    """
    Test that the suite runs every check and reports one row each.
    Verifies:
    - Twelve rows in check order
    - Deterministic checks pass
    """
    report = experiments.suite("paper-checks", 0, SMALL_SUITE)
    rows = report["results"]["rows"]
    assert [row["check"] for row in rows] == list(range(1, 13))
    assert report["results"]["checks"] == 12
    deterministic = {1, 3, 5, 6, 7, 10, 11, 12}
    assert all(row["pass"] for row in rows if row["check"] in deterministic)


@pytest.mark.parametrize("name,seed,parameters", [
    # Case 1: Unknown suite
    ("nope", 0, {}),
    # Case 2: Negative seed
    ("paper-checks", -1, {}),
    # Case 3: Unknown suite parameter
    ("paper-checks", 0, {"trials": 3}),
])
def test_suite_usage_errors(name, seed, parameters):
    with pytest.raises(UsageError):
        experiments.suite(name, seed, parameters)
