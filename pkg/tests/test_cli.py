import csv
import io
import json

import pytest
from click.testing import CliRunner

from errors import NumericalError
from main import cli


def invoke(runner: CliRunner, *args: str):
    return runner.invoke(cli, list(args))


def test_bell_chsh_prints_report(runner: CliRunner):
    """
    Test that `bell chsh` writes one JSON report to stdout and exits 0.
    This verifies the happy path:
    - Exit code 0 even though the quantum verdict fails
    - Report carries the experiment name and results
    """
    result = invoke(runner, "bell", "chsh", "--box", "pr")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["experiment"] == "bell.chsh"
    assert report["results"]["value"] == pytest.approx(4.0)
    assert report["results"]["pass_quantum"] is False


def test_quantum_box_with_custom_angles(runner: CliRunner):
    result = invoke(runner, "bell", "chsh", "--box", "quantum", "--angles", "0,1.5707963267948966;0.7853981633974483,2.356194490192345")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["results"]["best_value"] == pytest.approx(2 * 2 ** 0.5)


def test_ic_game_exact(runner: CliRunner):
    result = invoke(runner, "ic", "game", "--resource", "pr")
    assert result.exit_code == 0
    results = json.loads(result.stdout)["results"]
    assert results["value"] == pytest.approx(2.0)
    assert results["pass"] is False


@pytest.mark.parametrize("args", [
    # Case 1: Sampling without a seed
    ("ic", "game", "--sampled"),
    # Case 2: Unknown box kind
    ("bell", "chsh", "--box", "magic"),
    # Case 3: Seed beyond 64 bits
    ("prob", "lemma1", "--seed", str(2 ** 64)),
    # Case 4: Malformed --set
    ("suite", "paper-checks", "--set", "ic_trials"),
    # Case 5: Unparseable angles
    ("bell", "chsh", "--box", "quantum", "--angles", "zero"),
])
def test_usage_errors_exit_2(runner: CliRunner, args):
    """Test that every usage problem exits with status 2 and no report."""
    result = invoke(runner, *args)
    assert result.exit_code == 2
    assert result.stdout == ""


@pytest.mark.parametrize("args,message", [
    # Case 1: Composite correlator out of range
    (("ic", "e12", "--e1", "1.5"), "outside [0, 1]"),
    # Case 2: Isotropic correlator out of range
    (("bell", "chsh", "--box", "isotropic", "--e", "1.5"), "outside [0, 1]"),
    # Case 3: Unknown named state
    (("bell", "chsh", "--box", "quantum", "--state", "foo"), "Unknown state"),
])
def test_invalid_values_exit_2(runner: CliRunner, args, message):
    """Test that flag values rejected by the library exit as usage errors."""
    result = invoke(runner, *args)
    assert result.exit_code == 2
    assert result.stdout == ""
    assert message in result.stderr


def test_numerical_failure_exits_3(runner: CliRunner, mocker):
    mocker.patch("main.run", side_effect=NumericalError("solver failed"))
    result = invoke(runner, "cf", "contextuality")
    assert result.exit_code == 3
    assert "solver failed" in result.stderr


def test_unexpected_exception_exits_3(runner: CliRunner, mocker):
    mocker.patch("main.run", side_effect=RuntimeError("boom"))
    result = invoke(runner, "cf", "contextuality")
    assert result.exit_code == 3
    assert "boom" in result.stderr


def test_same_seed_same_stdout(runner: CliRunner):
    first = invoke(runner, "prob", "lemma1", "--instances", "3", "--seed", "7")
    second = invoke(runner, "prob", "lemma1", "--instances", "3", "--seed", "7")
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    assert json.loads(first.stdout)["seed"] == 7


def test_csv_output(runner: CliRunner):
    result = invoke(runner, "prob", "series", "--terms", "50", "--step", "0.25", "--format", "csv")
    assert result.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(result.stdout)))
    assert [float(row["e"]) for row in rows] == [0.0, 0.25, 0.5, 0.75]
    assert all(row["experiment"] == "prob.series" for row in rows)


def test_output_file_under_env_dir(runner: CliRunner, mocker, tmp_path):
    """Test that relative --output paths land under $LAB_OUTPUT_DIR."""
    mocker.patch.dict("os.environ", {"LAB_OUTPUT_DIR": str(tmp_path)})
    result = invoke(runner, "cf", "pr-infeasible", "--output", "reports/pr.json")
    assert result.exit_code == 0
    assert result.stdout == ""
    report = json.loads((tmp_path / "reports" / "pr.json").read_text())
    assert report["results"]["infeasible"] is True


def test_run_config_file_with_overrides(runner: CliRunner, tmp_path):
    """Test that `run` reads key = value files and that --set and --seed win."""
    config = tmp_path / "lemma.cfg"
    config.write_text("experiment = prob.lemma1\nseed = 3\ninstances = 4  # quick\n")
    result = invoke(runner, "run", "--config", str(config), "--set", "instances=2", "--seed", "11")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["seed"] == 11
    assert report["results"]["instances"] == 2
    assert report["config"]["parameters"]["instances"] == 2


def test_run_unknown_experiment(runner: CliRunner, tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("experiment = bell.nope\n")
    result = invoke(runner, "run", "--config", str(config))
    assert result.exit_code == 2


def test_suite_command(runner: CliRunner):
    result = invoke(
        runner, "suite", "paper-checks", "--seed", "1",
        "--set", "ic_trials=2", "--set", "monogamy_trials=3", "--set", "protocol_trials=200",
        "--set", "sample_draws=500", "--set", "lemma_instances=3",
        "--format", "csv",
    )
    assert result.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(result.stdout)))
    assert [int(row["check"]) for row in rows] == list(range(1, 13))
    assert all(row["experiment"] == "suite.paper-checks" for row in rows)


def test_list_command(runner: CliRunner):
    result = invoke(runner, "list")
    assert result.exit_code == 0
    assert "bell.chsh" in result.stdout
    assert "prob.series" in result.stdout


def test_group_configures_logging(runner: CliRunner, mocker):
    configure = mocker.patch("main.configure_logging")
    mocker.patch.dict("os.environ", {"JSON_LOGS": "false", "LOG_LEVEL": "WARNING"})
    invoke(runner, "list")
    configure.assert_called_once_with(json_logs=False, level="WARNING")
