"""Command line exit codes."""

import csv
import io
import json

import pytest

from src.main import build_parser, main


@pytest.fixture
def cli(settings):
    def run(*argv):
        return main(["--out-dir", str(settings.out_dir), "--threads", "1", "--log-level", "WARNING", *argv])

    return run


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_exponents_prints_csv(cli, capsys):
    assert cli("exponents", "--dim", "2", "--q", "2", "inf", "--r", "2") == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["q", "r", "n_over_2q_plus_1_over_r", "admissible_divb", "admissible_AS", "theta_or_NA"]
    assert rows[1] == ["2", "2", "1", "true", "false", "1/2"]
    assert rows[2][0] == "inf" and rows[2][-1] == "NA"
    assert len(rows) == 3


def test_exponents_table_flag(cli, capsys):
    assert cli("exponents", "--dim", "1", "--q", "2", "--r", "2", "--table") == 0
    assert "admissibility for n = 1" in capsys.readouterr().out


def test_verify_passes(cli, heat_experiment, write_config, settings):
    path = write_config([heat_experiment.model_dump(mode="json")])
    assert cli("verify", str(path)) == 0
    assert (settings.out_dir / "heat" / "manifest.json").exists()


def test_verify_reports_hypothesis_failures(cli, write_config):
    path = write_config([{
        "id": "control",
        "suite": ["thm_stability_L2"],
        "grid": {"dim": 1, "n_points": 32},
        "solver": {"dt": 1.0e-3, "t_end": 0.02},
        "drift": {"kind": "one_sided", "c2": 0.5},
        "data": {"kind": "bump"},
    }])
    assert cli("verify", str(path)) == 3


def test_check_filter(cli, heat_experiment, write_config, settings):
    path = write_config([heat_experiment.model_dump(mode="json")])
    assert cli("verify", str(path), "--check", "benton_demo") == 0
    manifest = json.loads((settings.out_dir / "heat" / "manifest.json").read_text())
    assert manifest["runs"][0]["reports"] == []
    assert cli("verify", str(path), "--check", "no_such_check") == 1


def test_invalid_config_exits_with_one(cli, write_config):
    path = write_config([{"id": "a", "grid": {"n_points": 48}}])
    assert cli("verify", str(path)) == 1
    assert cli("verify", str(path.parent / "missing.yaml")) == 1


def test_simulate_then_report(cli, heat_experiment, write_config, settings):
    path = write_config([heat_experiment.model_dump(mode="json")])
    assert cli("simulate", str(path)) == 0
    assert cli("report", str(settings.out_dir)) == 0
    assert (settings.out_dir / "report.md").exists()


def test_report_without_manifests(cli, tmp_path):
    assert cli("report", str(tmp_path / "nothing")) == 1


def test_sweep_runs_only_swept_experiments(cli, heat_experiment, write_config, settings):
    path = write_config([heat_experiment.model_dump(mode="json")])
    assert cli("sweep", str(path)) == 0
    assert not (settings.out_dir / "heat").exists()
    assert (settings.out_dir / "report.md").exists()


def test_benton(cli, settings):
    assert cli("benton") == 0
    out = settings.out_dir / "benton"
    assert json.loads((out / "report.json").read_text())["status"] == "passed"
    assert (out / "benton.svg").exists()
