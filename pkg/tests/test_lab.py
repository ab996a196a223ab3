"""Orchestration: run points, manifests, controls and refinement."""

from dataclasses import replace

import pytest

from src.lab import compare_refinement, expand_points, run_experiment, run_experiments, run_point, simulate_config
from src.models.experiment import Experiment, ExperimentFile, TheoremId
from src.models.manifest import RunEventKind
from src.models.reports import EstimateReport, ReportStatus
from src.systems.storage import MANIFEST_NAME, TIMING_NAME
from src.tools.suites import SuiteHandlers


def _experiment(**fields):
    base = {"id": "e", "grid": {"dim": 1, "n_points": 32}, "solver": {"dt": 1e-3, "t_end": 0.02}}
    base.update(fields)
    return Experiment.model_validate(base)


def test_expand_points_order_and_ids():
    exp = _experiment(seeds=[0, 1], sweep={"epsilon": [0.1, 1.0], "gamma": [3.0]})
    points = expand_points(exp)
    assert [p.run_id for p in points] == [
        "e-s0-epsilon0.1-gamma3.0", "e-s0-epsilon1.0-gamma3.0",
        "e-s1-epsilon0.1-gamma3.0", "e-s1-epsilon1.0-gamma3.0",
    ]
    assert points[0].experiment.solver.epsilon == 0.1
    assert points[1].experiment.hamiltonian.gamma == 3.0
    assert points[0].sweep == {"epsilon": 0.1, "gamma": 3.0}
    assert [p.seed for p in expand_points(exp, seed_offset=5)][::2] == [5, 6]


def test_expand_points_without_sweep():
    points = expand_points(_experiment(seeds=[3]))
    assert [(p.run_id, p.seed, p.sweep) for p in points] == [("e-s3", 3, {})]


def test_sweep_applies_margin_c1_and_p():
    exp = _experiment(drift={"kind": "lrlq", "q": 2, "r": 2}, sweep={"margin": [0.2], "p": [4]})
    point = expand_points(exp)[0]
    assert point.experiment.drift.margin == 0.2
    assert point.experiment.checks.p == ["4"]
    assert point.run_id == "e-s0-margin0.2-p4"


def test_heat_run_writes_manifest_reports_and_timing(heat_experiment, settings):
    manifest = run_experiment(heat_experiment, settings)
    assert manifest.exit_code() == 0
    run = manifest.runs[0]
    assert run.run_id == "heat-s0"
    assert [r.theorem_id for r in run.reports] == [TheoremId.VAL_HEAT_KERNEL]
    assert run.reports[0].passed
    assert [ref.label for ref in run.trajectories] == ["rho"]
    assert run.drift["kind"] == "zero"
    assert run.config["id"] == "heat"
    assert [e.kind for e in manifest.events] == [RunEventKind.STARTED, RunEventKind.SOLVED, RunEventKind.CHECK]
    assert [e.seq for e in manifest.events] == [0, 1, 2]

    exp_dir = settings.out_dir / "heat"
    for name in (MANIFEST_NAME, TIMING_NAME, "reports.csv"):
        assert (exp_dir / name).exists()
    assert (exp_dir / run.trajectories[0].path).exists()


def test_reruns_and_thread_counts_give_identical_manifests(heat_experiment, settings, tmp_path):
    exp = heat_experiment.model_copy(update={"seeds": [0, 1, 2]})
    run_experiment(exp, settings)
    first = (settings.out_dir / "heat" / MANIFEST_NAME).read_bytes()
    run_experiment(exp, settings)
    assert (settings.out_dir / "heat" / MANIFEST_NAME).read_bytes() == first

    threaded = replace(settings, threads=3, out_dir=tmp_path / "threaded")
    run_experiment(exp, threaded)
    assert (threaded.out_dir / "heat" / MANIFEST_NAME).read_bytes() == first


def test_seed_offset_shifts_every_seed(heat_experiment, settings):
    manifest = run_experiment(heat_experiment, replace(settings, seed=7), store=False)
    assert manifest.runs[0].run_id == "heat-s7"
    assert manifest.runs[0].seed == 7
    assert not (settings.out_dir / "heat").exists()


def test_empty_suite_passes(settings):
    manifest = run_experiment(_experiment(id="nothing"), settings)
    assert manifest.exit_code() == 0
    assert manifest.runs[0].reports == []
    assert manifest.runs[0].drift is None
    assert (settings.out_dir / "nothing" / MANIFEST_NAME).exists()


def test_a_failing_check_does_not_abort_its_siblings(heat_experiment, settings):
    # the superquadratic check refuses the quadratic Hamiltonian at check time
    exp = heat_experiment.model_copy(update={"suite": [TheoremId.THM_SUPERQUADRATIC_CD, TheoremId.VAL_HEAT_KERNEL]})
    manifest = run_experiment(exp, settings, store=False)
    statuses = [r.status for r in manifest.runs[0].reports]
    assert statuses == [ReportStatus.ERROR, ReportStatus.PASSED]
    assert "LabError" in manifest.runs[0].reports[0].notes[-1]
    assert any(e.kind == RunEventKind.FAILED for e in manifest.events)
    assert manifest.exit_code() == 1


@pytest.mark.parametrize("expect, code", [(None, 3), ("hypothesis_failed", 0), ("estimate_failed", 2)])
def test_negative_controls(settings, expect, code):
    # a bounded one-sided drift carries no divergence class, so the stability check reports a failed hypothesis
    exp = _experiment(id="control", suite=["thm_stability_L2"], drift={"kind": "one_sided", "c2": 0.5},
                      data={"kind": "bump"}, expect_status=expect)
    manifest = run_experiment(exp, settings, store=False)
    assert manifest.runs[0].reports[0].status == ReportStatus.HYPOTHESIS_FAILED
    assert manifest.exit_code() == code


def test_run_experiments_restricts_checks(heat_experiment, settings):
    exp = heat_experiment.model_copy(update={"suite": [TheoremId.VAL_HEAT_KERNEL, TheoremId.BENTON_DEMO]})
    manifest = run_experiments(ExperimentFile(experiments=[exp]), settings, "lab", only=[TheoremId.BENTON_DEMO])
    assert manifest.experiment_id == "lab"
    assert [r.theorem_id for r in manifest.reports()] == [TheoremId.BENTON_DEMO]
    assert manifest.exit_code() == 0


def test_refinement_adds_a_compared_run(heat_experiment, settings):
    exp = heat_experiment.model_copy(update={"refinement": True})
    outcome = run_point(expand_points(exp)[0], SuiteHandlers())
    assert outcome.error is None
    base, refined = outcome.reports
    assert refined.run_id == "heat-s0-refined"
    assert "refined run at 2N, dt/2" in refined.notes
    assert refined.passed, refined.notes
    assert refined.constants_used["base_slack"] == base.slack
    assert set(outcome.trajectories) == {"rho", "refined_rho"}
    assert outcome.trajectories["refined_rho"].grid.n_points == 64


def test_compare_refinement_flags_flips_and_slack_moves():
    tid = TheoremId.THM_STABILITY_L2
    flipped = EstimateReport.assess(tid, 2.0, 1.0)
    compare_refinement([EstimateReport.assess(tid, 0.5, 1.0)], [flipped])
    assert "failed: refinement keeps the pass" in flipped.notes

    moved = EstimateReport.assess(tid, 0.1, 1.0)
    compare_refinement([EstimateReport.assess(tid, 0.5, 1.0)], [moved])
    assert moved.status == ReportStatus.ESTIMATE_FAILED
    assert moved.variants["slack_change"] == pytest.approx(0.4)

    steady = EstimateReport.assess(tid, 0.52, 1.0)
    compare_refinement([EstimateReport.assess(tid, 0.5, 1.0)], [steady])
    assert steady.passed

    after_failure = EstimateReport.assess(tid, 0.1, 1.0)
    compare_refinement([EstimateReport.assess(tid, 2.0, 1.0)], [after_failure])
    assert after_failure.passed


def test_simulate_stores_trajectories_only(heat_experiment, settings, write_config):
    path = write_config([heat_experiment.model_dump(mode="json")])
    manifest = simulate_config(path, settings)
    run = manifest.runs[0]
    assert run.reports == [] and run.error is None
    assert [ref.label for ref in run.trajectories] == ["rho"]
    assert (settings.out_dir / "heat" / MANIFEST_NAME).exists()


@pytest.mark.slow
def test_acceptance_suite(settings):
    from pathlib import Path

    from src.systems.validation import load_experiments

    data = load_experiments(Path(__file__).resolve().parents[1] / "acceptance.yaml")
    manifest = run_experiments(data, replace(settings, threads=4), "acceptance")
    failures = [r.summary() for run in manifest.runs for r in run.reports if run.effective_status(r) != ReportStatus.PASSED]
    assert manifest.exit_code() == 0, failures
