"""Markdown report and SVG figures."""

import numpy as np
import pytest

from src.lab import run_experiment
from src.models.experiment import TheoremId
from src.models.manifest import RunManifest, RunRecord
from src.models.reports import EstimateReport, ReportStatus
from src.reporting import (
    benton_figure,
    epsilon_overlay,
    find_manifests,
    norm_history,
    p_ladder,
    pass_fail_matrix,
    report,
    rhs_spread,
    slack_vs_margin,
    status_label,
    status_summary,
)
from src.systems.benton import benton_demo
from src.systems.grid import Grid, Trajectory
from src.systems.storage import store_trajectory, write_manifest


def _report(theorem, lhs, rhs, **sweep):
    return EstimateReport.assess(theorem, lhs, rhs, sweep=sweep)


def _manifest(reports, expect=None):
    runs = [RunRecord(run_id=f"r{i}", experiment_id="e", seed=0, reports=[r], expect_status=expect)
            for i, r in enumerate(reports)]
    return RunManifest(experiment_id="e", runs=runs)


def test_tables():
    manifest = _manifest([_report(TheoremId.THM_HJLIP_CD, 0.5, 1.0), _report(TheoremId.THM_HJLIP_CD, 2.0, 1.0)])
    lines = pass_fail_matrix(manifest)
    assert lines[0] == "| run | check | status | lhs | rhs | slack |"
    assert lines[2] == "| r0 | thm_hjlip_cd | pass | 0.5 | 1 | 0.5 |"
    assert "| FAIL |" in lines[3]
    summary = status_summary({None: manifest})
    assert summary[0] == "| check | pass | FAIL | hypothesis | ERROR |"
    assert summary[2] == "| thm_hjlip_cd | 1 | 1 | 0 | 0 |"


def test_control_labels_show_both_statuses():
    hyp = EstimateReport.hypothesis_failed(TheoremId.THM_SEMICONCAVE_CD, "spike")
    manifest = _manifest([hyp], expect=ReportStatus.HYPOTHESIS_FAILED)
    assert status_label(manifest.runs[0], hyp) == "pass (control: hypothesis_failed)"
    plain = _manifest([hyp])
    assert status_label(plain.runs[0], hyp) == "hypothesis"


def test_rhs_spread():
    assert rhs_spread([]) == 0.0
    reports = [_report(TheoremId.THM_HJLIP_CD, 0.1, 1.0), _report(TheoremId.THM_HJLIP_CD, 0.1, 1.25)]
    assert rhs_spread(reports) == pytest.approx(0.25)


def test_sweep_figures_are_reproducible(tmp_path):
    reports = [_report(TheoremId.THM_STABILITY_L2, 0.5, 1.0 + m, margin=m) for m in (0.5, 0.2, 0.05)]
    reports += [_report(TheoremId.THM_HJLIP_CD, 0.1 * e, 1.0, epsilon=e) for e in (0.0, 0.1, 1.0)]
    reports += [_report(TheoremId.COR_GRADIENT_CD, 0.1, 1.0, epsilon=e) for e in (0.1, 1.0)]
    manifest = _manifest(reports)

    first = slack_vs_margin(manifest, tmp_path / "a.svg")
    second = slack_vs_margin(manifest, tmp_path / "b.svg")
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().lstrip().startswith("<?xml")

    overlay = epsilon_overlay(manifest, tmp_path / "eps.svg")
    assert overlay is not None and overlay.exists()
    # only viscosity-independent bounds get an overlay
    assert epsilon_overlay(_manifest(reports[-2:]), tmp_path / "none.svg") is None
    assert slack_vs_margin(_manifest(reports[3:]), tmp_path / "none.svg") is None


def test_p_ladder_reads_stored_pairs(tmp_path):
    grid = Grid(1, 32)
    x = grid.coordinates[0]
    times = np.array([0.0, 1.0])
    u1 = Trajectory(grid, times, np.stack([np.sin(2 * np.pi * x)] * 2), "u1")
    u2 = Trajectory(grid, times, np.zeros((2, 32)), "u2")
    refs = [store_trajectory(tmp_path, u1), store_trajectory(tmp_path, u2)]
    run = RunRecord(run_id="r", experiment_id="e", seed=0, trajectories=refs,
                    reports=[_report(TheoremId.THM_ONE_SIDED_LINF, 1.0, 1.0)])
    figure, problems = p_ladder(tmp_path, RunManifest(experiment_id="e", runs=[run]), tmp_path / "ladder.svg")
    assert figure is not None and figure.exists()
    assert problems == []


def test_benton_figure(tmp_path):
    path = benton_figure(benton_demo(resolutions=(64, 128)), tmp_path / "benton.svg")
    assert path.exists()


def test_find_manifests_lists_what_it_skips(tmp_path):
    (tmp_path / "empty").mkdir()
    write_manifest(tmp_path / "good", RunManifest(experiment_id="good"))
    manifests, missing = find_manifests(tmp_path)
    assert [m.experiment_id for m in manifests.values()] == ["good"]
    assert missing == ["empty: no manifest.json"]
    assert find_manifests(tmp_path / "absent")[0] == {}


def test_report_from_a_real_run(heat_experiment, settings):
    run_experiment(heat_experiment, settings)
    bundle = report(settings.out_dir)
    text = bundle.markdown.read_text()
    assert bundle.markdown == settings.out_dir / "report.md"
    assert "## heat" in text
    assert "| heat-s0 | val_heat_kernel | pass |" in text
    assert "| val_heat_kernel | 1 | 0 | 0 | 0 |" in text
    assert [f.name for f in bundle.figures] == ["heat_norms.svg"] and bundle.missing == []
    assert "![heat_norms](figures/heat_norms.svg)" in text
    assert set(bundle.manifests) == {"heat"}


def test_report_includes_the_benton_figure(settings):
    manifest = _manifest([benton_demo(resolutions=(64, 128)).report])
    write_manifest(settings.out_dir / "benton", manifest.model_copy(update={"experiment_id": "benton"}))
    bundle = report(settings.out_dir)
    assert any(f.name == "benton.svg" for f in bundle.figures)
    assert "## Inviscid non-uniqueness" in bundle.markdown.read_text()


def test_norm_history_reads_the_stored_series(tmp_path):
    grid = Grid(1, 32)
    x = grid.coordinates[0]
    times = np.array([0.0, 0.5, 1.0])
    rho = Trajectory(grid, times, np.stack([1.0 + np.exp(-t) * np.cos(2 * np.pi * x) for t in times]), "rho")
    other = Trajectory(grid, times, np.ones((3, 32)), "v")
    refs = [store_trajectory(tmp_path, rho), store_trajectory(tmp_path, other)]
    manifest = RunManifest(experiment_id="e", runs=[RunRecord(run_id="r", experiment_id="e", seed=0, trajectories=refs)])
    figure, problems = norm_history(tmp_path, manifest, tmp_path / "norms.svg")
    assert figure is not None and figure.exists()
    assert problems == []

    (tmp_path / refs[0].norms_path).unlink()
    figure, problems = norm_history(tmp_path, manifest, tmp_path / "again.svg")
    assert figure is None
    assert len(problems) == 1 and problems[0].startswith("r: ")


def test_norm_history_skips_runs_without_densities(tmp_path):
    manifest = RunManifest(experiment_id="e", runs=[RunRecord(run_id="r", experiment_id="e", seed=0)])
    assert norm_history(tmp_path, manifest, tmp_path / "none.svg") == (None, [])
