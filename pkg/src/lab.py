"""Lab orchestrator - expands experiments into run points, runs them on a worker pool, writes manifests."""

from __future__ import annotations
import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from src.models.experiment import Experiment, ExperimentFile, TheoremId
from src.models.manifest import RunEvent, RunEventKind, RunManifest, RunRecord
from src.models.reports import EstimateReport, ReportStatus
from src.settings import LabSettings
from src.systems.event_log import RunLog
from src.systems.grid import Trajectory
from src.systems.storage import code_version, store_trajectory, write_manifest, write_reports_csv, write_timing
from src.systems.validation import load_experiments
from src.tools.registry import RunKind
from src.tools.suites import RunContext, RunPoint, SuiteHandlers

logger = logging.getLogger(__name__)

REFINEMENT_SLACK_FRACTION = 0.1


def _with_sweep(exp: Experiment, values: dict[str, Any]) -> Experiment:
    """Copy of the experiment with one sweep point applied."""
    solver, drift, checks, ham = exp.solver, exp.drift, exp.checks, exp.hamiltonian
    if "epsilon" in values:
        solver = solver.model_copy(update={"epsilon": float(values["epsilon"])})
    if "margin" in values:
        drift = drift.model_copy(update={"margin": float(values["margin"])})
    if "c1" in values:
        drift = drift.model_copy(update={"c1": float(values["c1"])})
    if "p" in values:
        checks = checks.model_copy(update={"p": [str(values["p"])]})
    if "gamma" in values:
        ham = ham.model_copy(update={"gamma": float(values["gamma"])})
    return exp.model_copy(update={"solver": solver, "drift": drift, "checks": checks, "hamiltonian": ham})


def expand_points(exp: Experiment, seed_offset: int = 0) -> list[RunPoint]:
    """seeds x sweep combinations, in a fixed order."""
    axes = exp.sweep.axes()
    names = list(axes)
    combos = list(itertools.product(*axes.values())) if axes else [()]
    points = []
    for seed in exp.seeds:
        for combo in combos:
            values = dict(zip(names, combo))
            run_id = f"{exp.id}-s{seed + seed_offset}" + "".join(f"-{k}{v}" for k, v in values.items())
            points.append(RunPoint(_with_sweep(exp, values), seed + seed_offset, values, run_id))
    return points


@dataclass
class RunOutcome:
    """What one worker hands back; storage happens on the main thread."""
    point: RunPoint
    reports: list[EstimateReport] = field(default_factory=list)
    trajectories: dict[str, Trajectory] = field(default_factory=dict)
    events: list[RunEvent] = field(default_factory=list)
    drift: Optional[dict[str, Any]] = None
    error: Optional[str] = None
    wall: float = 0.0


def compare_refinement(base: list[EstimateReport], refined: list[EstimateReport]) -> None:
    """The refined run may not flip a pass and its slack may move by less than 10% of the bound."""
    for b, r in zip(base, refined):
        if b.theorem_id != r.theorem_id:
            continue
        r.notes.append("refined run at 2N, dt/2")
        r.constants_used["base_slack"] = b.slack
        change = abs(r.slack - b.slack)
        r.variants["slack_change"] = change
        if b.passed:
            r.require(r.passed, "refinement keeps the pass")
            scale = max(abs(b.rhs), 1e-12)
            r.require(change < REFINEMENT_SLACK_FRACTION * scale, "slack moves less than 10% of the bound")


def _run_suite(point: RunPoint, handlers: SuiteHandlers, log: RunLog) -> tuple[list[EstimateReport], RunContext]:
    ctx = RunContext(point, log)
    reports: list[EstimateReport] = []
    for theorem_id in point.experiment.suite:
        try:
            reports.extend(handlers.run(theorem_id, ctx))
        except Exception as exc:  # a failing check never aborts its siblings
            message = f"{type(exc).__name__}: {exc}"
            logger.warning("%s: %s failed: %s", point.run_id, theorem_id.value, message)
            log.add(RunEventKind.FAILED, point.run_id, message, theorem_id=theorem_id.value)
            reports.append(EstimateReport.error(theorem_id, message, run_id=point.run_id,
                                                epsilon=ctx.cfg.epsilon, sweep=dict(point.sweep)))
    return reports, ctx


def run_point(point: RunPoint, handlers: SuiteHandlers) -> RunOutcome:
    """Solve and check one run point; every exception ends up in the outcome."""
    started = time.perf_counter()
    log = RunLog()
    log.add(RunEventKind.STARTED, point.run_id, point.experiment.summary(), seed=point.seed)
    logger.info("run %s started", point.run_id)
    outcome = RunOutcome(point)
    try:
        reports, ctx = _run_suite(point, handlers, log)
        outcome.trajectories = dict(ctx.trajectories)
        outcome.drift = ctx.drift_record()
        if point.experiment.refinement and point.experiment.suite:
            refined_point = RunPoint(point.experiment, point.seed, point.sweep, f"{point.run_id}-refined", True)
            refined, refined_ctx = _run_suite(refined_point, handlers, log)
            compare_refinement(reports, refined)
            reports += refined
            outcome.trajectories.update({f"refined_{k}": v for k, v in refined_ctx.trajectories.items()})
        outcome.reports = reports
    except Exception as exc:
        outcome.error = f"{type(exc).__name__}: {exc}"
        log.add(RunEventKind.FAILED, point.run_id, outcome.error)
        logger.warning("run %s failed: %s", point.run_id, outcome.error)
    outcome.events = log.get_all()
    outcome.wall = time.perf_counter() - started
    logger.info("run %s finished in %.2fs", point.run_id, outcome.wall)
    return outcome


def run_experiment(
    exp: Experiment,
    settings: LabSettings,
    handlers: Optional[SuiteHandlers] = None,
    store: bool = True,
) -> RunManifest:
    """Run every point of one experiment and write <out>/<id>/manifest.json."""
    handlers = handlers or SuiteHandlers()
    points = expand_points(exp, settings.seed)
    exp_dir = settings.out_dir / exp.id
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        outcomes = list(pool.map(lambda p: run_point(p, handlers), points))

    # merged single-threaded, in point order
    log = RunLog()
    runs = []
    for outcome in outcomes:
        point = outcome.point
        refs = [store_trajectory(exp_dir, traj, label) for label, traj in outcome.trajectories.items()] if store else []
        runs.append(RunRecord(
            run_id=point.run_id, experiment_id=exp.id, seed=point.seed, sweep=dict(point.sweep),
            config=point.experiment.model_dump(mode="json"), drift=outcome.drift, trajectories=refs,
            reports=outcome.reports, error=outcome.error,
            expect_status=ReportStatus(exp.expect_status) if exp.expect_status else None,
        ))
        log.extend(outcome.events)
    manifest = RunManifest(experiment_id=exp.id, code_version=code_version(), runs=runs, events=log.get_all())
    if store:
        write_manifest(exp_dir, manifest)
        write_reports_csv(exp_dir, manifest)
        write_timing(exp_dir, {
            "total_seconds": time.perf_counter() - started,
            "runs": {o.point.run_id: o.wall for o in outcomes},
        })
    logger.info("%s, %d failure event(s)", manifest.summary(), len(log.failures()))
    return manifest


def run_experiments(
    data: ExperimentFile,
    settings: LabSettings,
    name: str = "lab",
    only: Optional[list[TheoremId]] = None,
) -> RunManifest:
    """Run every experiment of a file; the aggregate manifest is returned, not written."""
    handlers = SuiteHandlers()
    manifests = []
    for exp in data.experiments:
        if only is not None:
            exp = exp.model_copy(update={"suite": [t for t in exp.suite if t in only]})
        manifests.append(run_experiment(exp, settings, handlers))
    return RunManifest.merged(name, manifests)


def run_config(cfg_path: Union[str, Path], settings: LabSettings) -> RunManifest:
    """Validate an experiment file and run all of it."""
    path = Path(cfg_path)
    return run_experiments(load_experiments(path), settings, path.stem)


def simulate_config(cfg_path: Union[str, Path], settings: LabSettings) -> RunManifest:
    """Solve what each experiment's suite needs and store the trajectories, without checking anything."""
    path = Path(cfg_path)
    data = load_experiments(path)
    handlers = SuiteHandlers()
    manifests = []
    for exp in data.experiments:
        kinds = {handlers.registry.get(t).run_kind for t in exp.suite} or {RunKind.FOKKER_PLANCK}
        simulate = exp.model_copy(update={"suite": []})
        exp_dir = settings.out_dir / exp.id
        runs = []
        log = RunLog()
        for point in expand_points(simulate, settings.seed):
            ctx = RunContext(point, log)
            log.add(RunEventKind.STARTED, point.run_id, "simulate")
            error = None
            try:
                if kinds & {RunKind.FOKKER_PLANCK, RunKind.FP_PAIR}:
                    ctx.fp_run()
                if RunKind.TRANSPORT in kinds:
                    ctx.transport_run()
                if RunKind.TRANSPORT_PAIR in kinds:
                    ctx.transport_pair()
                if RunKind.HJ_PAIR in kinds:
                    ctx.hj_pair()
            except Exception as exc:
                error = f"{type(exc).__name__}: {exc}"
                log.add(RunEventKind.FAILED, point.run_id, error)
                logger.warning("simulate %s failed: %s", point.run_id, error)
            refs = [store_trajectory(exp_dir, traj, label) for label, traj in ctx.trajectories.items()]
            runs.append(RunRecord(run_id=point.run_id, experiment_id=exp.id, seed=point.seed, sweep=dict(point.sweep),
                                  config=point.experiment.model_dump(mode="json"), drift=ctx.drift_record(),
                                  trajectories=refs, error=error))
        manifest = RunManifest(experiment_id=exp.id, code_version=code_version(), runs=runs, events=log.get_all())
        write_manifest(exp_dir, manifest)
        manifests.append(manifest)
    return RunManifest.merged(path.stem, manifests)
