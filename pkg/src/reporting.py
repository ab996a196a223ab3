"""Report renderer - Markdown summary plus static SVG figures from stored manifests."""

from __future__ import annotations
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import matplotlib
from matplotlib.figure import Figure
from pydantic import ValidationError

from src.models.experiment import TheoremId
from src.models.manifest import RunManifest, RunRecord
from src.models.reports import EstimateReport, ReportStatus
from src.systems.benton import BentonDemo, benton_demo
from src.systems.errors import ManifestError
from src.systems.grid import ScalarField, lp_norm
from src.systems.storage import MANIFEST_NAME, load_manifest, load_norms, load_trajectory
from src.systems.verify import P_LADDER
from src.tools.registry import SuiteRegistry

logger = logging.getLogger(__name__)

# fixed ids and no date stamp so identical manifests render identical SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "lab-report"
SVG_METADATA = {"Date": None}

STATUS_LABELS = {
    ReportStatus.PASSED: "pass",
    ReportStatus.ESTIMATE_FAILED: "FAIL",
    ReportStatus.HYPOTHESIS_FAILED: "hypothesis",
    ReportStatus.ERROR: "ERROR",
}
LADDER = tuple(float(p) for p in range(2, 33))


@dataclass
class ReportBundle:
    """What `report` wrote, and what it had to skip."""
    markdown: Path
    figures: list[Path] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)
    manifests: dict[str, RunManifest] = field(default_factory=dict)


def _save(fig: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    return path


def find_manifests(root: Path) -> tuple[dict[Path, RunManifest], list[str]]:
    """Load every experiment under root (or root itself); unreadable ones are listed, not fatal."""
    missing: list[str] = []
    if not root.exists():
        return {}, [f"{root}: directory does not exist"]
    candidates = [root] if (root / MANIFEST_NAME).exists() else sorted(p for p in root.iterdir() if p.is_dir())
    manifests: dict[Path, RunManifest] = {}
    for exp_dir in candidates:
        if not (exp_dir / MANIFEST_NAME).exists():
            missing.append(f"{exp_dir.name}: no {MANIFEST_NAME}")
            continue
        try:
            manifests[exp_dir] = load_manifest(exp_dir, verify=True)
        except (ManifestError, ValidationError, ValueError) as exc:
            missing.append(f"{exp_dir.name}: {exc}")
            logger.warning("skipping %s: %s", exp_dir, exc)
    return manifests, missing


# -- tables --------------------------------------------------------------------

def status_label(run: RunRecord, report: EstimateReport) -> str:
    """Hypothesis failures read differently from estimate failures; controls show both statuses."""
    label = STATUS_LABELS[run.effective_status(report)]
    if run.expect_status is not None:
        label += f" (control: {report.status.value})"
    return label


def pass_fail_matrix(manifest: RunManifest) -> list[str]:
    """Markdown table: one row per report."""
    lines = ["| run | check | status | lhs | rhs | slack |", "|---|---|---|---|---|---|"]
    for run in manifest.runs:
        if run.error is not None and not run.reports:
            lines.append(f"| {run.run_id} | - | ERROR | | | |")
        for r in run.reports:
            lines.append(f"| {run.run_id} | {r.theorem_id.value} | {status_label(run, r)} "
                         f"| {r.lhs:.6g} | {r.rhs:.6g} | {r.slack:.3g} |")
    return lines


def status_summary(manifests: dict[Path, RunManifest]) -> list[str]:
    """Markdown table: effective status counts per check."""
    counts: dict[str, dict[ReportStatus, int]] = defaultdict(lambda: defaultdict(int))
    for manifest in manifests.values():
        for run in manifest.runs:
            for report in run.reports:
                counts[report.theorem_id.value][run.effective_status(report)] += 1
    header = "| check | " + " | ".join(STATUS_LABELS.values()) + " |"
    lines = [header, "|---" * (len(STATUS_LABELS) + 1) + "|"]
    for theorem in sorted(counts):
        row = " | ".join(str(counts[theorem][s]) for s in STATUS_LABELS)
        lines.append(f"| {theorem} | {row} |")
    return lines


def rhs_spread(reports: list[EstimateReport]) -> float:
    """max - min of the bound; zero when it is bit-identical."""
    values = [r.rhs for r in reports]
    return float(max(values) - min(values)) if values else 0.0


# -- figures -------------------------------------------------------------------

def _sweep_series(manifest: RunManifest, axis: str) -> dict[str, list[tuple[float, EstimateReport]]]:
    series: dict[str, list[tuple[float, EstimateReport]]] = defaultdict(list)
    for report in manifest.reports():
        if axis in report.sweep and report.status != ReportStatus.ERROR:
            series[report.theorem_id.value].append((float(report.sweep[axis]), report))
    return series


def slack_vs_margin(manifest: RunManifest, path: Path) -> Optional[Path]:
    series = _sweep_series(manifest, "margin")
    if not series:
        return None
    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    for theorem, points in sorted(series.items()):
        by_margin: dict[float, list[float]] = defaultdict(list)
        for margin, report in points:
            by_margin[margin].append(report.slack / max(abs(report.rhs), 1e-300))
        margins = sorted(by_margin)
        ax.plot(margins, [min(by_margin[m]) for m in margins], marker="o", label=theorem)
    ax.set_xlabel("margin to the critical line")
    ax.set_ylabel("worst relative slack")
    ax.set_title(manifest.experiment_id)
    ax.legend(fontsize="small")
    return _save(fig, path)


def epsilon_overlay(manifest: RunManifest, path: Path, registry: Optional[SuiteRegistry] = None) -> Optional[Path]:
    """Measured side against the bound over the viscosity sweep."""
    registry = registry or SuiteRegistry()
    series = {k: v for k, v in _sweep_series(manifest, "epsilon").items()
              if registry.get(TheoremId(k)).viscosity_independent}
    if not series:
        return None
    fig = Figure(figsize=(5 * len(series), 4))
    axes = fig.subplots(1, len(series), squeeze=False)
    for ax, (theorem, points) in zip(axes[0], sorted(series.items())):
        points.sort(key=lambda item: item[0])
        eps = [e for e, _ in points]
        ax.plot(eps, [r.lhs for _, r in points], "o", label="measured")
        ax.plot(eps, [r.rhs for _, r in points], "s--", label="bound")
        ax.set_xscale("symlog", linthresh=1e-3)
        ax.set_xlabel("epsilon")
        ax.set_title(f"{theorem}\nbound spread {rhs_spread([r for _, r in points]):.2g}", fontsize="small")
        ax.legend(fontsize="small")
    return _save(fig, path)


def p_ladder(exp_dir: Path, manifest: RunManifest, path: Path) -> tuple[Optional[Path], list[str]]:
    """||u1 - u2||_p at the final time for p = 2..32 against the sup norm."""
    problems: list[str] = []
    curves = []
    for run in manifest.runs:
        if not any(r.theorem_id == TheoremId.THM_ONE_SIDED_LINF for r in run.reports):
            continue
        refs = {ref.label: ref for ref in run.trajectories}
        if "u1" not in refs or "u2" not in refs:
            continue
        try:
            u1, u2 = load_trajectory(exp_dir, refs["u1"]), load_trajectory(exp_dir, refs["u2"])
        except ManifestError as exc:
            problems.append(f"{run.run_id}: {exc}")
            continue
        w = u1.values[-1] - u2.values[-1]
        diff = ScalarField(u1.grid, w)
        curves.append((run.run_id, [lp_norm(diff, p) for p in LADDER], lp_norm(diff, "inf")))
    if not curves:
        return None, problems
    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    for run_id, norms, sup in curves:
        line, = ax.plot(LADDER, norms, label=run_id)
        ax.axhline(sup, color=line.get_color(), linestyle=":")
    for p in P_LADDER:
        ax.axvline(p, color="0.85", linewidth=0.5)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("p")
    ax.set_ylabel("||u1 - u2||_p at T (dotted: sup norm)")
    ax.legend(fontsize="x-small")
    return _save(fig, path), problems


def norm_history(exp_dir: Path, manifest: RunManifest, path: Path) -> tuple[Optional[Path], list[str]]:
    """L2 and sup norm of every stored density over time, read from the norm series files."""
    problems: list[str] = []
    series = []
    for run in manifest.runs:
        for ref in run.trajectories:
            if ref.label != "rho":
                continue
            try:
                series.append((run.run_id, load_norms(exp_dir, ref)))
            except (ManifestError, OSError, ValueError) as exc:
                problems.append(f"{run.run_id}: {exc}")
    if not series:
        return None, problems
    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    for run_id, norms in series:
        line, = ax.plot(norms[:, 0], norms[:, 2], label=run_id)
        ax.plot(norms[:, 0], norms[:, 3], color=line.get_color(), linestyle=":")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("||rho(t)||_2 (dotted: sup norm)")
    ax.set_title(manifest.experiment_id)
    if len(series) <= 12:
        ax.legend(fontsize="x-small")
    return _save(fig, path), problems


def benton_figure(demo: BentonDemo, path: Path) -> Path:
    """Profiles at t = 0.5 and the kink Laplacian against h."""
    fig = Figure(figsize=(10, 4))
    left, right = fig.subplots(1, 2)
    for name, values in demo.profiles.items():
        left.plot(demo.x, values, label=name)
    left.set_xlabel("x")
    left.set_title(f"solutions at t = 0.5 (separation {demo.separation:.3f})")
    left.legend()
    right.loglog(demo.h, demo.kink_laplacians, "o-")
    right.set_xlabel("h")
    right.set_ylabel("max discrete Laplacian of u3")
    right.set_title(f"log-log slope {demo.slope:.3f}")
    return _save(fig, path)


# -- bundle --------------------------------------------------------------------

def report(manifest_dir: Union[str, Path], out: Optional[Path] = None) -> ReportBundle:
    """Render report.md and figures/ for every experiment under manifest_dir."""
    root = Path(manifest_dir)
    out = out or root
    manifests, missing = find_manifests(root)
    bundle = ReportBundle(markdown=out / "report.md", missing=missing)
    registry = SuiteRegistry()
    lines = ["# Verification report", ""]
    if manifests:
        lines += ["## Status by check", ""] + status_summary(manifests) + [""]

    needs_benton = False
    for exp_dir, manifest in manifests.items():
        bundle.manifests[manifest.experiment_id] = manifest
        fig_dir = out / "figures"
        lines += [f"## {manifest.experiment_id}", "", f"code version `{manifest.code_version}`, "
                  f"{manifest.summary()}", ""] + pass_fail_matrix(manifest) + [""]
        figures = [
            slack_vs_margin(manifest, fig_dir / f"{manifest.experiment_id}_slack_margin.svg"),
            epsilon_overlay(manifest, fig_dir / f"{manifest.experiment_id}_epsilon.svg", registry),
        ]
        ladder, problems = p_ladder(exp_dir, manifest, fig_dir / f"{manifest.experiment_id}_p_ladder.svg")
        figures.append(ladder)
        bundle.missing += problems
        history, problems = norm_history(exp_dir, manifest, fig_dir / f"{manifest.experiment_id}_norms.svg")
        figures.append(history)
        bundle.missing += problems
        for figure in figures:
            if figure is not None:
                bundle.figures.append(figure)
                lines += [f"![{figure.stem}](figures/{figure.name})", ""]
        needs_benton |= any(r.theorem_id == TheoremId.BENTON_DEMO for r in manifest.reports())

    if needs_benton:
        figure = benton_figure(benton_demo(), out / "figures" / "benton.svg")
        bundle.figures.append(figure)
        lines += ["## Inviscid non-uniqueness", "", f"![benton](figures/{figure.name})", ""]

    if bundle.missing:
        lines += ["## Missing or unreadable", ""] + [f"- {item}" for item in bundle.missing] + [""]
    out.mkdir(parents=True, exist_ok=True)
    bundle.markdown.write_text("\n".join(lines))
    logger.info("report written to %s (%d figure(s), %d missing)", bundle.markdown, len(bundle.figures),
                len(bundle.missing))
    return bundle
