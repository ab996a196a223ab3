"""Main entry point - command line front end of the verification lab."""

from __future__ import annotations
import argparse
import csv
import sys
from pathlib import Path
from typing import Optional, Sequence

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src.lab import run_experiments, simulate_config
from src.models.experiment import TheoremId
from src.models.manifest import RunManifest
from src.models.reports import ReportStatus
from src.reporting import benton_figure, report
from src.settings import LabSettings, configure_logging
from src.systems.benton import benton_demo
from src.systems.errors import ConfigError, LabError
from src.systems.exponents import ADMISSIBILITY_COLUMNS, admissibility_table
from src.systems.validation import load_experiments

console = Console()

STATUS_STYLES = {
    ReportStatus.PASSED: "green",
    ReportStatus.ESTIMATE_FAILED: "red",
    ReportStatus.HYPOTHESIS_FAILED: "yellow",
    ReportStatus.ERROR: "bold red",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Numerical verification of stability and "
                                     "continuous-dependence estimates on the torus.")
    parser.add_argument("--seed", type=int, default=None, help="offset added to every experiment seed (LAB_SEED)")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (LAB_THREADS)")
    parser.add_argument("--out-dir", default=None, help="output directory (LAB_OUT_DIR)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (LAB_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    exponents = sub.add_parser("exponents", help="admissibility table for (q, r)")
    exponents.add_argument("--dim", type=int, default=2)
    exponents.add_argument("--q", nargs="+", default=["1", "3/2", "2", "4", "inf"])
    exponents.add_argument("--r", nargs="+", default=["1", "2", "4", "inf"])
    exponents.add_argument("--table", action="store_true", help="render a rich table instead of CSV")

    for name, text in [("simulate", "solve and store trajectories only"),
                       ("verify", "run every check of an experiment file"),
                       ("sweep", "run the experiments that declare sweep axes, then render the report")]:
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("config", type=Path)
        if name != "simulate":
            cmd.add_argument("--check", action="append", default=None, metavar="THEOREM_ID",
                             help="restrict to these checks (repeatable)")

    rep = sub.add_parser("report", help="render Markdown and SVG from stored manifests")
    rep.add_argument("directory", type=Path)

    sub.add_parser("benton", help="inviscid non-uniqueness example")
    return parser


def _reports_table(manifest: RunManifest) -> Table:
    table = Table(title=manifest.summary())
    for column in ("run", "check", "status", "lhs", "rhs", "slack"):
        table.add_column(column)
    for run in manifest.runs:
        if run.error is not None and not run.reports:
            table.add_row(run.run_id, "-", "[bold red]error[/bold red]", "", "", "")
        for r in run.reports:
            status = run.effective_status(r)
            label = status.value if run.expect_status is None else f"{status.value} ({r.status.value})"
            style = STATUS_STYLES[status]
            table.add_row(run.run_id, r.theorem_id.value, f"[{style}]{label}[/{style}]",
                          f"{r.lhs:.6g}", f"{r.rhs:.6g}", f"{r.slack:.3g}")
    return table


def _selected(checks: Optional[list[str]]) -> Optional[list[TheoremId]]:
    if not checks:
        return None
    try:
        return [TheoremId(c) for c in checks]
    except ValueError as e:
        raise LabError(f"unknown check: {e}") from e


def cmd_exponents(args: argparse.Namespace, settings: LabSettings) -> int:
    rows = admissibility_table(args.dim, args.q, args.r)
    if not args.table:
        writer = csv.DictWriter(sys.stdout, fieldnames=ADMISSIBILITY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return 0
    table = Table(title=f"admissibility for n = {args.dim}")
    for column in ADMISSIBILITY_COLUMNS:
        table.add_column(column)
    for row in rows:
        table.add_row(*(row[c] for c in ADMISSIBILITY_COLUMNS))
    console.print(table)
    return 0


def cmd_simulate(args: argparse.Namespace, settings: LabSettings) -> int:
    manifest = simulate_config(args.config, settings)
    table = Table(title=manifest.summary())
    for column in ("run", "trajectories", "error"):
        table.add_column(column)
    for run in manifest.runs:
        table.add_row(run.run_id, ", ".join(ref.label for ref in run.trajectories), run.error or "")
    console.print(table)
    return 1 if any(run.error for run in manifest.runs) else 0


def _run(args: argparse.Namespace, settings: LabSettings, sweep_only: bool) -> RunManifest:
    data = load_experiments(args.config)
    if sweep_only:
        data = data.model_copy(update={"experiments": [e for e in data.experiments if e.sweep.axes()]})
    console.print(Panel(f"{len(data.experiments)} experiment(s) from {args.config}", border_style="blue"))
    manifest = run_experiments(data, settings, args.config.stem, _selected(args.check))
    console.print(_reports_table(manifest))
    return manifest


def cmd_verify(args: argparse.Namespace, settings: LabSettings) -> int:
    return _run(args, settings, sweep_only=False).exit_code()


def cmd_sweep(args: argparse.Namespace, settings: LabSettings) -> int:
    manifest = _run(args, settings, sweep_only=True)
    bundle = report(settings.out_dir)
    console.print(f"report: {bundle.markdown}")
    return manifest.exit_code()


def cmd_report(args: argparse.Namespace, settings: LabSettings) -> int:
    bundle = report(args.directory)
    for item in bundle.missing:
        console.print(f"[yellow]missing[/yellow] {item}")
    console.print(f"{bundle.markdown} with {len(bundle.figures)} figure(s)")
    return 0 if bundle.manifests else 1


def cmd_benton(args: argparse.Namespace, settings: LabSettings) -> int:
    demo = benton_demo()
    out = settings.out_dir / "benton"
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(demo.report.model_dump_json(indent=2) + "\n")
    figure = benton_figure(demo, out / "benton.svg")
    console.print(Panel(
        f"separation at t = 0.5: {demo.separation:.4f}\n"
        f"kink Laplacian slope: {demo.slope:.4f}\n"
        f"status: {demo.report.status.value}\n"
        f"figure: {figure}",
        title="Inviscid non-uniqueness",
        border_style="green" if demo.report.passed else "red",
    ))
    return 0 if demo.report.passed else 2


COMMANDS = {
    "exponents": cmd_exponents,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "report": cmd_report,
    "benton": cmd_benton,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    settings = LabSettings.from_env(args.seed, args.threads, args.out_dir, args.log_level)
    configure_logging(settings.log_level)
    try:
        return COMMANDS[args.command](args, settings)
    except ConfigError as e:
        console.print("[red]invalid configuration[/red]")
        for issue in e.issues:
            console.print(f"  {issue.render()}")
        return 1
    except LabError as e:
        console.print(f"[red]Error: {e}[/red]")
        return 1


if __name__ == "__main__":
    sys.exit(main())
