"""Manifest schemas - what a finished experiment leaves on disk."""

from __future__ import annotations
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.models.reports import SCHEMA_VERSION, EstimateReport, ReportStatus


class RunEventKind(str, Enum):
    """Stages of one orchestrated run."""
    STARTED = "started"
    SOLVED = "solved"
    CHECK = "check"
    FAILED = "failed"


class RunEvent(BaseModel):
    """One entry of a run's audit trail. Ordered by sequence number, never by wall clock."""
    seq: int = 0
    kind: RunEventKind
    run_id: str
    message: str = ""
    data: dict[str, Any] = Field(default_factory=dict)


class TrajectoryRef(BaseModel):
    """A stored trajectory and the norm series derived from it."""
    label: str
    path: str  # relative to the experiment directory
    sha256: str
    dim: int
    n_points: int
    samples: int
    csv_path: Optional[str] = None
    norms_path: Optional[str] = None


class RunRecord(BaseModel):
    """One (seed, sweep point) of an experiment."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    run_id: str
    experiment_id: str
    seed: int
    sweep: dict[str, Any] = Field(default_factory=dict)
    config: dict[str, Any] = Field(default_factory=dict)
    drift: Optional[dict[str, Any]] = None
    trajectories: list[TrajectoryRef] = Field(default_factory=list)
    reports: list[EstimateReport] = Field(default_factory=list)
    expect_status: Optional[ReportStatus] = None
    error: Optional[str] = None

    def effective_status(self, report: EstimateReport) -> ReportStatus:
        """A negative control passes when it produces the status it expects."""
        if self.expect_status is None or report.status == ReportStatus.ERROR:
            return report.status
        if report.status == self.expect_status:
            return ReportStatus.PASSED
        return ReportStatus.ESTIMATE_FAILED


class RunManifest(BaseModel):
    """Deterministic record of one experiment (or the merge of several)."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    schema_version: str = SCHEMA_VERSION
    experiment_id: str
    code_version: str = ""
    runs: list[RunRecord] = Field(default_factory=list)
    events: list[RunEvent] = Field(default_factory=list)

    @classmethod
    def merged(cls, experiment_id: str, manifests: list["RunManifest"]) -> "RunManifest":
        version = manifests[0].code_version if manifests else ""
        return cls(
            experiment_id=experiment_id, code_version=version,
            runs=[run for m in manifests for run in m.runs],
            events=[event for m in manifests for event in m.events],
        )

    def reports(self) -> list[EstimateReport]:
        return [report for run in self.runs for report in run.reports]

    def status_counts(self) -> dict[str, int]:
        """Effective statuses, with negative controls folded in."""
        counts = {status.value: 0 for status in ReportStatus}
        for run in self.runs:
            if run.error is not None and not run.reports:
                counts[ReportStatus.ERROR.value] += 1
            for report in run.reports:
                counts[run.effective_status(report).value] += 1
        return counts

    def exit_code(self) -> int:
        """0 all passed, 1 any error, else 2 for estimate failures, else 3 for hypothesis failures."""
        counts = self.status_counts()
        if counts[ReportStatus.ERROR.value]:
            return 1
        if counts[ReportStatus.ESTIMATE_FAILED.value]:
            return 2
        if counts[ReportStatus.HYPOTHESIS_FAILED.value]:
            return 3
        return 0

    def summary(self) -> str:
        """One-line summary."""
        counts = ", ".join(f"{k}={v}" for k, v in self.status_counts().items() if v)
        return f"{self.experiment_id}: {len(self.runs)} run(s), {counts or 'no reports'}"
