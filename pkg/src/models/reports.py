"""Report schemas - the outcome of one inequality check."""

from __future__ import annotations
import math
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.models.experiment import TheoremId

SCHEMA_VERSION = "1.0"
REPORT_TOLERANCE = 1e-6

CSV_COLUMNS = ["run_id", "theorem_id", "status", "lhs", "rhs", "slack", "tol", "epsilon"]


class ReportStatus(str, Enum):
    """How a check ended."""
    PASSED = "passed"
    ESTIMATE_FAILED = "estimate_failed"
    HYPOTHESIS_FAILED = "hypothesis_failed"
    ERROR = "error"


def report_tolerance(lhs: float, rhs: float) -> float:
    return REPORT_TOLERANCE * max(abs(lhs), abs(rhs), 1.0)


class EstimateReport(BaseModel):
    """Measured side, bound, slack and the constants that built the bound."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    schema_version: str = SCHEMA_VERSION
    theorem_id: TheoremId
    run_id: str = ""
    status: ReportStatus
    lhs: float = 0.0
    rhs: float = 0.0
    slack: float = 0.0
    tol: float = 0.0
    epsilon: Optional[float] = None
    constants_used: dict[str, float] = Field(default_factory=dict)
    variants: dict[str, float] = Field(default_factory=dict)  # recorded, never asserted
    notes: list[str] = Field(default_factory=list)
    sweep: dict[str, Any] = Field(default_factory=dict)
    run_manifest_ref: Optional[str] = None

    @classmethod
    def assess(cls, theorem_id: TheoremId, lhs: float, rhs: float, **fields: Any) -> "EstimateReport":
        """Compare lhs <= rhs within the relative report tolerance."""
        lhs, rhs = float(lhs), float(rhs)
        tol = report_tolerance(lhs, rhs) if math.isfinite(lhs) and math.isfinite(rhs) else 0.0
        slack = rhs - lhs
        ok = math.isfinite(lhs) and not math.isnan(rhs) and slack >= -tol
        status = ReportStatus.PASSED if ok else ReportStatus.ESTIMATE_FAILED
        return cls(theorem_id=theorem_id, status=status, lhs=lhs, rhs=rhs, slack=slack, tol=tol, **fields)

    @classmethod
    def hypothesis_failed(cls, theorem_id: TheoremId, message: str, **fields: Any) -> "EstimateReport":
        notes = list(fields.pop("notes", [])) + [message]
        return cls(theorem_id=theorem_id, status=ReportStatus.HYPOTHESIS_FAILED, notes=notes, **fields)

    @classmethod
    def error(cls, theorem_id: TheoremId, message: str, **fields: Any) -> "EstimateReport":
        notes = list(fields.pop("notes", [])) + [message]
        return cls(theorem_id=theorem_id, status=ReportStatus.ERROR, notes=notes, **fields)

    @property
    def passed(self) -> bool:
        return self.status == ReportStatus.PASSED

    def require(self, condition: bool, note: str) -> "EstimateReport":
        """Record a side assertion; a failed one turns a pass into an estimate failure."""
        if not condition:
            self.notes.append(f"failed: {note}")
            if self.status == ReportStatus.PASSED:
                self.status = ReportStatus.ESTIMATE_FAILED
        return self

    def csv_row(self) -> list[str]:
        """One row matching CSV_COLUMNS."""
        eps = "" if self.epsilon is None else repr(self.epsilon)
        return [self.run_id, self.theorem_id.value, self.status.value, repr(self.lhs), repr(self.rhs),
                repr(self.slack), repr(self.tol), eps]

    def summary(self) -> str:
        """One-line summary."""
        return f"[{self.status.value}] {self.theorem_id.value} {self.run_id}: {self.lhs:.6g} <= {self.rhs:.6g} (slack {self.slack:.3g})"
