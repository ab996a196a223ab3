"""Exception hierarchy for the lab."""

from __future__ import annotations
from typing import Optional

from pydantic import BaseModel


class ConfigIssue(BaseModel):
    """A single problem found while validating an experiment file."""
    path: str  # dotted field path, e.g. "experiments.0.drift.q"
    code: str  # machine-readable error code
    message: str
    line: Optional[int] = None  # 1-based line in the YAML source
    suggestion: Optional[str] = None
    severity: str = "error"  # "error" or "warning"

    def render(self) -> str:
        """One-line human readable form."""
        where = f"line {self.line}: " if self.line is not None else ""
        text = f"{where}{self.path}: [{self.code}] {self.message}"
        if self.suggestion:
            text += f" ({self.suggestion})"
        return text


class LabError(Exception):
    """Base class for every error raised by the lab."""


class ConfigError(LabError, ValueError):
    """The experiment configuration is malformed or semantically invalid."""

    def __init__(self, issues: list[ConfigIssue]):
        self.issues = issues
        lines = [issue.render() for issue in issues if issue.severity == "error"]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class InadmissibleExponentError(LabError, ValueError):
    """Exponents fall outside the admissible ranges."""


class GridError(LabError, ValueError):
    """Invalid grid construction or norm arguments."""


class SolverError(LabError):
    """A time-stepper could not complete."""


class CFLViolationError(SolverError):
    """A step exceeded the advective CFL bound."""

    def __init__(self, step: int, dt: float, bound: float):
        self.step = step
        self.dt = dt
        self.bound = bound
        super().__init__(f"CFL violated at step {step}: dt={dt:.3e} > bound={bound:.3e}")


class SolverDivergedError(SolverError):
    """A non-finite value appeared in the solution."""

    def __init__(self, step: int, time: float):
        self.step = step
        self.time = time
        super().__init__(f"non-finite value at step {step} (t={time:.6g})")


class TimeRangeError(LabError, ValueError):
    """Requested time lies outside a trajectory's range."""


class HypothesisError(LabError):
    """A check's hypothesis does not hold for the supplied run."""


class ManifestError(LabError):
    """A manifest references missing or corrupted artifacts."""
