"""Pydantic data models for experiments, reports and run manifests."""

from .experiment import (
    DataSpec,
    DriftConfig,
    DriftKind,
    Experiment,
    ExperimentFile,
    GridSpec,
    HamiltonianSpec,
    PDEKind,
    Scheme,
    SolverConfig,
    TheoremId,
)
from .reports import EstimateReport, ReportStatus
from .manifest import RunEvent, RunEventKind, RunManifest, RunRecord, TrajectoryRef

__all__ = [
    "DataSpec",
    "DriftConfig",
    "DriftKind",
    "Experiment",
    "ExperimentFile",
    "GridSpec",
    "HamiltonianSpec",
    "PDEKind",
    "Scheme",
    "SolverConfig",
    "TheoremId",
    "EstimateReport",
    "ReportStatus",
    "RunEvent",
    "RunEventKind",
    "RunManifest",
    "RunRecord",
    "TrajectoryRef",
]
