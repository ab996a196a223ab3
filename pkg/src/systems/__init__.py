"""Core lab systems: grids, fields, solvers, checks, storage and event logging."""

from .errors import LabError
from .grid import Grid, ScalarField, Trajectory
from .event_log import RunLog

__all__ = ["LabError", "Grid", "ScalarField", "Trajectory", "RunLog"]
