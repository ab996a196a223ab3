"""Shared fixtures: small grids, isolated settings and experiment files on disk."""

from __future__ import annotations
from pathlib import Path
from typing import Callable

import pytest
import yaml

from src.models.experiment import Experiment
from src.settings import LabSettings
from src.systems.grid import Grid


@pytest.fixture
def grid1() -> Grid:
    return Grid(1, 32)


@pytest.fixture
def grid2() -> Grid:
    return Grid(2, 16)


@pytest.fixture
def settings(tmp_path: Path) -> LabSettings:
    return LabSettings(seed=0, threads=1, out_dir=tmp_path / "out", log_level="WARNING")


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[list[dict]], Path]:
    """Write an experiments file and return its path."""
    def write(experiments: list[dict], name: str = "lab.yaml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump({"experiments": experiments}, sort_keys=False))
        return path

    return write


@pytest.fixture
def heat_experiment() -> Experiment:
    """Cheapest experiment with a real solve: heat-kernel validation on 32 points."""
    return Experiment.model_validate({
        "id": "heat",
        "suite": ["val_heat_kernel"],
        "grid": {"dim": 1, "n_points": 32},
        "solver": {"epsilon": 1.0, "dt": 1.0e-4, "t_end": 0.02, "scheme": "imex2"},
        "drift": {"kind": "zero"},
        "data": {"kind": "random", "amplitude": 0.5},
    })
