"""Seeded initial/terminal data, perturbations and sources built from a DataSpec."""

from __future__ import annotations
from typing import Optional

import numpy as np

from src.models.experiment import DataKind, DataSpec
from src.systems.fields import Coords, TrigPolynomial, half_plane_modes
from src.systems.grid import Grid
from src.systems.solvers import SourceFn

# seed offsets so that data, perturbations and sources of one run are independent
PERTURBATION_SEED = 1000
SOURCE_SEED = 2000
SOURCE_DIFFERENCE_SEED = 3000


def random_trig(dim: int, seed: int, max_mode: int = 3, amplitude: float = 1.0) -> TrigPolynomial:
    """Zero-mean trigonometric polynomial with sup norm at most `amplitude`."""
    rng = np.random.default_rng(seed)
    modes = half_plane_modes(dim, max_mode)
    k2 = np.sum(modes.astype(float) ** 2, axis=1)
    a = rng.standard_normal(len(modes)) / (1.0 + k2)
    b = rng.standard_normal(len(modes)) / (1.0 + k2)
    total = float(np.sum(np.abs(a) + np.abs(b)))
    return TrigPolynomial(modes, a * amplitude / total, b * amplitude / total)


def periodic_gaussian(grid: Grid, width: float, center: float = 0.5) -> np.ndarray:
    """Sum of the Gaussian over the nearest images, peak value 1 at the center."""
    out = np.ones(grid.shape)
    for x in grid.coordinates:
        axis = np.zeros_like(x)
        for image in (-1.0, 0.0, 1.0):
            axis += np.exp(-0.5 * ((x - center + image) / width) ** 2)
        out *= axis
    return out / float(np.max(out))


def initial_density(grid: Grid, spec: DataSpec, seed: int) -> np.ndarray:
    """Fokker-Planck datum; unit mass except for the valley control."""
    if spec.kind == DataKind.BUMP:
        g = periodic_gaussian(grid, spec.width)
        return g / grid.integrate(g)
    if spec.kind == DataKind.COSINE:
        return 1.0 + spec.amplitude * np.cos(2.0 * np.pi * grid.coordinates[0])
    if spec.kind == DataKind.VALLEY:
        return 1.0 - spec.amplitude * periodic_gaussian(grid, spec.width)
    return 1.0 + random_trig(grid.dim, seed, spec.max_mode, spec.amplitude).value(grid.coordinates)


def terminal_datum(grid: Grid, spec: DataSpec, seed: int) -> np.ndarray:
    """Terminal datum for backward problems and the first HJ solution."""
    if spec.kind == DataKind.BUMP:
        return spec.amplitude * periodic_gaussian(grid, spec.width)
    if spec.kind == DataKind.COSINE:
        return spec.amplitude * np.cos(2.0 * np.pi * grid.coordinates[0])
    if spec.kind == DataKind.VALLEY:
        return -spec.amplitude * periodic_gaussian(grid, spec.width)
    return random_trig(grid.dim, seed, spec.max_mode, spec.amplitude).value(grid.coordinates)


def perturbation(grid: Grid, spec: DataSpec, seed: int, scale: float = 1.0) -> np.ndarray:
    """Zero-mean difference of sup size at most spec.difference * scale."""
    poly = random_trig(grid.dim, seed + PERTURBATION_SEED, spec.max_mode, spec.difference * scale)
    return poly.value(grid.coordinates)


def dual_density(grid: Grid) -> np.ndarray:
    """Positive unit-mass density pushed forward by the adjoint equation."""
    return 1.0 + 0.5 * np.cos(2.0 * np.pi * grid.coordinates[0])


def _source(poly: TrigPolynomial, base: Optional[SourceFn] = None) -> SourceFn:
    def source(coords: Coords, t: float) -> np.ndarray:
        value = poly.value(coords) * (1.0 + 0.5 * np.sin(2.0 * np.pi * t))
        return value if base is None else base(coords, t) + value

    return source


def sources(dim: int, spec: DataSpec, seed: int) -> tuple[Optional[SourceFn], Optional[SourceFn]]:
    """(f1, f2) with ||f1||_inf <= 1.5 source and ||f1 - f2||_inf <= 1.5 source_difference."""
    f1 = _source(random_trig(dim, seed + SOURCE_SEED, spec.max_mode, spec.source)) if spec.source else None
    if not spec.source_difference:
        return f1, f1
    diff = random_trig(dim, seed + SOURCE_DIFFERENCE_SEED, spec.max_mode, spec.source_difference)
    if f1 is None:
        return None, _source(diff)
    return f1, _source(diff, f1)
