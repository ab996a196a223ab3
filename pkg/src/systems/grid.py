"""Periodic spectral discretization of the unit torus, fields, trajectories and norms."""

from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy.integrate import trapezoid

from src.systems.errors import GridError, TimeRangeError
from src.systems.exponents import ExponentLike, format_exponent, gn_from_q, to_float

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    """Uniform N^dim grid on the torus R^dim / Z^dim."""
    dim: int
    n_points: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        n = self.n_points
        if n < 4 or n & (n - 1):
            raise GridError(f"points per axis must be a power of two >= 4, got {n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_points

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_points,) * self.dim

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.n_points,) * (self.dim - 1) + (self.n_points // 2 + 1,)

    @property
    def dealias_cutoff(self) -> int:
        return self.n_points // 3

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        axis = np.arange(self.n_points) / self.n_points
        return tuple(np.meshgrid(*([axis] * self.dim), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer frequencies per axis, broadcast to the rfft layout."""
        n = self.n_points
        axes = [sfft.fftfreq(n, d=1.0 / n)] * (self.dim - 1) + [sfft.rfftfreq(n, d=1.0 / n)]
        return tuple(np.rint(k).astype(np.int64) for k in np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def _diff_symbols(self) -> tuple[np.ndarray, ...]:
        # Nyquist dropped so that laplacian == divergence(gradient) exactly
        half = self.n_points // 2
        symbols = []
        for k in self.wavenumbers:
            k_eff = np.where(np.abs(k) == half, 0, k)
            symbols.append(2j * np.pi * k_eff)
        return tuple(symbols)

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        return sum((s * s).real for s in self._diff_symbols)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cutoff = self.dealias_cutoff
        mask = np.ones(self.spectral_shape, dtype=bool)
        for k in self.wavenumbers:
            mask &= np.abs(k) <= cutoff
        return mask

    @cached_property
    def _rfft_weights(self) -> np.ndarray:
        # multiplicity of each stored rfft coefficient in the full spectrum
        k_last = self.wavenumbers[-1]
        weights = np.full(self.spectral_shape, 2.0)
        weights[k_last == 0] = 1.0
        weights[k_last == self.n_points // 2] = 1.0
        return weights

    # -- transforms -------------------------------------------------------

    def forward(self, values: np.ndarray) -> np.ndarray:
        axes = tuple(range(-self.dim, 0))
        return sfft.rfftn(values, axes=axes)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        axes = tuple(range(-self.dim, 0))
        return sfft.irfftn(coeffs, s=self.shape, axes=axes)

    def project(self, values: np.ndarray) -> np.ndarray:
        """2/3-rule projection onto |k_i| <= N/3."""
        return self.inverse(self.forward(values) * self.dealias_mask)

    # -- differential operators on raw arrays --------------------------------

    def derivative(self, values: np.ndarray, axis: int) -> np.ndarray:
        return self.inverse(self.forward(values) * self._diff_symbols[axis])

    def gradient_array(self, values: np.ndarray) -> np.ndarray:
        coeffs = self.forward(values)
        return np.stack([self.inverse(coeffs * s) for s in self._diff_symbols])

    def divergence_array(self, vector: np.ndarray) -> np.ndarray:
        total = np.zeros(self.spectral_shape, dtype=complex)
        for axis, symbol in enumerate(self._diff_symbols):
            total += self.forward(vector[axis]) * symbol
        return self.inverse(total)

    def laplacian_array(self, values: np.ndarray) -> np.ndarray:
        return self.inverse(self.forward(values) * self.laplacian_symbol)

    def hessian_array(self, values: np.ndarray) -> np.ndarray:
        coeffs = self.forward(values)
        out = np.empty((self.dim, self.dim) + self.shape)
        for i, si in enumerate(self._diff_symbols):
            for j in range(i, self.dim):
                out[i, j] = self.inverse(coeffs * si * self._diff_symbols[j])
                out[j, i] = out[i, j]
        return out

    def resolvent(self, values: np.ndarray, coefficient: float) -> np.ndarray:
        """Apply (I - coefficient * Laplacian)^{-1}."""
        if coefficient == 0.0:
            return np.array(values, dtype=float, copy=True)
        return self.inverse(self.forward(values) / (1.0 - coefficient * self.laplacian_symbol))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.cell_volume)

    def dirichlet_energy(self, values: np.ndarray) -> float:
        """||Df||_2^2 computed in frequency space."""
        coeffs = self.forward(values) / self.n_points ** self.dim
        return float(np.sum(self._rfft_weights * (-self.laplacian_symbol) * np.abs(coeffs) ** 2))

    def spectral_energy(self, values: np.ndarray) -> float:
        """||f||_2^2 computed in frequency space (Parseval)."""
        coeffs = self.forward(values) / self.n_points ** self.dim
        return float(np.sum(self._rfft_weights * np.abs(coeffs) ** 2))

    def upsample(self, values: np.ndarray, factor: int) -> np.ndarray:
        """Trigonometric interpolant sampled on a grid `factor` times finer."""
        if factor == 1:
            return np.array(values, copy=True)
        fine = Grid(self.dim, self.n_points * factor)
        coeffs = self.forward(values)
        padded = np.zeros(fine.spectral_shape, dtype=complex)
        half = self.n_points // 2
        if self.dim == 1:
            padded[: half + 1] = coeffs
        else:
            padded[:half, : half + 1] = coeffs[:half]
            padded[-half:, : half + 1] = coeffs[half:]
        return fine.inverse(padded) * factor ** self.dim


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real field sampled on the grid nodes; values are read-only."""
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.shape != self.grid.shape:
            raise GridError(f"field shape {arr.shape} does not match grid {self.grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - other.values)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots of one field at strictly increasing physical times."""
    grid: Grid
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float, copy=True).reshape(-1)
        values = np.array(self.values, dtype=float, copy=True)
        if times.size == 0:
            raise GridError("trajectory needs at least one snapshot")
        if values.shape != (times.size,) + self.grid.shape:
            raise GridError(f"values shape {values.shape} does not match {times.size} snapshots on {self.grid.shape}")
        if times[0] < 0:
            raise GridError(f"trajectory starts before t=0 ({times[0]})")
        if np.any(np.diff(times) <= 0):
            raise GridError("trajectory times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_fields(cls, times: Sequence[float], fields: Iterable[ScalarField], label: str = "") -> "Trajectory":
        fields = list(fields)
        if not fields:
            raise GridError("trajectory needs at least one snapshot")
        return cls(fields[0].grid, np.asarray(times), np.stack([f.values for f in fields]), label)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def field(self, index: int) -> ScalarField:
        return ScalarField(self.grid, self.values[index])

    def index_of(self, t: float, atol: float = 1e-12) -> int:
        """Index of the snapshot recorded at time t."""
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > atol * max(1.0, abs(t)):
            raise TimeRangeError(f"no snapshot at t={t}")
        return idx

    def interpolate(self, t: float) -> np.ndarray:
        """Linear interpolation in time between neighbouring snapshots."""
        tol = 1e-12 * max(1.0, abs(t))
        if t < self.times[0] - tol or t > self.times[-1] + tol:
            raise TimeRangeError(f"t={t} outside [{self.t_start}, {self.t_end}]")
        if len(self) == 1:
            return np.array(self.values[0])
        j = int(np.clip(np.searchsorted(self.times, t), 1, len(self) - 1))
        t0, t1 = self.times[j - 1], self.times[j]
        lam = float(np.clip((t - t0) / (t1 - t0), 0.0, 1.0))
        return (1.0 - lam) * self.values[j - 1] + lam * self.values[j]

    def norm_series(self, p: ExponentLike) -> np.ndarray:
        return np.array([_lp(self.grid, v, to_float(p)) for v in self.values])


# -- norms -----------------------------------------------------------------

def _lp(grid: Grid, values: np.ndarray, p: float) -> float:
    if math.isnan(p) or p < 1:
        raise GridError(f"p must be >= 1, got {p}")
    mags = np.abs(values)
    peak = float(mags.max()) if mags.size else 0.0
    if math.isinf(p):
        return peak
    if peak == 0.0:
        return 0.0
    # scale by the peak so large p cannot overflow
    return peak * float(np.sum((mags / peak) ** p) * grid.cell_volume) ** (1.0 / p)


def lp_norm(f: ScalarField, p: ExponentLike) -> float:
    """Discrete L^p norm with quadrature weight h^dim; max |f| for p = inf."""
    return _lp(f.grid, f.values, to_float(p))


def time_lr_norm(times: np.ndarray, series: np.ndarray, r: ExponentLike) -> float:
    """Temporal L^r norm of a sampled nonnegative series (trapezoid), sup for r = inf."""
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        raise GridError("empty series")
    r_val = to_float(r)
    if r_val < 1:
        raise GridError(f"r must be >= 1, got {r_val}")
    if math.isinf(r_val):
        return float(np.max(np.abs(series)))
    if series.size == 1:
        return 0.0
    return float(trapezoid(np.abs(series) ** r_val, np.asarray(times, dtype=float))) ** (1.0 / r_val)


def mixed_norm(traj: Trajectory, q: ExponentLike, r: ExponentLike) -> float:
    """L^r_t(L^q_x) norm of a trajectory."""
    if len(traj) == 0:
        raise GridError("empty trajectory")
    return time_lr_norm(traj.times, traj.norm_series(q), r)


def integrate(f: ScalarField) -> float:
    return f.grid.integrate(f.values)


def inner(f: ScalarField, g: ScalarField) -> float:
    return f.grid.integrate(f.values * g.values)


def gradient(f: ScalarField) -> list[ScalarField]:
    return [ScalarField(f.grid, comp) for comp in f.grid.gradient_array(f.values)]


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, f.grid.laplacian_array(f.values))


def divergence(v: Sequence[ScalarField]) -> ScalarField:
    grid = v[0].grid
    if len(v) != grid.dim:
        raise GridError(f"vector field has {len(v)} components on a {grid.dim}-d grid")
    return ScalarField(grid, grid.divergence_array(np.stack([c.values for c in v])))


def spectral_energy(f: ScalarField) -> float:
    return f.grid.spectral_energy(f.values)


# -- discrete Gagliardo-Nirenberg constant ------------------------------------

SURROGATE_INDEX = 64.0


@dataclass(frozen=True)
class GNEstimate:
    """Outcome of the discrete constant search for one (grid, q)."""
    q: str
    theta: float
    lebesgue_index: float
    best_ratio: float
    constant: float
    restarts: int
    converged: bool
    validation_samples: int
    validation_max: float
    validation_violations: int
    raised_by_validation: bool = False


def _norm_power(grid: Grid, values: np.ndarray, s: float) -> float:
    """||f||_s^2."""
    return _lp(grid, values, s) ** 2


def gn_ratio(grid: Grid, values: np.ndarray, s: float, theta: float) -> float:
    """||f||_s^2 / (||Df||^{2 theta} ||f||^{2(1-theta)} + ||f||^2)."""
    mass = grid.integrate(values * values)
    if mass <= 0.0:
        return 0.0
    energy = max(grid.dirichlet_energy(values), 0.0)
    denom = energy ** theta * mass ** (1.0 - theta) + mass
    return _norm_power(grid, values, s) / denom


def _gn_ratio_gradient(grid: Grid, f: np.ndarray, s: float, theta: float) -> np.ndarray:
    mass = grid.integrate(f * f)
    energy = max(grid.dirichlet_energy(f), 0.0)
    mags = np.abs(f)
    peak = float(mags.max())
    scaled = mags / peak
    moment = float(np.sum(scaled ** s) * grid.cell_volume)
    top = peak * peak * moment ** (2.0 / s)
    d_top = 2.0 * moment ** (2.0 / s - 1.0) * scaled ** (s - 2.0) * f
    d_mass = 2.0 * f
    d_energy = -2.0 * grid.laplacian_array(f)
    denom = energy ** theta * mass ** (1.0 - theta) + mass
    d_denom = ((1.0 - theta) * energy ** theta * mass ** (-theta) + 1.0) * d_mass
    if energy > 1e-300:
        d_denom = d_denom + theta * energy ** (theta - 1.0) * mass ** (1.0 - theta) * d_energy
    return (d_top * denom - top * d_denom) / denom ** 2


def _random_field(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    if rng.random() < 0.5:
        decay = rng.uniform(0.0, 3.0)
        k2 = sum(k.astype(float) ** 2 for k in grid.wavenumbers)
        coeffs = (rng.standard_normal(grid.spectral_shape) + 1j * rng.standard_normal(grid.spectral_shape))
        coeffs *= grid.dealias_mask * (1.0 + k2) ** (-decay / 2.0)
        values = grid.inverse(coeffs)
    else:
        width = math.exp(rng.uniform(math.log(2.0 * grid.spacing), math.log(0.25)))
        dist2 = np.zeros(grid.shape)
        for x in grid.coordinates:
            d = (x - rng.random() + 0.5) % 1.0 - 0.5
            dist2 += d * d
        values = grid.project(np.exp(-dist2 / (2.0 * width * width)))
    if not np.any(values):
        values = grid.project(np.cos(2.0 * np.pi * grid.coordinates[0]))
    return values


def _normalize(grid: Grid, values: np.ndarray) -> np.ndarray:
    return values / math.sqrt(grid.integrate(values * values))


def _ascend(grid: Grid, start: np.ndarray, s: float, theta: float, max_iter: int) -> tuple[np.ndarray, bool]:
    """Projected gradient ascent of the ratio on the unit L^2 sphere with backtracking."""
    f = _normalize(grid, grid.project(start))
    value = gn_ratio(grid, f, s, theta)
    step = 0.5
    for _ in range(max_iter):
        direction = grid.project(_gn_ratio_gradient(grid, f, s, theta))
        size = math.sqrt(max(grid.integrate(direction * direction), 0.0))
        if size < 1e-12:
            return f, True
        improved = False
        while step > 1e-10:
            cand = _normalize(grid, f + step * direction / size)
            cand_value = gn_ratio(grid, cand, s, theta)
            if cand_value > value:
                improved = True
                gain = (cand_value - value) / value
                f, value = cand, cand_value
                step = min(1.0, step * 1.5)
                break
            step *= 0.5
        if not improved or gain < 1e-9:
            return f, True
    return f, False


@lru_cache(maxsize=64)
def _estimate_cached(grid: Grid, q: str, restarts: int, max_iter: int, seed: int, validation_samples: int) -> GNEstimate:
    gn = gn_from_q(grid.dim, q)
    theta = float(gn.theta)
    true_index = to_float(gn.lebesgue_index)
    search_index = min(true_index, SURROGATE_INDEX)
    rng = np.random.default_rng(seed)

    # constants give ratio 1; the lowest Fourier modes seed the first restarts
    best = 1.0
    starts = [np.cos(2.0 * np.pi * x) for x in grid.coordinates]
    starts.append(np.sin(2.0 * np.pi * grid.coordinates[0]))
    all_converged = True
    for attempt in range(restarts):
        start = starts[attempt] if attempt < len(starts) else _random_field(grid, rng)
        f, converged = _ascend(grid, start, search_index, theta, max_iter)
        ratio = gn_ratio(grid, f, true_index, theta)
        if ratio > best:
            best = ratio
            all_converged = converged
    if not all_converged:
        logger.warning("GN search for q=%s on N=%d did not converge; best ratio %.6g", q, grid.n_points, best)
    constant = 1.05 * best

    check_rng = np.random.default_rng(seed + 1)
    val_max = 0.0
    violations = 0
    for _ in range(validation_samples):
        ratio = gn_ratio(grid, _normalize(grid, _random_field(grid, check_rng)), true_index, theta)
        val_max = max(val_max, ratio)
        if ratio > constant:
            violations += 1
    raised = False
    if violations:
        logger.warning("GN constant %.6g violated by %d validation fields; raising to cover %.6g",
                       constant, violations, val_max)
        constant = 1.05 * val_max
        raised = True
    return GNEstimate(
        q=q, theta=theta, lebesgue_index=true_index, best_ratio=best, constant=constant,
        restarts=restarts, converged=all_converged, validation_samples=validation_samples,
        validation_max=val_max, validation_violations=violations, raised_by_validation=raised,
    )


def estimate_gn_constant(
    grid: Grid,
    q: ExponentLike,
    restarts: int = 200,
    max_iter: int = 100,
    seed: int = 0,
    validation_samples: int = 1000,
) -> GNEstimate:
    """Discrete constant of ||f||_{2q'}^2 <= C (||Df||^{2 theta} ||f||^{2(1-theta)} + ||f||^2) on the dealiased band."""
    return _estimate_cached(grid, format_exponent(q), restarts, max_iter, seed, validation_samples)


def discrete_gn_constant(grid: Grid, q: ExponentLike, **options) -> float:
    return estimate_gn_constant(grid, q, **options).constant


