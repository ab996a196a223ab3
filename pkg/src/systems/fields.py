"""Drift fields with prescribed divergence classes, Hamiltonians and the linearized drift."""

from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
import sympy
from pydantic import BaseModel, Field

from src.systems.errors import InadmissibleExponentError, LabError, TimeRangeError
from src.systems.exponents import ExponentLike, ExponentPair, check_divb_admissible, format_exponent, to_float
from src.systems.grid import Grid, ScalarField, Trajectory, _lp

logger = logging.getLogger(__name__)

Coords = tuple[np.ndarray, ...]

VALIDATION_POINTS = 128
VALIDATION_TIMES = 64


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """Real trigonometric polynomial sum_m a_m cos(2 pi k_m.x) + b_m sin(2 pi k_m.x)."""
    modes: np.ndarray  # (M, dim) integer frequencies
    cos_coef: np.ndarray
    sin_coef: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.modes.shape[1])

    def _phase(self, coords: Coords) -> np.ndarray:
        # (M, *shape)
        return 2.0 * np.pi * sum(
            self.modes[:, d].reshape((-1,) + (1,) * coords[d].ndim) * coords[d][None]
            for d in range(self.dim)
        )

    def _bcast(self, coef: np.ndarray, coords: Coords) -> np.ndarray:
        return coef.reshape((-1,) + (1,) * coords[0].ndim)

    def value(self, coords: Coords) -> np.ndarray:
        ph = self._phase(coords)
        return np.sum(self._bcast(self.cos_coef, coords) * np.cos(ph) + self._bcast(self.sin_coef, coords) * np.sin(ph), axis=0)

    def gradient(self, coords: Coords) -> np.ndarray:
        ph = self._phase(coords)
        core = -self._bcast(self.cos_coef, coords) * np.sin(ph) + self._bcast(self.sin_coef, coords) * np.cos(ph)
        return np.stack([
            np.sum(2.0 * np.pi * self._bcast(self.modes[:, d].astype(float), coords) * core, axis=0)
            for d in range(self.dim)
        ])

    def laplacian(self, coords: Coords) -> np.ndarray:
        return self.scaled_by_symbol(lambda k2: -(2.0 * np.pi) ** 2 * k2).value(coords)

    def hessian(self, coords: Coords) -> np.ndarray:
        ph = self._phase(coords)
        core = -(2.0 * np.pi) ** 2 * (self._bcast(self.cos_coef, coords) * np.cos(ph) + self._bcast(self.sin_coef, coords) * np.sin(ph))
        out = np.empty((self.dim, self.dim) + coords[0].shape)
        for i in range(self.dim):
            for j in range(self.dim):
                kk = (self.modes[:, i] * self.modes[:, j]).astype(float)
                out[i, j] = np.sum(self._bcast(kk, coords) * core, axis=0)
        return out

    def squared_frequencies(self) -> np.ndarray:
        return np.sum(self.modes.astype(float) ** 2, axis=1)

    def scaled_by_symbol(self, symbol: Callable[[np.ndarray], np.ndarray]) -> "TrigPolynomial":
        factor = symbol(self.squared_frequencies())
        return TrigPolynomial(self.modes, self.cos_coef * factor, self.sin_coef * factor)

    def inverse_laplacian(self) -> "TrigPolynomial":
        """Zero-mean solution of Laplacian(psi) = self; the constant mode is dropped."""
        k2 = self.squared_frequencies()
        keep = k2 > 0
        factor = -1.0 / ((2.0 * np.pi) ** 2 * k2[keep])
        return TrigPolynomial(self.modes[keep], self.cos_coef[keep] * factor, self.sin_coef[keep] * factor)

    def scaled(self, c: float) -> "TrigPolynomial":
        return TrigPolynomial(self.modes, self.cos_coef * c, self.sin_coef * c)

    def laplacian_weight(self) -> float:
        """Upper bound sum |c| (2 pi |k|)^2 for max |Laplacian|."""
        return float(np.sum((np.abs(self.cos_coef) + np.abs(self.sin_coef)) * (2.0 * np.pi) ** 2 * self.squared_frequencies()))


def half_plane_modes(dim: int, max_mode: int) -> np.ndarray:
    """Nonzero integer vectors with |k_i| <= max_mode, one of each +-k pair."""
    rng = range(-max_mode, max_mode + 1)
    if dim == 1:
        return np.array([[k] for k in range(1, max_mode + 1)], dtype=np.int64)
    modes = [(kx, ky) for kx in rng for ky in rng if (kx > 0) or (kx == 0 and ky > 0)]
    return np.array(modes, dtype=np.int64)


class DriftRecord(BaseModel):
    """Validation record written into the run manifest for every constructed drift."""
    kind: str
    dim: int
    tags: list[str] = Field(default_factory=list)
    seed: Optional[int] = None
    params: dict[str, Any] = Field(default_factory=dict)
    max_divergence_error: float = 0.0
    one_sided_max_excess: Optional[float] = None
    closed_form_mixed_norm: Optional[float] = None
    closed_form_mixed_norm_from_zero: Optional[float] = None

    def summary(self) -> str:
        """One-line summary."""
        return f"{self.kind} (dim={self.dim}, tags={','.join(self.tags)}, div err={self.max_divergence_error:.2e})"


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Analytic time-dependent drift b(x, t) with closed-form divergence."""
    kind: str
    dim: int
    velocity_fn: Callable[[Coords, float], np.ndarray]
    divergence_fn: Callable[[Coords, float], np.ndarray]
    tags: frozenset[str]
    record: DriftRecord
    params: dict[str, Any] = field(default_factory=dict, compare=False)

    def velocity(self, grid: Grid, t: float) -> np.ndarray:
        return self.velocity_fn(grid.coordinates, t)

    def divergence(self, grid: Grid, t: float) -> np.ndarray:
        return self.divergence_fn(grid.coordinates, t)

    def max_speed(self, grid: Grid, t: float) -> float:
        v = self.velocity(grid, t)
        return float(np.max(np.sqrt(np.sum(v * v, axis=0))))

    @property
    def singular_at_zero(self) -> bool:
        return "singular" in self.tags

    def one_sided_bound(self, t: float) -> Optional[float]:
        """c1/t + c2 when the drift carries a one-sided divergence bound."""
        if "one_sided" not in self.tags:
            return None
        return self.params["c1"] / t + self.params["c2"]

    def divergence_series(self, grid: Grid, times: Sequence[float], q: ExponentLike, negative_part: bool = False) -> np.ndarray:
        q_val = to_float(q)
        out = []
        for t in times:
            div = self.divergence(grid, float(t))
            if negative_part:
                div = np.maximum(-div, 0.0)
            out.append(_lp(grid, div, q_val))
        return np.array(out)


def _validate(spec: DriftSpec, times: Optional[np.ndarray] = None) -> DriftSpec:
    """Check the sampled spectral divergence and the one-sided bound on a 128-point grid."""
    grid = Grid(spec.dim, VALIDATION_POINTS)
    if times is None:
        times = np.geomspace(1e-3, 1.0, VALIDATION_TIMES) if spec.singular_at_zero else np.linspace(0.0, 1.0, VALIDATION_TIMES)
    worst = 0.0
    excess = None
    for t in times:
        t = float(t)
        closed = spec.divergence(grid, t)
        sampled = grid.divergence_array(spec.velocity(grid, t))
        scale = max(1.0, float(np.max(np.abs(closed))))
        err = float(np.max(np.abs(sampled - closed))) / scale
        worst = max(worst, err)
        bound = spec.one_sided_bound(t)
        if bound is not None:
            gap = float(np.max(np.maximum(-closed, 0.0))) - bound
            excess = gap if excess is None else max(excess, gap)
            if gap > 1e-8 * max(1.0, bound):
                raise LabError(f"{spec.kind}: one-sided bound exceeded by {gap:.3e} at t={t}")
    if worst > 1e-8:
        raise LabError(f"{spec.kind}: spectral divergence differs from closed form by {worst:.3e}")
    spec.record.max_divergence_error = worst
    spec.record.one_sided_max_excess = excess
    return spec


def make_zero_drift(dim: int) -> DriftSpec:
    def velocity(coords: Coords, t: float) -> np.ndarray:
        return np.zeros((dim,) + coords[0].shape)

    def div(coords: Coords, t: float) -> np.ndarray:
        return np.zeros(coords[0].shape)

    tags = frozenset({"divergence_free", "bounded"})
    record = DriftRecord(kind="zero", dim=dim, tags=sorted(tags))
    return DriftSpec("zero", dim, velocity, div, tags, record)


def make_divfree_drift(grid: Grid, seed: Optional[int] = 0, amplitude: float = 1.0) -> DriftSpec:
    """Divergence-free control drift: constant in 1D, stream-function field in 2D."""
    dim = grid.dim
    tags = frozenset({"divergence_free", "bounded"})
    if dim == 1:
        def velocity(coords: Coords, t: float) -> np.ndarray:
            return np.full((1,) + coords[0].shape, float(amplitude))

        params: dict[str, Any] = {"amplitude": amplitude}
    else:
        if seed is None:
            # sin(2 pi x) sin(2 pi y)
            psi = TrigPolynomial(np.array([[1, -1], [1, 1]]), np.array([0.5, -0.5]), np.zeros(2))
        else:
            rng = np.random.default_rng(seed)
            modes = half_plane_modes(2, 3)
            k2 = np.sum(modes.astype(float) ** 2, axis=1)
            psi = TrigPolynomial(modes, rng.standard_normal(len(modes)) / (1 + k2), rng.standard_normal(len(modes)) / (1 + k2))
            speed = float(np.sum((np.abs(psi.cos_coef) + np.abs(psi.sin_coef)) * 2 * np.pi * np.sqrt(k2)))
            psi = psi.scaled(1.0 / speed)

        def velocity(coords: Coords, t: float) -> np.ndarray:
            g = psi.gradient(coords)
            return amplitude * (1.0 + 0.5 * math.sin(2.0 * math.pi * t)) * np.stack([g[1], -g[0]])

        params = {"amplitude": amplitude, "stream": psi}

    def div(coords: Coords, t: float) -> np.ndarray:
        return np.zeros(coords[0].shape)

    record = DriftRecord(kind="divergence_free", dim=dim, tags=sorted(tags), seed=seed, params={"amplitude": amplitude})
    return _validate(DriftSpec("divergence_free", dim, velocity, div, tags, record, params))


def lrlq_time_factor(t: float, r: float, margin: float) -> float:
    if math.isinf(r) or margin == 1.0:
        return 1.0
    return t ** (-(1.0 - margin) / r)


def lrlq_time_integral(t0: float, t1: float, r: float, margin: float) -> float:
    """(integral_{t0}^{t1} a(t)^r dt)^{1/r}; sup of a for r = inf."""
    if math.isinf(r):
        return 1.0
    return ((t1 ** margin - t0 ** margin) / margin) ** (1.0 / r)


def make_LrLq_drift(
    grid: Grid,
    q: ExponentLike,
    r: ExponentLike,
    margin: float = 0.5,
    seed: int = 0,
    amplitude: float = 1.0,
    mollify_scale: Optional[float] = None,
    t_start: float = 0.0,
    t_end: float = 1.0,
) -> DriftSpec:
    """Gradient drift b = A a(t) D psi with a(t) = t^{-(1-margin)/r}, so div b = A a(t) Laplacian(psi)."""
    ep = ExponentPair(grid.dim, q, r)
    ok, diagnostic = check_divb_admissible(ep)
    if not ok:
        raise InadmissibleExponentError(f"{ep.describe()}: {diagnostic}")
    if not 0.0 < margin <= 1.0:
        raise ValueError(f"margin must lie in (0, 1], got {margin}")
    q_val, r_val = to_float(ep.q), to_float(ep.r)
    scale = 4.0 * grid.spacing if mollify_scale is None else mollify_scale
    rng = np.random.default_rng(seed)
    modes = half_plane_modes(grid.dim, 4)
    k2 = np.sum(modes.astype(float) ** 2, axis=1)
    damp = np.exp(-0.5 * (2.0 * np.pi * np.sqrt(k2) * scale) ** 2) / (1.0 + k2)
    psi = TrigPolynomial(modes, rng.standard_normal(len(modes)) * damp, rng.standard_normal(len(modes)) * damp)
    psi = psi.scaled(1.0 / psi.laplacian_weight())
    lap_psi = psi.scaled_by_symbol(lambda kk: -(2.0 * np.pi) ** 2 * kk)

    def velocity(coords: Coords, t: float) -> np.ndarray:
        return amplitude * lrlq_time_factor(t, r_val, margin) * psi.gradient(coords)

    def div(coords: Coords, t: float) -> np.ndarray:
        return amplitude * lrlq_time_factor(t, r_val, margin) * lap_psi.value(coords)

    lap_norm = _lp(grid, lap_psi.value(grid.coordinates), q_val)
    tags = frozenset({"divb_LrLq"} | ({"singular"} if lrlq_time_factor(2.0, r_val, margin) != 1.0 else {"bounded"}))
    params = {
        "q": format_exponent(ep.q), "r": format_exponent(ep.r), "margin": margin, "amplitude": amplitude,
        "mollify_scale": scale, "laplacian_q_norm": lap_norm,
    }
    record = DriftRecord(kind="lrlq", dim=grid.dim, tags=sorted(tags), seed=seed, params=dict(params))
    if t_end > t_start >= 0.0:
        record.closed_form_mixed_norm = amplitude * lap_norm * lrlq_time_integral(t_start, t_end, r_val, margin)
        record.closed_form_mixed_norm_from_zero = amplitude * lap_norm * lrlq_time_integral(0.0, t_end, r_val, margin)
    spec = DriftSpec("lrlq", grid.dim, velocity, div, tags, record, params)
    return _validate(spec)


def lrlq_closed_form_mixed_norm(drift: DriftSpec, t0: float, t1: float) -> float:
    """A ||Laplacian psi||_q (integral of a^r)^{1/r} over [t0, t1]."""
    p = drift.params
    return p["amplitude"] * p["laplacian_q_norm"] * lrlq_time_integral(t0, t1, to_float(p["r"]), p["margin"])


def fejer_profile(dim: int, order: int, center: Sequence[float]) -> TrigPolynomial:
    """(F_K(x - c) - 1)/(K^dim - 1) for the normalized product Fejer kernel; max 1 at c, min -1/(K^dim - 1)."""
    modes = half_plane_modes(dim, order - 1)
    weights = np.prod(1.0 - np.abs(modes) / order, axis=1) * 2.0 / (order ** dim - 1)
    shift = 2.0 * np.pi * modes @ np.asarray(center, dtype=float)
    return TrigPolynomial(modes, weights * np.cos(shift), weights * np.sin(shift))


def make_one_sided_singular_drift(
    grid: Grid,
    c1: float,
    c2: float = 0.0,
    seed: int = 0,
    fejer_order: int = 8,
    shift: Optional[Sequence[float]] = None,
) -> DriftSpec:
    """b = -(c1/t + c2) D Psi + v with Laplacian(Psi) = chi, so [div b]^- <= c1/t + c2 with equality at one node."""
    if c1 < 0:
        raise ValueError(f"c1 must be >= 0, got {c1}")
    if fejer_order < 2:
        raise ValueError(f"fejer order must be >= 2, got {fejer_order}")
    rng = np.random.default_rng(seed)
    center = rng.integers(0, grid.n_points, size=grid.dim) / grid.n_points
    chi = fejer_profile(grid.dim, fejer_order, center)
    potential = chi.inverse_laplacian()
    offset = np.asarray(shift if shift is not None else np.zeros(grid.dim), dtype=float)

    def weight(t: float) -> float:
        return (c1 / t if c1 else 0.0) + c2

    def velocity(coords: Coords, t: float) -> np.ndarray:
        base = -weight(t) * potential.gradient(coords)
        return base + offset.reshape((-1,) + (1,) * coords[0].ndim)

    def div(coords: Coords, t: float) -> np.ndarray:
        return -weight(t) * chi.value(coords)

    if c1 == 0 and c2 == 0:
        tags = frozenset({"divergence_free", "bounded", "one_sided"})
    else:
        tags = frozenset({"one_sided"} | ({"singular"} if c1 > 0 else {"bounded"}))
    params = {"c1": c1, "c2": c2, "fejer_order": fejer_order, "center": center.tolist(), "shift": offset.tolist()}
    record = DriftRecord(kind="one_sided", dim=grid.dim, tags=sorted(tags), seed=seed, params=dict(params))
    return _validate(DriftSpec("one_sided", grid.dim, velocity, div, tags, record, params))


# -- Hamiltonians ------------------------------------------------------------

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """x-independent Hamiltonian H(p) acting on stacked momenta of shape (dim, ...)."""
    kind: str
    value_fn: ArrayFn
    gradient_fn: ArrayFn
    hessian_fn: Optional[ArrayFn] = None
    gamma: float = 2.0

    def value(self, p: np.ndarray) -> np.ndarray:
        return self.value_fn(p)

    def gradient(self, p: np.ndarray) -> np.ndarray:
        return self.gradient_fn(p)

    def hessian(self, p: np.ndarray) -> np.ndarray:
        if self.hessian_fn is None:
            raise LabError(f"hamiltonian '{self.kind}' has no hessian")
        return self.hessian_fn(p)

    def ellipticity_bounds(self, dim: int, p_max: float, samples: int = 257) -> tuple[float, float]:
        """(lambda, Lambda): extreme eigenvalues of the Hessian over |p| <= p_max."""
        s = np.linspace(0.0, p_max * p_max, samples)
        if self.kind == "quadratic":
            return 1.0, 1.0
        if self.kind == "power":
            g = self.gamma
            eig = [g * (1 + s) ** (g / 2 - 2) * (1 + (g - 1) * s)]
            if dim == 2:
                eig.append(g * (1 + s) ** (g / 2 - 1))
            stacked = np.concatenate(eig)
            return float(stacked.min()), float(stacked.max())
        radii = np.sqrt(s)
        if dim == 1:
            p = radii[None]
        else:
            angles = np.linspace(0.0, 2.0 * np.pi, 33)
            rr, aa = np.meshgrid(radii, angles, indexing="ij")
            p = np.stack([rr * np.cos(aa), rr * np.sin(aa)]).reshape(2, -1)
        hess = self.hessian(p)
        eig = np.linalg.eigvalsh(np.moveaxis(hess, (0, 1), (-2, -1)))
        return float(eig.min()), float(eig.max())


def quadratic_hamiltonian() -> Hamiltonian:
    """H(p) = |p|^2 / 2."""
    def hessian(p: np.ndarray) -> np.ndarray:
        dim = p.shape[0]
        return np.broadcast_to(np.eye(dim).reshape((dim, dim) + (1,) * (p.ndim - 1)), (dim, dim) + p.shape[1:]).copy()

    return Hamiltonian("quadratic", lambda p: 0.5 * np.sum(p * p, axis=0), lambda p: np.array(p, dtype=float), hessian, 2.0)


def power_hamiltonian(gamma: float) -> Hamiltonian:
    """H(p) = (1 + |p|^2)^{gamma/2}."""
    if gamma <= 1:
        raise ValueError(f"gamma must exceed 1, got {gamma}")

    def value(p: np.ndarray) -> np.ndarray:
        return (1.0 + np.sum(p * p, axis=0)) ** (gamma / 2)

    def gradient(p: np.ndarray) -> np.ndarray:
        return gamma * (1.0 + np.sum(p * p, axis=0)) ** (gamma / 2 - 1) * p

    def hessian(p: np.ndarray) -> np.ndarray:
        dim = p.shape[0]
        base = 1.0 + np.sum(p * p, axis=0)
        out = np.empty((dim, dim) + p.shape[1:])
        for i in range(dim):
            for j in range(dim):
                out[i, j] = gamma * (gamma - 2) * base ** (gamma / 2 - 2) * p[i] * p[j]
                if i == j:
                    out[i, j] += gamma * base ** (gamma / 2 - 1)
        return out

    return Hamiltonian("power", value, gradient, hessian, float(gamma))


def custom_hamiltonian(expression: str) -> Hamiltonian:
    """Radial H(p) = f(s), s = |p|^2, with f a smooth expression in s such as "sqrt(1 + s)".

    D_pH = 2 f'(s) p and D^2_pH = 2 f'(s) I + 4 f''(s) p p^T, differentiated symbolically.
    """
    s = sympy.Symbol("s", nonnegative=True)
    try:
        f = sympy.sympify(expression, locals={"s": s})
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise LabError(f"cannot parse hamiltonian '{expression}': {e}") from e
    if not isinstance(f, sympy.Expr):
        raise LabError(f"hamiltonian '{expression}' is not a scalar expression")
    extra = f.free_symbols - {s}
    if extra:
        raise LabError(f"hamiltonian '{expression}' may depend on s = |p|^2 only, found {sorted(map(str, extra))}")
    f0, f1, f2 = (sympy.lambdify(s, e, "numpy") for e in (f, sympy.diff(f, s), sympy.diff(f, s, 2)))

    def radial(fn: Callable, sq: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(fn(sq), dtype=float), sq.shape)

    def value(p: np.ndarray) -> np.ndarray:
        return radial(f0, np.sum(p * p, axis=0))

    def gradient(p: np.ndarray) -> np.ndarray:
        return 2.0 * radial(f1, np.sum(p * p, axis=0)) * p

    def hessian(p: np.ndarray) -> np.ndarray:
        dim = p.shape[0]
        sq = np.sum(p * p, axis=0)
        d1, d2 = radial(f1, sq), radial(f2, sq)
        out = np.empty((dim, dim) + p.shape[1:])
        for i in range(dim):
            for j in range(dim):
                out[i, j] = 4.0 * d2 * p[i] * p[j]
                if i == j:
                    out[i, j] += 2.0 * d1
        return out

    return Hamiltonian("custom_smooth", value, gradient, hessian)


# -- linearized drift --------------------------------------------------------

def gauss_legendre_unit(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True, eq=False)
class LinearizedDrift:
    """b = -int_0^1 D_pH(theta Du1 + (1 - theta) Du2) d theta along two HJ solutions."""
    u1: Trajectory
    u2: Trajectory
    hamiltonian: Hamiltonian
    nodes: int = 8

    def __post_init__(self) -> None:
        if self.u1.grid != self.u2.grid:
            raise LabError("linearized drift needs both solutions on one grid")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @property
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        return gauss_legendre_unit(1 if self.hamiltonian.kind == "quadratic" else self.nodes)

    def _values(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        for traj in (self.u1, self.u2):
            if t < traj.t_start - 1e-12 or t > traj.t_end + 1e-12:
                raise TimeRangeError(f"t={t} outside [{traj.t_start}, {traj.t_end}]")
        return self.u1.interpolate(t), self.u2.interpolate(t)

    def velocity_from(self, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
        grid = self.grid
        d1, d2 = grid.gradient_array(v1), grid.gradient_array(v2)
        theta, weights = self.quadrature
        out = np.zeros_like(d1)
        for th, w in zip(theta, weights):
            out -= w * self.hamiltonian.gradient(th * d1 + (1.0 - th) * d2)
        return out

    def minus_divergence_from(self, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
        """sum_theta w Tr(D^2H(Du_theta) D^2u_theta); the x-derivative term vanishes for x-independent H."""
        grid = self.grid
        d1, d2 = grid.gradient_array(v1), grid.gradient_array(v2)
        h1, h2 = grid.hessian_array(v1), grid.hessian_array(v2)
        theta, weights = self.quadrature
        out = np.zeros(grid.shape)
        for th, w in zip(theta, weights):
            hp = self.hamiltonian.hessian(th * d1 + (1.0 - th) * d2)
            hu = th * h1 + (1.0 - th) * h2
            out += w * np.einsum("ij...,ji...->...", hp, hu)
        return out

    def velocity(self, t: float) -> np.ndarray:
        return self.velocity_from(*self._values(t))

    def minus_divergence(self, t: float) -> np.ndarray:
        return self.minus_divergence_from(*self._values(t))


def linearized_drift_eval(ld: LinearizedDrift, t: float) -> list[ScalarField]:
    return [ScalarField(ld.grid, comp) for comp in ld.velocity(t)]


def divergence_of_linearized_drift(ld: LinearizedDrift, t: float) -> ScalarField:
    """-div b at time t via the Hessian expansion."""
    return ScalarField(ld.grid, ld.minus_divergence(t))

