"""IMEX spectral time-steppers for the Fokker-Planck, transport-diffusion and Hamilton-Jacobi families."""

from __future__ import annotations
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import trapezoid

from src.models.experiment import Direction, MeshKind, PDEKind, Scheme, SolverConfig
from src.systems.errors import CFLViolationError, GridError, LabError, SolverError
from src.systems.fields import Coords, DriftSpec, Hamiltonian, LinearizedDrift
from src.systems.grid import Grid, Trajectory
from src.systems.time_system import SnapshotRecorder, StepClock, geometric_mesh, refine_mesh, uniform_mesh

logger = logging.getLogger(__name__)

SourceFn = Callable[[Coords, float], np.ndarray]
VelocityFn = Callable[[float], np.ndarray]
Explicit = Callable[[np.ndarray, float], np.ndarray]

LIPSCHITZ_SAFETY = 1.25


def _speed(v: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.sum(v * v, axis=0))))


def _step_limit(cfg: SolverConfig, grid: Grid, speed: float) -> float:
    """Largest admissible step for a given max |b|."""
    if speed <= 0.0:
        return math.inf
    limit = cfg.cfl * grid.spacing / speed
    if cfg.effective_scheme() == Scheme.IMEX_EULER:
        # explicit Euler advection is von Neumann stable under implicit diffusion iff dt |b|^2 <= 2 eps
        limit = min(limit, cfg.epsilon / (speed * speed))
    return limit


def base_mesh(cfg: SolverConfig) -> np.ndarray:
    if cfg.mesh == MeshKind.GEOMETRIC:
        return geometric_mesh(cfg.t_start, cfg.t_end, cfg.geometric_steps)
    return uniform_mesh(cfg.t_start, cfg.t_end, cfg.dt)


def build_time_mesh(
    cfg: SolverConfig,
    grid: Grid,
    speed: Optional[Callable[[float], float]] = None,
    speed_bound: Optional[float] = None,
) -> np.ndarray:
    """Base mesh from the config, every step capped by the CFL bound at both of its ends."""
    base = base_mesh(cfg)
    if speed is None and not speed_bound:
        return base

    def max_step(a: float, b: float) -> float:
        s = speed_bound if speed_bound else max(speed(a), speed(b))
        return _step_limit(cfg, grid, s)

    return refine_mesh(base, max_step)


def _verify_cfl(cfg: SolverConfig, grid: Grid, step: int, dt: float, speed: float) -> None:
    bound = _step_limit(cfg, grid, speed)
    if dt > bound * (1.0 + 1e-9):
        raise CFLViolationError(step, dt, bound)


def _advance(
    grid: Grid,
    scheme: Scheme,
    epsilon: float,
    explicit: Explicit,
    state: np.ndarray,
    t_from: float,
    t_to: float,
) -> np.ndarray:
    """One step of u' = eps Laplacian(u) + N(u, t) in marching time."""
    dt = abs(t_to - t_from)
    if scheme == Scheme.RK3:
        stage1 = state + dt * explicit(state, t_from)
        stage2 = 0.75 * state + 0.25 * (stage1 + dt * explicit(stage1, t_to))
        t_mid = t_from + 0.5 * (t_to - t_from)
        out = state / 3.0 + 2.0 / 3.0 * (stage2 + dt * explicit(stage2, t_mid))
        if epsilon:
            out = grid.resolvent(out, epsilon * dt)
        return out
    if scheme == Scheme.IMEX2:
        t_mid = t_from + 0.5 * (t_to - t_from)
        half = grid.resolvent(state + 0.5 * dt * explicit(state, t_from), 0.5 * epsilon * dt)
        rhs = state + 0.5 * dt * epsilon * grid.laplacian_array(state) + dt * explicit(half, t_mid)
        return grid.resolvent(rhs, 0.5 * epsilon * dt)
    return grid.resolvent(state + dt * explicit(state, t_from), epsilon * dt)


def _source_values(grid: Grid, source: Optional[SourceFn], t: float) -> Union[np.ndarray, float]:
    return 0.0 if source is None else source(grid.coordinates, t)


def fokker_planck_step(
    grid: Grid, cfg: SolverConfig, velocity: VelocityFn, rho: np.ndarray, t_from: float, t_to: float, step: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Conservative step; returns (rho_next, diffused rho) for the pairing bookkeeping."""
    scheme = cfg.effective_scheme()
    dt = abs(t_to - t_from)

    def explicit(r: np.ndarray, t: float) -> np.ndarray:
        return -grid.divergence_array(velocity(t) * grid.project(r)[None])

    if scheme == Scheme.IMEX_EULER:
        b_next = velocity(t_to)
        _verify_cfl(cfg, grid, step, dt, _speed(b_next))
        diffused = grid.resolvent(rho, cfg.epsilon * dt)
        return diffused - dt * grid.divergence_array(b_next * grid.project(diffused)[None]), diffused
    _verify_cfl(cfg, grid, step, dt, max(_speed(velocity(t_from)), _speed(velocity(t_to))))
    return _advance(grid, scheme, cfg.epsilon, explicit, rho, t_from, t_to), rho


def _transport_explicit(grid: Grid, velocity: VelocityFn, source: Optional[SourceFn]) -> Explicit:
    def explicit(v: np.ndarray, t: float) -> np.ndarray:
        b = velocity(t)
        return grid.project(np.sum(b * grid.gradient_array(v), axis=0)) + _source_values(grid, source, t)
    return explicit


def _hj_explicit(grid: Grid, hamiltonian: Hamiltonian, source: Optional[SourceFn]) -> Explicit:
    def explicit(u: np.ndarray, t: float) -> np.ndarray:
        return -grid.project(hamiltonian.value(grid.gradient_array(u))) + _source_values(grid, source, t)
    return explicit


def _to_trajectory(grid: Grid, recorder: SnapshotRecorder, label: str) -> Trajectory:
    times, values = recorder.ordered()
    return Trajectory(grid, times, values, label)


def hj_speed_bound(grid: Grid, hamiltonian: Hamiltonian, data: np.ndarray, source: Optional[SourceFn], mesh: np.ndarray) -> float:
    """a priori bound on max |D_pH(Du)| from ||Dg||_inf + int ||Df||_inf."""
    lip = _speed(grid.gradient_array(data))
    if source is not None and len(mesh) > 1:
        series = [_speed(grid.gradient_array(np.broadcast_to(source(grid.coordinates, float(t)), grid.shape))) for t in mesh]
        lip += float(trapezoid(series, mesh))
    lip *= LIPSCHITZ_SAFETY
    p_edge = np.zeros((grid.dim, 1))
    p_edge[0, 0] = lip
    return max(float(np.abs(hamiltonian.gradient(p_edge)).max()), 1e-12)


def solve(
    kind: PDEKind,
    grid: Grid,
    model: Union[DriftSpec, Hamiltonian],
    data: np.ndarray,
    cfg: SolverConfig,
    source: Optional[SourceFn] = None,
    label: str = "",
) -> Trajectory:
    """Run one equation; backward problems are marched from t_end and returned in increasing time."""
    data = np.asarray(data, dtype=float)
    if data.shape != grid.shape:
        raise GridError(f"data shape {data.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(data)):
        raise SolverError("data contains non-finite values")
    scheme = cfg.effective_scheme()
    started = time.perf_counter()

    if kind == PDEKind.HAMILTON_JACOBI:
        if not isinstance(model, Hamiltonian):
            raise LabError("hamilton_jacobi needs a Hamiltonian")
        base = base_mesh(cfg)
        mesh = build_time_mesh(cfg, grid, speed_bound=hj_speed_bound(grid, model, data, source, base))
        explicit = _hj_explicit(grid, model, source)
        backward = True

        def step_fn(step: int, t_from: float, t_to: float, u: np.ndarray) -> np.ndarray:
            _verify_cfl(cfg, grid, step, abs(t_to - t_from), _speed(model.gradient(grid.gradient_array(u))))
            return _advance(grid, scheme, cfg.epsilon, explicit, u, t_from, t_to)
    else:
        if not isinstance(model, DriftSpec):
            raise LabError(f"{kind.value} needs a drift")
        drift = model
        if drift.singular_at_zero and cfg.t_start <= 0:
            raise SolverError(f"drift '{drift.kind}' is singular at t=0; set t_start > 0")
        mesh = build_time_mesh(cfg, grid, speed=lambda t: drift.max_speed(grid, t))

        def velocity(t: float) -> np.ndarray:
            return drift.velocity(grid, t)

        if kind == PDEKind.FOKKER_PLANCK:
            backward = False

            def step_fn(step: int, t_from: float, t_to: float, rho: np.ndarray) -> np.ndarray:
                return fokker_planck_step(grid, cfg, velocity, rho, t_from, t_to, step)[0]
        else:
            backward = cfg.direction == Direction.BACKWARD
            explicit = _transport_explicit(grid, velocity, source)

            def step_fn(step: int, t_from: float, t_to: float, v: np.ndarray) -> np.ndarray:
                dt = abs(t_to - t_from)
                _verify_cfl(cfg, grid, step, dt, max(_speed(velocity(t_from)), _speed(velocity(t_to))))
                return _advance(grid, scheme, cfg.epsilon, explicit, v, t_from, t_to)

    clock = StepClock(mesh, backward=backward)
    recorder = SnapshotRecorder(clock.n_steps, cfg.record_every)
    clock.register_handler(recorder)
    clock.advance(data, step_fn)
    traj = _to_trajectory(grid, recorder, label or kind.value)
    logger.debug("%s: %d steps (%s, eps=%g) in %.2fs", kind.value, clock.n_steps, scheme.value,
                 cfg.epsilon, time.perf_counter() - started)
    return traj


# -- duality pairs -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdjointPairResult:
    """Two HJ solutions, their difference, the dual density and the pairing bookkeeping."""
    u1: Trajectory
    u2: Trajectory
    w: Trajectory
    rho: Trajectory
    drift: LinearizedDrift
    pairing: np.ndarray          # <w(t), rho(t)> at rho's times
    source_pairing: np.ndarray   # accumulated source pairing from t to T
    mass: np.ndarray
    identity_error: float
    identity_scale: float
    max_drift_speed: float


def solve_hj_pair(
    grid: Grid,
    hamiltonian: Hamiltonian,
    g1: np.ndarray,
    g2: np.ndarray,
    cfg: SolverConfig,
    f1: Optional[SourceFn] = None,
    f2: Optional[SourceFn] = None,
) -> tuple[Trajectory, Trajectory]:
    """Both HJ problems on one shared mesh, every step recorded."""
    base = base_mesh(cfg)
    bound = max(hj_speed_bound(grid, hamiltonian, g1, f1, base), hj_speed_bound(grid, hamiltonian, g2, f2, base))
    mesh = build_time_mesh(cfg, grid, speed_bound=bound)
    scheme = cfg.effective_scheme()
    explicits = (_hj_explicit(grid, hamiltonian, f1), _hj_explicit(grid, hamiltonian, f2))

    def step_fn(step: int, t_from: float, t_to: float, pair: np.ndarray) -> np.ndarray:
        dt = abs(t_to - t_from)
        speed = max(_speed(hamiltonian.gradient(grid.gradient_array(u))) for u in pair)
        _verify_cfl(cfg, grid, step, dt, speed)
        return np.stack([_advance(grid, scheme, cfg.epsilon, ex, u, t_from, t_to) for ex, u in zip(explicits, pair)])

    clock = StepClock(mesh, backward=True)
    recorder = SnapshotRecorder(clock.n_steps, 1)
    clock.register_handler(recorder)
    clock.advance(np.stack([np.asarray(g1, dtype=float), np.asarray(g2, dtype=float)]), step_fn)
    times, values = recorder.ordered()
    return (Trajectory(grid, times, values[:, 0], "u1"), Trajectory(grid, times, values[:, 1], "u2"))


def solve_adjoint_pair(
    grid: Grid,
    hamiltonian: Hamiltonian,
    g1: np.ndarray,
    g2: np.ndarray,
    rho_tau: np.ndarray,
    cfg: SolverConfig,
    f1: Optional[SourceFn] = None,
    f2: Optional[SourceFn] = None,
    tau: Optional[float] = None,
    nodes: int = 8,
    pair: Optional[tuple[Trajectory, Trajectory]] = None,
) -> AdjointPairResult:
    """Solve both HJ problems, linearize along them and push the dual density forward from tau."""
    u1, u2 = pair if pair is not None else solve_hj_pair(grid, hamiltonian, g1, g2, cfg, f1, f2)
    drift = LinearizedDrift(u1, u2, hamiltonian, nodes)
    w = Trajectory(grid, u1.times, u1.values - u2.values, "w")
    mesh = u1.times
    start = 0 if tau is None else u1.index_of(tau)
    sub_mesh = mesh[start:]
    cache: dict[float, np.ndarray] = {}

    def velocity(t: float) -> np.ndarray:
        if t not in cache:
            cache[t] = drift.velocity(t)
        return cache[t]

    sources: list[float] = []

    def step_fn(step: int, t_from: float, t_to: float, rho: np.ndarray) -> np.ndarray:
        nxt, diffused = fokker_planck_step(grid, cfg, velocity, rho, t_from, t_to, step)
        diff_f = np.asarray(_source_values(grid, f1, t_to)) - np.asarray(_source_values(grid, f2, t_to))
        sources.append((t_to - t_from) * grid.integrate(np.broadcast_to(diff_f, grid.shape) * diffused))
        cache.pop(t_from, None)
        return nxt

    clock = StepClock(sub_mesh)
    recorder = SnapshotRecorder(clock.n_steps, 1)
    clock.register_handler(recorder)
    clock.advance(np.asarray(rho_tau, dtype=float), step_fn)
    times, values = recorder.ordered()
    rho = Trajectory(grid, times, values, "rho")

    pairing = np.array([grid.integrate(w.values[start + k] * rho.values[k]) for k in range(len(rho))])
    tail = np.concatenate([np.cumsum(np.asarray(sources)[::-1])[::-1], [0.0]])
    identity = pairing - pairing[-1] - tail
    scale = max(float(np.max(np.abs(pairing))), float(np.max(np.abs(tail))), 1e-300)
    mass = np.array([grid.integrate(v) for v in rho.values])
    max_speed = max(_speed(drift.velocity(float(t))) for t in times)
    return AdjointPairResult(
        u1=u1, u2=u2, w=w, rho=rho, drift=drift, pairing=pairing, source_pairing=tail, mass=mass,
        identity_error=float(np.max(np.abs(identity))), identity_scale=scale, max_drift_speed=max_speed,
    )


# -- residuals and oracles -----------------------------------------------------

def residual(
    kind: PDEKind,
    traj: Trajectory,
    model: Union[DriftSpec, Hamiltonian, None],
    cfg: SolverConfig,
    source: Optional[SourceFn] = None,
) -> np.ndarray:
    """Sup-norm PDE residual at interior snapshots, centered time differences."""
    if len(traj) < 3:
        raise SolverError("residual needs at least 3 snapshots")
    grid = traj.grid
    eps = cfg.epsilon
    out = []
    for i in range(1, len(traj) - 1):
        t = float(traj.times[i])
        dudt = (traj.values[i + 1] - traj.values[i - 1]) / (traj.times[i + 1] - traj.times[i - 1])
        u = traj.values[i]
        lap = grid.laplacian_array(u)
        f = _source_values(grid, source, t)
        if kind == PDEKind.HAMILTON_JACOBI:
            if not isinstance(model, Hamiltonian):
                raise LabError("hamilton_jacobi residual needs a Hamiltonian")
            res = -dudt - eps * lap + model.value(grid.gradient_array(u)) - f
        else:
            b = model.velocity(grid, t) if isinstance(model, DriftSpec) else np.zeros((grid.dim,) + grid.shape)
            if kind == PDEKind.FOKKER_PLANCK:
                res = dudt - eps * lap + grid.divergence_array(b * u[None])
            elif cfg.direction == Direction.BACKWARD:
                res = -dudt - eps * lap - np.sum(b * grid.gradient_array(u), axis=0) - f
            else:
                res = dudt - eps * lap - np.sum(b * grid.gradient_array(u), axis=0) - f
        out.append(float(np.max(np.abs(res))))
    return np.array(out)


def heat_kernel_solution(grid: Grid, data: np.ndarray, epsilon: float, times: np.ndarray) -> Trajectory:
    """Exact Fourier decay of the heat equation from `data` at times[0]."""
    coeffs = grid.forward(data)
    t0 = float(times[0])
    values = np.stack([grid.inverse(coeffs * np.exp(epsilon * grid.laplacian_symbol * (float(t) - t0))) for t in times])
    return Trajectory(grid, times, values, "heat_kernel")


def cole_hopf_solution(grid: Grid, terminal: np.ndarray, epsilon: float, times: np.ndarray, t_final: float) -> Trajectory:
    """u = -2 eps log(phi) with phi the backward heat flow of exp(-g/(2 eps)); quadratic H only."""
    if epsilon <= 0:
        raise LabError("Cole-Hopf needs epsilon > 0")
    shift = float(np.min(terminal))
    coeffs = grid.forward(np.exp(-(terminal - shift) / (2.0 * epsilon)))
    values = []
    for t in times:
        phi = grid.inverse(coeffs * np.exp(epsilon * grid.laplacian_symbol * (t_final - float(t))))
        values.append(shift - 2.0 * epsilon * np.log(phi))
    return Trajectory(grid, times, np.stack(values), "cole_hopf")
