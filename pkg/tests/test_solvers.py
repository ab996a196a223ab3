"""Pseudospectral time steppers, duality pairs and exact oracles."""

import numpy as np
import pytest

from src.models.experiment import Direction, PDEKind, Scheme, SolverConfig
from src.systems.data import dual_density
from src.systems.errors import GridError, LabError, SolverError
from src.systems.fields import (
    make_divfree_drift,
    make_LrLq_drift,
    make_one_sided_singular_drift,
    make_zero_drift,
    quadratic_hamiltonian,
)
from src.systems.grid import Grid
from src.systems.solvers import (
    cole_hopf_solution,
    heat_kernel_solution,
    residual,
    solve,
    solve_adjoint_pair,
    solve_hj_pair,
)


def _cosine(grid, amplitude=0.5):
    return amplitude * np.cos(2 * np.pi * grid.coordinates[0])


def test_heat_equation_matches_fourier_decay(grid1):
    cfg = SolverConfig(epsilon=1.0, dt=1e-4, t_end=0.01, scheme=Scheme.IMEX2)
    data = 1.0 + _cosine(grid1)
    traj = solve(PDEKind.FOKKER_PLANCK, grid1, make_zero_drift(1), data, cfg)
    exact = heat_kernel_solution(grid1, data, 1.0, traj.times)
    assert len(traj) == 101
    assert np.max(np.abs(traj.values - exact.values)) < 1e-6


@pytest.mark.parametrize("scheme", [Scheme.IMEX_EULER, Scheme.IMEX2])
def test_fokker_planck_conserves_mass(grid1, scheme):
    drift = make_LrLq_drift(grid1, 2, 2, margin=0.5, seed=0, t_start=0.01, t_end=0.05)
    cfg = SolverConfig(epsilon=1.0, dt=1e-3, t_start=0.01, t_end=0.05, scheme=scheme)
    rho0 = 1.0 + _cosine(grid1)
    traj = solve(PDEKind.FOKKER_PLANCK, grid1, drift, rho0, cfg)
    masses = [grid1.integrate(v) for v in traj.values]
    assert traj.t_start == 0.01 and traj.t_end == 0.05
    assert max(abs(m - 1.0) for m in masses) < 1e-10


def test_singular_drift_needs_positive_start(grid1):
    drift = make_one_sided_singular_drift(grid1, c1=1.0)
    with pytest.raises(SolverError):
        solve(PDEKind.FOKKER_PLANCK, grid1, drift, np.ones(grid1.shape), SolverConfig(t_end=0.05))


def test_solve_rejects_bad_data(grid1):
    cfg = SolverConfig(t_end=0.01)
    with pytest.raises(GridError):
        solve(PDEKind.FOKKER_PLANCK, grid1, make_zero_drift(1), np.ones(7), cfg)
    bad = np.ones(grid1.shape)
    bad[3] = np.nan
    with pytest.raises(SolverError):
        solve(PDEKind.FOKKER_PLANCK, grid1, make_zero_drift(1), bad, cfg)
    with pytest.raises(LabError):
        solve(PDEKind.HAMILTON_JACOBI, grid1, make_zero_drift(1), np.ones(grid1.shape), cfg)


def test_backward_transport_ends_on_its_terminal_datum(grid1):
    cfg = SolverConfig(epsilon=0.5, dt=1e-3, t_end=0.02, direction=Direction.BACKWARD)
    drift = make_divfree_drift(grid1, amplitude=0.5)
    g = _cosine(grid1)
    traj = solve(PDEKind.TRANSPORT_DIFFUSION, grid1, drift, g, cfg, label="v")
    assert traj.label == "v"
    assert traj.t_start == 0.0 and traj.t_end == 0.02
    np.testing.assert_array_equal(traj.values[-1], g)
    assert np.max(np.abs(traj.values[0])) < np.max(np.abs(g))


def test_hj_pair_matches_cole_hopf():
    grid = Grid(1, 64)
    cfg = SolverConfig(epsilon=0.1, dt=1e-4, t_end=0.05, scheme=Scheme.IMEX2)
    g = _cosine(grid)
    u1, u2 = solve_hj_pair(grid, quadratic_hamiltonian(), g, g, cfg)
    np.testing.assert_array_equal(u1.values, u2.values)
    exact = cole_hopf_solution(grid, g, 0.1, u1.times, 0.05)
    scale = np.max(np.abs(exact.values))
    assert np.max(np.abs(u1.values - exact.values)) / scale < 1e-3


def test_cole_hopf_needs_viscosity(grid1):
    with pytest.raises(LabError):
        cole_hopf_solution(grid1, _cosine(grid1), 0.0, np.array([0.0]), 0.1)


def test_adjoint_pair_pairing_identity(grid1):
    cfg = SolverConfig(epsilon=0.1, dt=1e-3, t_end=0.05, scheme=Scheme.IMEX_EULER)
    H = quadratic_hamiltonian()
    g1 = _cosine(grid1)
    g2 = g1 + 0.1 * np.sin(4 * np.pi * grid1.coordinates[0])
    result = solve_adjoint_pair(grid1, H, g1, g2, dual_density(grid1), cfg)
    assert len(result.rho) == len(result.u1)
    np.testing.assert_allclose(result.w.values, result.u1.values - result.u2.values)
    assert np.max(np.abs(result.mass - result.mass[0])) < 1e-10
    assert result.identity_error / result.identity_scale < 1e-5
    assert result.max_drift_speed > 0.0


def test_residual_needs_three_snapshots(grid1):
    cfg = SolverConfig(epsilon=1.0, dt=0.01, t_end=0.01)
    traj = solve(PDEKind.FOKKER_PLANCK, grid1, make_zero_drift(1), 1.0 + _cosine(grid1), cfg)
    with pytest.raises(SolverError):
        residual(PDEKind.FOKKER_PLANCK, traj, make_zero_drift(1), cfg)


def test_residual_shrinks_with_the_step(grid1):
    drift = make_zero_drift(1)
    data = 1.0 + _cosine(grid1)
    worst = []
    for dt in (1e-3, 5e-4):
        cfg = SolverConfig(epsilon=1.0, dt=dt, t_end=0.01, scheme=Scheme.IMEX2)
        traj = solve(PDEKind.FOKKER_PLANCK, grid1, drift, data, cfg)
        worst.append(float(np.max(residual(PDEKind.FOKKER_PLANCK, traj, drift, cfg))))
    assert worst[1] < worst[0]
