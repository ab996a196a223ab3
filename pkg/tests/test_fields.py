"""Drift families, Hamiltonians and the linearized drift."""

import math

import numpy as np
import pytest

from src.systems.errors import InadmissibleExponentError, LabError
from src.systems.fields import (
    LinearizedDrift,
    TrigPolynomial,
    custom_hamiltonian,
    divergence_of_linearized_drift,
    fejer_profile,
    gauss_legendre_unit,
    half_plane_modes,
    lrlq_closed_form_mixed_norm,
    lrlq_time_factor,
    lrlq_time_integral,
    make_divfree_drift,
    make_LrLq_drift,
    make_one_sided_singular_drift,
    make_zero_drift,
    power_hamiltonian,
    quadratic_hamiltonian,
)
from src.systems.grid import Grid, Trajectory, time_lr_norm


def test_half_plane_modes():
    assert half_plane_modes(1, 3).tolist() == [[1], [2], [3]]
    modes = half_plane_modes(2, 2)
    assert len(modes) == 12
    assert not any((-m).tolist() in modes.tolist() for m in modes)


def test_trig_polynomial_derivatives(grid2):
    rng = np.random.default_rng(1)
    modes = half_plane_modes(2, 2)
    poly = TrigPolynomial(modes, rng.standard_normal(len(modes)), rng.standard_normal(len(modes)))
    coords = grid2.coordinates
    values = poly.value(coords)
    np.testing.assert_allclose(poly.gradient(coords), grid2.gradient_array(values), atol=1e-9)
    np.testing.assert_allclose(poly.laplacian(coords), grid2.laplacian_array(values), atol=1e-8)
    np.testing.assert_allclose(poly.inverse_laplacian().laplacian(coords), values, atol=1e-10)


def test_fejer_profile_extremes():
    grid = Grid(1, 64)
    chi = fejer_profile(1, 8, [0.25]).value(grid.coordinates)
    assert chi.max() == pytest.approx(1.0)
    assert chi[16] == pytest.approx(1.0)
    assert chi.min() >= -1.0 / 7 - 1e-12


def test_zero_drift():
    drift = make_zero_drift(2)
    grid = Grid(2, 8)
    assert drift.max_speed(grid, 0.3) == 0.0
    assert {"divergence_free", "bounded"} <= drift.tags
    assert not drift.singular_at_zero


@pytest.mark.parametrize("dim", [1, 2])
def test_divergence_free_drift(dim):
    grid = Grid(dim, 16)
    drift = make_divfree_drift(grid, seed=4, amplitude=0.5)
    assert drift.record.max_divergence_error <= 1e-8
    np.testing.assert_allclose(grid.divergence_array(drift.velocity(grid, 0.2)), 0.0, atol=1e-10)
    assert drift.max_speed(grid, 0.0) > 0.0


def test_lrlq_time_profile():
    assert lrlq_time_factor(0.25, 2.0, 0.5) == pytest.approx(0.25 ** -0.25)
    assert lrlq_time_factor(0.25, math.inf, 0.5) == 1.0
    assert lrlq_time_factor(0.25, 2.0, 1.0) == 1.0
    # integral of t^{-(1-m)} over [0, 1] is 1/m
    assert lrlq_time_integral(0.0, 1.0, 2.0, 0.5) == pytest.approx(math.sqrt(2.0))


def test_lrlq_drift_matches_its_closed_form_norm():
    grid = Grid(1, 32)
    drift = make_LrLq_drift(grid, 2, 2, margin=0.5, seed=1, t_start=0.01, t_end=0.2)
    assert drift.kind == "lrlq"
    assert "divb_LrLq" in drift.tags and drift.singular_at_zero
    assert drift.params["q"] == "2" and drift.params["r"] == "2"
    times = np.linspace(0.01, 0.2, 4001)
    measured = time_lr_norm(times, drift.divergence_series(grid, times, 2), 2)
    closed = lrlq_closed_form_mixed_norm(drift, 0.01, 0.2)
    assert closed == pytest.approx(drift.record.closed_form_mixed_norm)
    assert measured == pytest.approx(closed, rel=1e-3)
    from_zero = lrlq_closed_form_mixed_norm(drift, 0.0, 0.2)
    assert drift.record.closed_form_mixed_norm_from_zero == pytest.approx(from_zero)
    assert from_zero > closed


def test_lrlq_drift_is_not_singular_at_full_margin():
    drift = make_LrLq_drift(Grid(1, 16), 2, 2, margin=1.0, seed=0)
    assert not drift.singular_at_zero


def test_lrlq_drift_rejects_inadmissible_pairs():
    with pytest.raises(InadmissibleExponentError):
        make_LrLq_drift(Grid(1, 16), 2, 4)
    with pytest.raises(ValueError):
        make_LrLq_drift(Grid(1, 16), 2, 2, margin=0.0)


def test_one_sided_drift_attains_its_bound():
    grid = Grid(1, 64)
    drift = make_one_sided_singular_drift(grid, c1=1.0, c2=0.5, seed=2)
    assert drift.singular_at_zero
    assert drift.record.one_sided_max_excess <= 1e-8
    for t in (0.01, 0.1, 0.5):
        bound = drift.one_sided_bound(t)
        assert bound == pytest.approx(1.0 / t + 0.5)
        negative = np.maximum(-drift.divergence(grid, t), 0.0)
        assert negative.max() == pytest.approx(bound, rel=1e-12)


def test_one_sided_drift_without_bound_is_divergence_free():
    drift = make_one_sided_singular_drift(Grid(1, 16), c1=0.0, c2=0.0)
    assert "divergence_free" in drift.tags
    assert drift.one_sided_bound(0.3) == 0.0
    with pytest.raises(ValueError):
        make_one_sided_singular_drift(Grid(1, 16), c1=-1.0)


def test_quadratic_hamiltonian():
    H = quadratic_hamiltonian()
    p = np.array([[1.0, 2.0]])
    np.testing.assert_allclose(H.value(p), [0.5, 2.0])
    np.testing.assert_allclose(H.gradient(p), p)
    assert H.ellipticity_bounds(1, 10.0) == (1.0, 1.0)


def test_power_hamiltonian_derivatives():
    H = power_hamiltonian(3.0)
    p = np.array([[0.3, -1.2]])
    h = 1e-6
    numeric = (H.value(p + h) - H.value(p - h)) / (2 * h)
    np.testing.assert_allclose(H.gradient(p)[0], numeric, rtol=1e-6)
    numeric_hess = (H.gradient(p + h)[0] - H.gradient(p - h)[0]) / (2 * h)
    np.testing.assert_allclose(H.hessian(p)[0, 0], numeric_hess, rtol=1e-6)
    low, high = H.ellipticity_bounds(1, 2.0)
    assert 0 < low <= high
    with pytest.raises(ValueError):
        power_hamiltonian(1.0)


def test_custom_hamiltonian_reproduces_the_quadratic():
    H = custom_hamiltonian("s/2")
    p = np.array([[1.0, -2.0, 0.0], [0.5, 1.0, 3.0]])
    quad = quadratic_hamiltonian()
    np.testing.assert_allclose(H.value(p), quad.value(p))
    np.testing.assert_allclose(H.gradient(p), quad.gradient(p))
    np.testing.assert_allclose(H.hessian(p), quad.hessian(p))
    low, high = H.ellipticity_bounds(2, 3.0)
    assert low == pytest.approx(1.0) and high == pytest.approx(1.0)


def test_custom_hamiltonian_derivatives():
    H = custom_hamiltonian("sqrt(1 + s)")
    p = np.array([[0.3, -1.2, 2.0]])
    h = 1e-6
    numeric = (H.value(p + h) - H.value(p - h)) / (2 * h)
    np.testing.assert_allclose(H.gradient(p)[0], numeric, rtol=1e-6)
    numeric_hess = (H.gradient(p + h)[0] - H.gradient(p - h)[0]) / (2 * h)
    np.testing.assert_allclose(H.hessian(p)[0, 0], numeric_hess, rtol=1e-6)
    low, high = H.ellipticity_bounds(1, 2.0)
    assert 0 < low <= high <= 1.0


@pytest.mark.parametrize("expression", ["s +", "s * q", "import os", ""])
def test_custom_hamiltonian_rejects_bad_expressions(expression):
    with pytest.raises(LabError):
        custom_hamiltonian(expression)


def test_gauss_legendre_unit():
    nodes, weights = gauss_legendre_unit(4)
    assert weights.sum() == pytest.approx(1.0)
    assert np.sum(weights * nodes ** 3) == pytest.approx(0.25)


def _pair(grid, amplitude=1.0):
    x = grid.coordinates[0]
    times = np.array([0.0, 0.1])
    u1 = Trajectory(grid, times, np.stack([amplitude * np.sin(2 * np.pi * x)] * 2), "u1")
    u2 = Trajectory(grid, times, np.stack([0.5 * amplitude * np.cos(2 * np.pi * x)] * 2), "u2")
    return u1, u2


def test_linearized_drift_for_quadratic_hamiltonian(grid1):
    u1, u2 = _pair(grid1)
    ld = LinearizedDrift(u1, u2, quadratic_hamiltonian())
    expected = -0.5 * (grid1.gradient_array(u1.values[0]) + grid1.gradient_array(u2.values[0]))
    np.testing.assert_allclose(ld.velocity(0.05), expected, atol=1e-12)
    minus_div = divergence_of_linearized_drift(ld, 0.05)
    np.testing.assert_allclose(minus_div.values, -grid1.divergence_array(expected), atol=1e-9)


def test_linearized_drift_divergence_for_power_hamiltonian():
    grid = Grid(1, 128)
    u1, u2 = _pair(grid, amplitude=0.1)
    ld = LinearizedDrift(u1, u2, power_hamiltonian(3.0), nodes=12)
    sampled = -grid.divergence_array(ld.velocity(0.0))
    np.testing.assert_allclose(ld.minus_divergence(0.0), sampled, atol=1e-6 * np.abs(sampled).max())


def test_linearized_drift_needs_one_grid(grid1):
    u1, _ = _pair(grid1)
    _, u2 = _pair(Grid(1, 64))
    with pytest.raises(LabError):
        LinearizedDrift(u1, u2, quadratic_hamiltonian())
