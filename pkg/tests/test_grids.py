import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from qcdyn.core.exceptions import ConfigurationError, GridMismatchError, UnsupportedGridError
from qcdyn.utils.grids import Boundary, PhaseSpaceGrid, SpatialGrid, require_same_grid
from qcdyn.utils.stencils import (
    DerivativeScheme,
    KineticScheme,
    derivative,
    kinetic_dispersion,
    kinetic_matrix,
    momentum_matrix,
)


def test_periodic_grid_excludes_right_end():
    grid = SpatialGrid(-1.0, 1.0, 4)
    assert grid.dx == pytest.approx(0.5)
    np.testing.assert_allclose(grid.points, [-1.0, -0.5, 0.0, 0.5])
    assert grid.integrate(np.ones(4)) == pytest.approx(2.0)


def test_bounded_grid_uses_trapezoid_weights():
    grid = SpatialGrid(0.0, 1.0, 5, Boundary.BOUNDED)
    assert grid.points[-1] == pytest.approx(1.0)
    assert grid.weights[0] == pytest.approx(0.125)
    # trapezoid is exact for linear functions
    assert grid.integrate(grid.points) == pytest.approx(0.5)


@pytest.mark.parametrize("args", [(1.0, 1.0, 4), (0.0, 1.0, 1), (2.0, 1.0, 8)])
def test_degenerate_grids_are_rejected(args):
    with pytest.raises(ConfigurationError):
        SpatialGrid(*args)


def test_grids_are_compared_by_value():
    a = PhaseSpaceGrid(SpatialGrid(-1.0, 1.0, 4), SpatialGrid(-2.0, 2.0, 6))
    b = PhaseSpaceGrid(SpatialGrid(-1.0, 1.0, 4), SpatialGrid(-2.0, 2.0, 6))
    assert a == b and a.digest() == b.digest()
    require_same_grid("test", a, b)
    with pytest.raises(GridMismatchError):
        require_same_grid("test", a, PhaseSpaceGrid(SpatialGrid(-1.0, 1.0, 4), SpatialGrid(-2.0, 2.0, 8)))


def test_conjugate_momentum_grid_is_centred():
    grid = SpatialGrid(-4.0, 4.0, 9)
    p = grid.conjugate_momentum_grid(hbar=1.0)
    assert p.dx == pytest.approx(2 * np.pi / 8.0)
    assert p.points[4] == pytest.approx(0.0)
    np.testing.assert_allclose(p.points, -p.points[::-1], atol=1e-12)


def test_central_derivative_is_second_order():
    errors = []
    for n in (32, 64):
        grid = SpatialGrid(0.0, 2 * np.pi, n)
        x = grid.points
        errors.append(np.abs(derivative(np.sin(x), grid, 0) - np.cos(x)).max())
    assert 3.5 < errors[0] / errors[1] < 4.5


def test_spectral_derivative_is_exact_for_band_limited_data():
    grid = SpatialGrid(0.0, 2 * np.pi, 16)
    x = grid.points
    values = np.stack([np.sin(2 * x), np.cos(3 * x)])
    out = derivative(values, grid, 1, DerivativeScheme.SPECTRAL)
    np.testing.assert_allclose(out, np.stack([2 * np.cos(2 * x), -3 * np.sin(3 * x)]), atol=1e-10)


def test_spectral_schemes_need_periodic_axes():
    grid = SpatialGrid(0.0, 1.0, 8, Boundary.BOUNDED)
    with pytest.raises(UnsupportedGridError):
        derivative(np.zeros(8), grid, 0, DerivativeScheme.SPECTRAL)
    with pytest.raises(UnsupportedGridError):
        kinetic_matrix(grid, 1.0, KineticScheme.SPECTRAL)


def test_kinetic_schemes_agree_on_a_gaussian_to_second_order():
    exact_errors = []
    for n in (64, 128):
        grid = SpatialGrid(-10.0, 10.0, n)
        x = grid.points
        psi = np.exp(-x ** 2 / 2)
        exact = -0.5 * (x ** 2 - 1.0) * psi
        fd = kinetic_matrix(grid, 1.0, KineticScheme.FINITE_DIFFERENCE) @ psi
        spectral = kinetic_matrix(grid, 1.0, KineticScheme.SPECTRAL) @ psi
        assert np.abs(spectral - exact).max() < 1e-8
        exact_errors.append(np.abs(fd - exact).max())
    assert 3.5 < exact_errors[0] / exact_errors[1] < 4.5


def test_periodic_kinetic_matrix_matches_its_dispersion():
    grid = SpatialGrid(-3.0, 3.0, 7)
    h = kinetic_matrix(grid, 0.7, KineticScheme.FINITE_DIFFERENCE)
    np.testing.assert_allclose(
        np.sort(np.linalg.eigvalsh(h)), np.sort(kinetic_dispersion(grid, 0.7, KineticScheme.FINITE_DIFFERENCE)),
        atol=1e-12,
    )


@given(st.integers(min_value=2, max_value=24), st.sampled_from(list(Boundary)))
def test_operator_matrices_are_hermitian(n, boundary):
    grid = SpatialGrid(-2.0, 3.0, n, boundary)
    h = kinetic_matrix(grid, 1.0)
    p = momentum_matrix(grid, 1.0, DerivativeScheme.CENTRAL)
    assert np.abs(h - h.conj().T).max() <= 1e-12 * max(np.abs(h).max(), 1.0)
    assert np.abs(p - p.conj().T).max() <= 1e-12 * max(np.abs(p).max(), 1.0)
