"""Derivative stencils and operator matrices on uniform grids.

Central differences wrap on periodic axes and fall back to one-sided
second-order edges on bounded ones. Spectral variants need periodic axes.
"""
from enum import Enum

import numpy as np

from qcdyn.core.exceptions import UnsupportedGridError
from qcdyn.utils.grids import SpatialGrid


class DerivativeScheme(str, Enum):
    CENTRAL = "central"
    SPECTRAL = "spectral"


class KineticScheme(str, Enum):
    FINITE_DIFFERENCE = "finite_difference"
    SPECTRAL = "spectral"


def _require_periodic(grid: SpatialGrid, what: str) -> None:
    if not grid.periodic:
        raise UnsupportedGridError(f"{what} requires a periodic grid", {"grid": grid.descriptor()})


def derivative(values: np.ndarray, grid: SpatialGrid, axis: int,
               scheme: DerivativeScheme = DerivativeScheme.CENTRAL) -> np.ndarray:
    scheme = DerivativeScheme(scheme)
    if scheme is DerivativeScheme.SPECTRAL:
        _require_periodic(grid, "spectral differentiation")
        shape = [1] * values.ndim
        shape[axis] = grid.n
        k = grid.wavenumbers.reshape(shape)
        if grid.n % 2 == 0:
            # Nyquist mode has no odd partner
            k = k.copy()
            np.put(k, [grid.n // 2], 0.0)
        out = np.fft.ifft(1j * k * np.fft.fft(values, axis=axis), axis=axis)
        return out if np.iscomplexobj(values) else out.real

    if grid.periodic:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * grid.dx)
    return np.gradient(values, grid.dx, axis=axis, edge_order=2)


def kinetic_dispersion(grid: SpatialGrid, hbar: float, scheme: KineticScheme) -> np.ndarray:
    """Eigenvalues of the periodic kinetic matrix, FFT order."""
    _require_periodic(grid, "kinetic dispersion")
    k = grid.wavenumbers
    if KineticScheme(scheme) is KineticScheme.SPECTRAL:
        return 0.5 * (hbar * k) ** 2
    return (hbar ** 2 / grid.dx ** 2) * (1.0 - np.cos(k * grid.dx))


def kinetic_matrix(grid: SpatialGrid, hbar: float,
                   scheme: KineticScheme = KineticScheme.FINITE_DIFFERENCE) -> np.ndarray:
    """Matrix of -(hbar^2/2) d^2/dx^2 in the orthonormal grid basis."""
    scheme = KineticScheme(scheme)
    n = grid.n
    if scheme is KineticScheme.SPECTRAL:
        _require_periodic(grid, "spectral kinetic term")
        return _circulant_from_dispersion(kinetic_dispersion(grid, hbar, scheme)).real

    lap = -2.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)
    if grid.periodic:
        lap[0, -1] = lap[-1, 0] = 1.0
    return -(hbar ** 2) / (2.0 * grid.dx ** 2) * lap


def momentum_matrix(grid: SpatialGrid, hbar: float,
                    scheme: DerivativeScheme = DerivativeScheme.SPECTRAL) -> np.ndarray:
    """Matrix of -i*hbar d/dx in the orthonormal grid basis."""
    scheme = DerivativeScheme(scheme)
    n = grid.n
    if scheme is DerivativeScheme.SPECTRAL:
        _require_periodic(grid, "spectral momentum operator")
        k = grid.wavenumbers.copy()
        if n % 2 == 0:
            k[n // 2] = 0.0
        return _circulant_from_dispersion(hbar * k)
    d = (np.eye(n, k=1) - np.eye(n, k=-1)) / (2.0 * grid.dx)
    if grid.periodic:
        d[0, -1] = -1.0 / (2.0 * grid.dx)
        d[-1, 0] = 1.0 / (2.0 * grid.dx)
    return -1j * hbar * d


def _circulant_from_dispersion(values: np.ndarray) -> np.ndarray:
    n = values.size
    # M[a, b] = (1/n) sum_k f(k) exp(2*pi*i*k*(a-b)/n)
    column = np.fft.ifft(values)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    matrix = column[idx]
    # real dispersion: Hermitian up to roundoff
    return 0.5 * (matrix + matrix.conj().T)
