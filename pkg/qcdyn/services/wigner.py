"""Weyl symbols of hybrid fields on a periodic quantum grid.

For an odd number of quantum points n, 2 is invertible modulo n and the map
(j, m) -> (j + m, j - m) is a bijection of index pairs. The symbol at
(q2 = xi_j, p2 = p_k) is the FFT over the kernel separation r = 2m (mod n):

    A(q2_j, p2_k) = sum_r M[j + m_r, j - m_r] exp(-2 pi i k r / n),

the discrete counterpart of  int d eta A(q2 + eta/2, q2 - eta/2) exp(-i p eta / hbar)
with p_k = k * 2 pi hbar / L. The pair is exactly invertible, maps Hermitian
matrices to real symbols, and satisfies

    Tr(A D) = (2 pi hbar)^-1 sum dq2 dp2 A(q2, p2) D(q2, p2).
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from qcdyn.core.config import settings
from qcdyn.core.exceptions import ConfigurationError, GridMismatchError, NumericalConsistencyError, UnsupportedGridError
from qcdyn.services.hybrid_model import (
    ClassicalPhasePoint,
    HybridDensityField,
    HybridHamiltonian,
    Role,
    WaveFunction,
    uncorrelated_pure_state,
)
from qcdyn.utils.grids import PhaseSpaceGrid, SpatialGrid, require_same_grid

logger = logging.getLogger(__name__)


def require_wigner_grid(qgrid: SpatialGrid) -> None:
    if not qgrid.periodic:
        raise UnsupportedGridError(
            "the Wigner representation needs a periodic quantum grid", {"grid": qgrid.descriptor()}
        )
    if qgrid.n % 2 == 0:
        raise UnsupportedGridError(
            f"momentum axis is not commensurate with an FFT of even length {qgrid.n}; use an odd point count",
            {"n": qgrid.n},
        )


@lru_cache(maxsize=32)
def pair_indices(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row/column indices a[j, r], b[j, r] of the kernel entry behind symbol sample (j, r)."""
    inv2 = (n + 1) // 2
    m = (np.arange(n) * inv2) % n
    j = np.arange(n)[:, None]
    a = (j + m[None, :]) % n
    b = (j - m[None, :]) % n
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


@dataclass(frozen=True, eq=False)
class WignerField:
    """Symbol on the 4D grid (q1, p1, q2, p2); the p2 axis is ascending."""

    grid: PhaseSpaceGrid
    qgrid: SpatialGrid
    hbar: float
    data: np.ndarray
    role: Role = Role.STATE

    def __post_init__(self):
        require_wigner_grid(self.qgrid)
        data = np.asarray(self.data)
        expected = self.grid.shape + (self.qgrid.n, self.qgrid.n)
        if data.shape != expected:
            raise ConfigurationError(f"Wigner field shape {data.shape} != expected {expected}")
        data = np.array(data, copy=True)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "role", Role(self.role))

    @classmethod
    def state(cls, grid, qgrid, hbar, data) -> "WignerField":
        data = _realify(np.asarray(data), "Wigner state")
        field = cls(grid, qgrid, hbar, data, Role.STATE)
        total = field.normalization()
        if abs(total - 1.0) > settings.WIGNER_NORM_TOL:
            raise NumericalConsistencyError(
                f"Wigner state normalization {total!r} differs from 1", {"normalization": total}
            )
        return field

    @property
    def pgrid2(self) -> SpatialGrid:
        return self.qgrid.conjugate_momentum_grid(self.hbar)

    @property
    def quantum_cell(self) -> float:
        """dq2 dp2 / (2 pi hbar) = 1/n."""
        return self.qgrid.dx * self.pgrid2.dx / (2.0 * np.pi * self.hbar)

    def with_data(self, data, role: Optional[Role] = None) -> "WignerField":
        return WignerField(self.grid, self.qgrid, self.hbar, data, self.role if role is None else role)

    def weights(self) -> np.ndarray:
        """(2 pi hbar)^-1 w4 on the full 4D grid."""
        return self.grid.weights[:, :, None, None] * self.quantum_cell

    def normalization(self) -> float:
        return float(np.real(np.sum(self.weights() * self.data)))

    def mesh(self) -> Tuple[np.ndarray, ...]:
        return np.meshgrid(
            self.grid.q_grid.points, self.grid.p_grid.points, self.qgrid.points, self.pgrid2.points,
            indexing="ij", sparse=True,
        )

    def flatten(self) -> np.ndarray:
        return self.data.reshape(-1)

    def from_flat(self, vector: np.ndarray, role: Optional[Role] = None) -> "WignerField":
        return self.with_data(np.asarray(vector).reshape(self.data.shape), role)


def _realify(data: np.ndarray, label: str) -> np.ndarray:
    if not np.iscomplexobj(data):
        return data.astype(float)
    scale = max(float(np.abs(data).max()), 1e-300)
    residue = float(np.abs(data.imag).max())
    if residue > settings.HERMITIAN_TOL * scale:
        raise NumericalConsistencyError(
            f"{label} has imaginary residue {residue:.3e}", {"residue": residue, "scale": scale}
        )
    return data.real.copy()


def kernel_to_symbol(matrices: np.ndarray) -> np.ndarray:
    """Forward transform over the last two axes; returns complex symbols, p2 ascending."""
    n = matrices.shape[-1]
    a, b = pair_indices(n)
    v = matrices[..., a, b]
    return np.fft.fftshift(np.fft.fft(v, axis=-1), axes=-1)


def symbol_to_kernel(symbols: np.ndarray) -> np.ndarray:
    n = symbols.shape[-1]
    a, b = pair_indices(n)
    v = np.fft.ifft(np.fft.ifftshift(symbols, axes=-1), axis=-1)
    out = np.empty(symbols.shape, dtype=complex)
    out[..., a, b] = v
    return out


def wigner_transform(A: HybridDensityField, hbar: float = None) -> WignerField:
    hbar = settings.HBAR if hbar is None else hbar
    require_wigner_grid(A.qgrid)
    symbols = kernel_to_symbol(A.data)
    hermitian = float(A.hermitian_residual().max()) <= settings.HERMITIAN_TOL
    data = _realify(symbols, "symbol of a Hermitian field") if hermitian else symbols
    return WignerField(A.grid, A.qgrid, hbar, data, A.role)


def inverse_wigner_transform(W: WignerField) -> HybridDensityField:
    return HybridDensityField(W.grid, W.qgrid, symbol_to_kernel(np.asarray(W.data, dtype=complex)), W.role)


def mean_value_wigner(A: WignerField, D: WignerField, hbar: float = None) -> float:
    """(2 pi hbar)^-1 sum w4 A D."""
    hbar = D.hbar if hbar is None else hbar
    require_same_grid("mean_value_wigner", A.grid, D.grid)
    require_same_grid("mean_value_wigner", A.qgrid, D.qgrid)
    if not (np.isclose(A.hbar, hbar) and np.isclose(D.hbar, hbar)):
        raise GridMismatchError(
            "symbols were built for a different hbar", {"A": A.hbar, "D": D.hbar, "hbar": hbar}
        )
    value = np.sum(D.weights() * A.data * D.data)
    if np.iscomplexobj(value):
        tol = settings.MEAN_IMAG_TOL * max(abs(value.real), 1.0)
        if abs(value.imag) > tol:
            raise NumericalConsistencyError(f"Wigner mean value has imaginary residue {value.imag:.3e}")
    return float(np.real(value))


def wigner_of_pure_state(pgrid: PhaseSpaceGrid, x0: ClassicalPhasePoint, psi0: WaveFunction,
                         sigma: Optional[Tuple[float, float]] = None, hbar: float = None) -> WignerField:
    """G_sigma(x1 - x0) times the Wigner symbol of psi0, FFT over the kernel separation."""
    hbar = settings.HBAR if hbar is None else hbar
    require_wigner_grid(psi0.grid)
    D = uncorrelated_pure_state(pgrid, x0, psi0, sigma)
    symbols = kernel_to_symbol(D.data)
    field = WignerField.state(pgrid, psi0.grid, hbar, symbols)
    logger.debug(f"Wigner state built: min value {field.data.min():.3e}, max {field.data.max():.3e}")
    return field


def symbol_field(pgrid: PhaseSpaceGrid, qgrid: SpatialGrid, hbar: float,
                 symbol: Callable) -> WignerField:
    """Observable field from a function a(q1, p1, q2, p2) evaluated on the 4D grid."""
    template = WignerField(pgrid, qgrid, hbar, np.zeros(pgrid.shape + (qgrid.n, qgrid.n)), Role.OBSERVABLE)
    q1, p1, q2, p2 = template.mesh()
    values = np.broadcast_to(symbol(q1, p1, q2, p2), template.data.shape)
    return template.with_data(values)


def named_symbol(name: str, H: HybridHamiltonian) -> WignerField:
    """q_c, p_c, q_q, p_q as coordinate symbols; H as the exact discrete symbol of the Hamiltonian."""
    coords = {
        "q_c": lambda q1, p1, q2, p2: q1,
        "p_c": lambda q1, p1, q2, p2: p1,
        "q_q": lambda q1, p1, q2, p2: q2,
        "p_q": lambda q1, p1, q2, p2: p2,
    }
    if name in coords:
        return symbol_field(H.grid, H.qgrid, H.hbar, coords[name])
    if name == "H":
        return wigner_transform(H.as_observable(), H.hbar)
    raise ConfigurationError(f"unknown observable '{name}'", {"available": [*coords, "H"]})
