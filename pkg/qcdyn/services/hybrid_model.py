"""Hybrid states, observables, the Hamiltonian and the mean-value functional.

Operator-valued fields are stored as matrices in the orthonormal grid basis
e_j = delta_j / sqrt(w_j). A configuration-space kernel K(xi, xi') relates to
the stored matrix by M_ab = sqrt(w_a) K(xi_a, xi_b) sqrt(w_b), so the trace
Tr D(X) dxi of the kernel is the plain matrix trace, and the pairing
sum_X w Tr(A(X) D(X)) needs no further quadrature factors.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from qcdyn.core.config import settings
from qcdyn.core.exceptions import (
    NumericalConsistencyError,
    ResolutionError,
    RoleError,
    ConfigurationError,
)
from qcdyn.services.potentials import Potential
from qcdyn.utils.grids import PhaseSpaceGrid, SpatialGrid, require_same_grid
from qcdyn.utils.stencils import KineticScheme, DerivativeScheme, kinetic_matrix, momentum_matrix

logger = logging.getLogger(__name__)


class Role(str, Enum):
    STATE = "state"
    OBSERVABLE = "observable"


@dataclass(frozen=True)
class ClassicalPhasePoint:
    q: float
    p: float


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: SpatialGrid
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.shape != (self.grid.n,):
            raise ConfigurationError(
                f"wave function needs {self.grid.n} amplitudes, got shape {amplitudes.shape}"
            )
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))
        norm = self.norm()
        if abs(norm - 1.0) > settings.WAVEFUNCTION_NORM_TOL:
            raise NumericalConsistencyError(
                f"wave function norm {norm!r} differs from 1",
                {"norm": norm, "tolerance": settings.WAVEFUNCTION_NORM_TOL},
            )

    @classmethod
    def from_samples(cls, grid: SpatialGrid, samples, normalize: bool = True) -> "WaveFunction":
        samples = np.asarray(samples, dtype=complex)
        if normalize:
            samples = samples / np.sqrt(grid.integrate(np.abs(samples) ** 2))
        return cls(grid, samples)

    @classmethod
    def gaussian(cls, grid: SpatialGrid, center: float, width: float, momentum: float = 0.0,
                 hbar: float = None) -> "WaveFunction":
        hbar = settings.HBAR if hbar is None else hbar
        x = grid.points
        samples = np.exp(-((x - center) ** 2) / (4.0 * width ** 2) + 1j * momentum * x / hbar)
        return cls.from_samples(grid, samples)

    def norm(self) -> float:
        return float(self.grid.integrate(np.abs(self.amplitudes) ** 2))

    def coefficients(self) -> np.ndarray:
        """Components in the orthonormal grid basis."""
        return self.amplitudes * np.sqrt(self.grid.weights)

    @classmethod
    def from_coefficients(cls, grid: SpatialGrid, coefficients: np.ndarray) -> "WaveFunction":
        return cls(grid, np.asarray(coefficients) / np.sqrt(grid.weights))

    def projector(self) -> np.ndarray:
        c = self.coefficients()
        return np.outer(c, c.conj())

    def mean_position(self) -> float:
        return float(self.grid.integrate(self.grid.points * np.abs(self.amplitudes) ** 2))

    def mean_momentum(self, hbar: float = None,
                      scheme: DerivativeScheme = DerivativeScheme.SPECTRAL) -> float:
        hbar = settings.HBAR if hbar is None else hbar
        c = self.coefficients()
        return float(np.real(c.conj() @ momentum_matrix(self.grid, hbar, scheme) @ c))


@dataclass(frozen=True, eq=False)
class ClassicalDistribution:
    grid: PhaseSpaceGrid
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(np.asarray(self.data, dtype=float)))
        if self.data.shape != self.grid.shape:
            raise ConfigurationError(f"classical field shape {self.data.shape} != grid {self.grid.shape}")

    @classmethod
    def create(cls, grid: PhaseSpaceGrid, data) -> "ClassicalDistribution":
        dist = cls(grid, data)
        if np.any(dist.data < 0.0):
            raise NumericalConsistencyError("classical distribution must be nonnegative")
        total = dist.normalization()
        if abs(total - 1.0) > settings.NORM_TOL:
            raise NumericalConsistencyError(f"classical distribution normalization {total!r} != 1")
        return dist

    def normalization(self) -> float:
        return float(np.sum(self.grid.weights * self.data))

    def mean(self, values: np.ndarray) -> float:
        return float(np.sum(self.grid.weights * self.data * values))

    def mean_q(self) -> float:
        return self.mean(self.grid.mesh[0])

    def mean_p(self) -> float:
        return self.mean(self.grid.mesh[1])


@dataclass(frozen=True, eq=False)
class HybridDensityField:
    """D(X; xi, xi') or A(X; xi, xi'): an n x n matrix at every classical grid point."""

    grid: PhaseSpaceGrid
    qgrid: SpatialGrid
    data: np.ndarray
    role: Role = Role.STATE

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        expected = self.grid.shape + (self.qgrid.n, self.qgrid.n)
        if data.shape != expected:
            raise ConfigurationError(f"hybrid field shape {data.shape} != expected {expected}")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "role", Role(self.role))

    @classmethod
    def state(cls, grid: PhaseSpaceGrid, qgrid: SpatialGrid, data) -> "HybridDensityField":
        field = cls(grid, qgrid, data, Role.STATE)
        field.check_hermitian()
        total = field.normalization()
        if abs(total - 1.0) > settings.NORM_TOL:
            raise NumericalConsistencyError(
                f"state normalization {total!r} differs from 1",
                {"normalization": total, "tolerance": settings.NORM_TOL},
            )
        return field

    @classmethod
    def observable(cls, grid: PhaseSpaceGrid, qgrid: SpatialGrid, data) -> "HybridDensityField":
        field = cls(grid, qgrid, data, Role.OBSERVABLE)
        field.check_hermitian()
        return field

    def with_data(self, data, role: Optional[Role] = None) -> "HybridDensityField":
        return HybridDensityField(self.grid, self.qgrid, data, self.role if role is None else role)

    def hermitian_residual(self) -> np.ndarray:
        """Per-point max |M - M^dagger| relative to max |M|."""
        residual = np.abs(self.data - np.conj(np.swapaxes(self.data, -1, -2))).max(axis=(-2, -1))
        scale = np.abs(self.data).max(axis=(-2, -1))
        return np.where(scale > 0.0, residual / np.where(scale > 0.0, scale, 1.0), residual)

    def check_hermitian(self, tol: float = None) -> None:
        tol = settings.HERMITIAN_TOL if tol is None else tol
        worst = float(self.hermitian_residual().max())
        if worst > tol:
            raise NumericalConsistencyError(
                f"field is not Hermitian (relative residual {worst:.3e})",
                {"residual": worst, "tolerance": tol},
            )

    def symmetrized(self) -> Tuple["HybridDensityField", float]:
        """(D + D^dagger)/2 and the max-entry size of the correction."""
        sym = 0.5 * (self.data + np.conj(np.swapaxes(self.data, -1, -2)))
        return self.with_data(sym), float(np.abs(sym - self.data).max())

    def traces(self) -> np.ndarray:
        return np.trace(self.data, axis1=-2, axis2=-1)

    def normalization(self) -> float:
        return float(np.real(np.sum(self.grid.weights * self.traces())))

    def hs_norm(self) -> float:
        """Weighted Hilbert-Schmidt norm sqrt(sum_X w Tr(M M^dagger))."""
        return float(np.sqrt(np.sum(self.grid.weights[..., None, None] * np.abs(self.data) ** 2)))

    def flatten(self) -> np.ndarray:
        return self.data.reshape(-1)

    def from_flat(self, vector: np.ndarray, role: Optional[Role] = None) -> "HybridDensityField":
        return self.with_data(np.asarray(vector).reshape(self.data.shape), role)


@dataclass(frozen=True, eq=False)
class HybridHamiltonian:
    grid: PhaseSpaceGrid
    qgrid: SpatialGrid
    potential: Potential
    hbar: float
    h_c: np.ndarray
    h_q: np.ndarray
    h_int: np.ndarray
    kinetic_scheme: KineticScheme = KineticScheme.FINITE_DIFFERENCE

    def as_observable(self) -> HybridDensityField:
        n = self.qgrid.n
        data = (
            self.h_c[:, :, None, None] * np.eye(n)
            + self.h_q[None, None, :, :]
            + (self.h_int[:, None, :, None] * np.eye(n))
        )
        return HybridDensityField(self.grid, self.qgrid, data, Role.OBSERVABLE)

    def quantum_matrix(self, q_index: int) -> np.ndarray:
        return self.h_q + np.diag(self.h_int[q_index])

    def interaction_derivative(self) -> np.ndarray:
        """dU/dq at every (q, xi_j), shape (n_q, n)."""
        q = self.grid.q_grid.points[:, None]
        return self.potential.d_dq(q, self.qgrid.points[None, :])

    def energy_spread(self) -> float:
        """Largest eigenvalue spread of the quantum block over classical points."""
        spreads = []
        for a in range(self.grid.q_grid.n):
            evals = np.linalg.eigvalsh(self.quantum_matrix(a))
            spreads.append(evals[-1] - evals[0])
        return float(max(spreads))


def build_hamiltonian(pgrid: PhaseSpaceGrid, qgrid: SpatialGrid, phi: Potential, hbar: float = None,
                      kinetic_scheme: KineticScheme = KineticScheme.FINITE_DIFFERENCE) -> HybridHamiltonian:
    hbar = settings.HBAR if hbar is None else hbar
    if hbar <= 0:
        raise ConfigurationError(f"hbar must be positive, got {hbar}")
    q = pgrid.q_grid.points
    xi = qgrid.points
    phi.check_range(float(q.min() - xi.max()), float(q.max() - xi.min()))

    q_mesh, p_mesh = pgrid.mesh
    h_c = 0.5 * p_mesh ** 2
    h_q = kinetic_matrix(qgrid, hbar, kinetic_scheme)
    h_int = np.asarray(phi.energy(q[:, None], xi[None, :]), dtype=float)

    hermitian_gap = np.abs(h_q - h_q.conj().T).max()
    if hermitian_gap > 1e-12 * max(np.abs(h_q).max(), 1.0):
        raise NumericalConsistencyError(f"kinetic matrix is not Hermitian ({hermitian_gap:.3e})")

    logger.info(
        f"Built Hamiltonian: classical {pgrid.shape}, quantum n={qgrid.n}, "
        f"potential={phi.kind}, kinetic={KineticScheme(kinetic_scheme).value}, hbar={hbar}"
    )
    return HybridHamiltonian(
        grid=pgrid,
        qgrid=qgrid,
        potential=phi,
        hbar=hbar,
        h_c=_frozen(h_c),
        h_q=_frozen(h_q),
        h_int=_frozen(h_int),
        kinetic_scheme=KineticScheme(kinetic_scheme),
    )


def _require_role(field: HybridDensityField, role: Role, operation: str) -> None:
    if field.role is not role:
        raise RoleError(
            f"{operation} expects a {role.value} field, got {field.role.value}",
            {"operation": operation},
        )


def marginal_classical(D: HybridDensityField) -> ClassicalDistribution:
    _require_role(D, Role.STATE, "marginal_classical")
    return ClassicalDistribution(D.grid, np.real(D.traces()))


def marginal_quantum(D: HybridDensityField) -> np.ndarray:
    _require_role(D, Role.STATE, "marginal_quantum")
    rho = np.einsum("qp,qpij->ij", D.grid.weights, D.data)
    return 0.5 * (rho + rho.conj().T)


def correlation(D: HybridDensityField) -> HybridDensityField:
    """g(X) = D(X) - D_c(X) rho."""
    _require_role(D, Role.STATE, "correlation")
    d_c = marginal_classical(D).data
    rho = marginal_quantum(D)
    g = D.data - d_c[:, :, None, None] * rho[None, None, :, :]
    return D.with_data(g, Role.OBSERVABLE)


def pairing(A: HybridDensityField, D: HybridDensityField) -> complex:
    """Bilinear form sum_X w Tr(A(X) D(X)) without role or residue checks."""
    require_same_grid("pairing", A.grid, D.grid)
    require_same_grid("pairing", A.qgrid, D.qgrid)
    # Tr(AD) = sum_ij A_ij D_ji
    per_point = np.einsum("qpij,qpji->qp", A.data, D.data)
    return complex(np.sum(A.grid.weights * per_point))


def mean_value(A: HybridDensityField, D: HybridDensityField) -> float:
    _require_role(A, Role.OBSERVABLE, "mean_value")
    _require_role(D, Role.STATE, "mean_value")
    value = pairing(A, D)
    tol = settings.MEAN_IMAG_TOL * max(abs(value.real), 1.0)
    if abs(value.imag) > tol:
        raise NumericalConsistencyError(
            f"mean value has imaginary residue {value.imag:.3e}",
            {"real": value.real, "imag": value.imag, "tolerance": tol},
        )
    return float(value.real)


def total_energy(D: HybridDensityField, H: HybridHamiltonian) -> float:
    return mean_value(H.as_observable(), D)


def phase_space_gaussian(pgrid: PhaseSpaceGrid, x0: ClassicalPhasePoint,
                         sigma: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """Normalized Gaussian G_sigma(X - X0) standing in for the Dirac measure."""
    if sigma is None:
        sigma = (settings.SMEARING_CELLS * pgrid.dq, settings.SMEARING_CELLS * pgrid.dp)
    sigma_q, sigma_p = sigma
    min_cells = settings.MIN_SMEARING_CELLS
    if sigma_q < min_cells * pgrid.dq * (1 - 1e-12) or sigma_p < min_cells * pgrid.dp * (1 - 1e-12):
        raise ResolutionError(
            f"smearing ({sigma_q}, {sigma_p}) is narrower than {min_cells} grid cells",
            {"sigma": (sigma_q, sigma_p), "cells": (pgrid.dq, pgrid.dp)},
        )
    q, p = pgrid.mesh
    g = np.exp(-((q - x0.q) ** 2) / (2.0 * sigma_q ** 2) - ((p - x0.p) ** 2) / (2.0 * sigma_p ** 2))
    return g / np.sum(pgrid.weights * g)


def uncorrelated_pure_state(pgrid: PhaseSpaceGrid, x0: ClassicalPhasePoint, psi0: WaveFunction,
                            sigma: Optional[Tuple[float, float]] = None) -> HybridDensityField:
    """D(X) = G_sigma(X - X0) P_psi0."""
    g = phase_space_gaussian(pgrid, x0, sigma)
    data = g[:, :, None, None] * psi0.projector()[None, None, :, :]
    return HybridDensityField.state(pgrid, psi0.grid, data)


def product_state(dist: ClassicalDistribution, rho: np.ndarray, qgrid: SpatialGrid) -> HybridDensityField:
    data = dist.data[:, :, None, None] * np.asarray(rho)[None, None, :, :]
    return HybridDensityField.state(dist.grid, qgrid, data)


def classical_observable(pgrid: PhaseSpaceGrid, qgrid: SpatialGrid, values: np.ndarray) -> HybridDensityField:
    """a(X) times the identity."""
    data = np.asarray(values)[:, :, None, None] * np.eye(qgrid.n)
    return HybridDensityField(pgrid, qgrid, data, Role.OBSERVABLE)


def quantum_observable(pgrid: PhaseSpaceGrid, qgrid: SpatialGrid, matrix: np.ndarray) -> HybridDensityField:
    data = np.broadcast_to(np.asarray(matrix), pgrid.shape + matrix.shape)
    return HybridDensityField(pgrid, qgrid, data, Role.OBSERVABLE)


def named_observable(name: str, H: HybridHamiltonian,
                     momentum_scheme: DerivativeScheme = DerivativeScheme.SPECTRAL) -> HybridDensityField:
    """q_c, p_c, q_q, p_q or H as a configuration-representation observable."""
    pgrid, qgrid = H.grid, H.qgrid
    q_mesh, p_mesh = pgrid.mesh
    if name == "q_c":
        return classical_observable(pgrid, qgrid, q_mesh)
    if name == "p_c":
        return classical_observable(pgrid, qgrid, p_mesh)
    if name == "q_q":
        return quantum_observable(pgrid, qgrid, np.diag(qgrid.points).astype(complex))
    if name == "p_q":
        if not qgrid.periodic:
            momentum_scheme = DerivativeScheme.CENTRAL
        return quantum_observable(pgrid, qgrid, momentum_matrix(qgrid, H.hbar, momentum_scheme))
    if name == "H":
        return H.as_observable()
    raise ConfigurationError(f"unknown observable '{name}'", {"available": ["q_c", "p_c", "q_q", "p_q", "H"]})
