"""The quantum-classical Liouville generator L in both representations.

    L A = -(i/hbar) [A, H] + (1/2) ({A, H} - {H, A})

For the two-particle model this is, at every classical point (q, p),

    L A = -(i/hbar) (A H_q(q) - H_q(q) A) + p dA/dq - (1/2) (F(q) dA/dp + dA/dp F(q)),

with H_q(q) = h_q + diag U(q, xi_j) and F(q) = diag dU/dq(q, xi_j). Observables
evolve with dA/dt = +L A, states with dD/dt = -L A.
"""
import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from qcdyn.core.config import settings
from qcdyn.core.exceptions import ConfigurationError, NumericalConsistencyError, OracleSizeError
from qcdyn.services.hybrid_model import HybridDensityField, HybridHamiltonian
from qcdyn.services.wigner import WignerField, named_symbol, pair_indices, require_wigner_grid
from qcdyn.utils.grids import require_same_grid
from qcdyn.utils.stencils import DerivativeScheme, derivative, kinetic_dispersion

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GeneratorConfigRep:
    hamiltonian: HybridHamiltonian
    q_scheme: DerivativeScheme = DerivativeScheme.CENTRAL
    p_scheme: DerivativeScheme = DerivativeScheme.CENTRAL
    force: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "q_scheme", DerivativeScheme(self.q_scheme))
        object.__setattr__(self, "p_scheme", DerivativeScheme(self.p_scheme))
        grid = self.hamiltonian.grid
        for scheme, axis, label in ((self.q_scheme, grid.q_grid, "q"), (self.p_scheme, grid.p_grid, "p")):
            if scheme is DerivativeScheme.SPECTRAL and not axis.periodic:
                raise ConfigurationError(f"spectral d/d{label} needs a periodic {label} axis")
        force = self.hamiltonian.interaction_derivative()
        force.setflags(write=False)
        object.__setattr__(self, "force", force)

    @property
    def hbar(self) -> float:
        return self.hamiltonian.hbar

    def d_dq(self, data: np.ndarray) -> np.ndarray:
        return derivative(data, self.hamiltonian.grid.q_grid, 0, self.q_scheme)

    def d_dp(self, data: np.ndarray) -> np.ndarray:
        return derivative(data, self.hamiltonian.grid.p_grid, 1, self.p_scheme)

    def classical_speeds(self) -> tuple:
        """(max |p|, max |dU/dq|) for the time-step guard."""
        p_max = float(np.abs(self.hamiltonian.grid.p_grid.points).max())
        f_max = float(np.abs(self.force).max()) if self.force.size else 0.0
        return p_max, f_max


@dataclass(frozen=True, eq=False)
class GeneratorWignerRep:
    """Wigner-representation generator built from the same Hamiltonian and stencils."""

    config: GeneratorConfigRep
    h_symbol: WignerField = field(init=False, repr=False)
    odd_kernel: np.ndarray = field(init=False, repr=False)
    even_kernel: np.ndarray = field(init=False, repr=False)
    kinetic_multiplier: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H = self.config.hamiltonian
        qgrid = H.qgrid
        require_wigner_grid(qgrid)
        n = qgrid.n
        a, b = pair_indices(n)
        xi = qgrid.points
        q = H.grid.q_grid.points[:, None, None]
        phi = H.potential

        # (i/hbar)(U(q1, q2 + eta/2) - U(q1, q2 - eta/2)) on the separation lattice
        odd = (1j / H.hbar) * (phi.energy(q, xi[a][None]) - phi.energy(q, xi[b][None]))
        # -(1/2)(dU/dq(q1, q2 + eta/2) + dU/dq(q1, q2 - eta/2))
        even = -0.5 * (phi.d_dq(q, xi[a][None]) + phi.d_dq(q, xi[b][None]))

        f = kinetic_dispersion(qgrid, H.hbar, H.kinetic_scheme)
        # -(i/hbar)(f(l) - f(k)) acts on F A F^dagger
        kinetic = (-1j / H.hbar) * (f[None, :] - f[:, None])

        for name, value in (("odd_kernel", odd), ("even_kernel", even), ("kinetic_multiplier", kinetic)):
            value = np.asarray(value)
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "h_symbol", named_symbol("H", H))
        logger.debug(f"Wigner generator kernels ready on {H.grid.shape} x ({n}, {n})")

    @property
    def hamiltonian(self) -> HybridHamiltonian:
        return self.config.hamiltonian

    @property
    def hbar(self) -> float:
        return self.config.hbar


Generator = Union[GeneratorConfigRep, GeneratorWignerRep]


def apply_generator_config(gen: GeneratorConfigRep, A: HybridDensityField) -> HybridDensityField:
    H = gen.hamiltonian
    require_same_grid("apply_generator_config", H.grid, A.grid)
    require_same_grid("apply_generator_config", H.qgrid, A.qgrid)
    data = A.data
    p = H.grid.p_grid.points[None, :, None, None]
    v = H.h_int[:, None, :]
    f = gen.force[:, None, :]

    # potential part of the commutator is diagonal: (A V - V A)_ab = A_ab (v_b - v_a)
    commutator = data @ H.h_q - H.h_q @ data + data * (v[..., None, :] - v[..., :, None])
    out = (-1j / H.hbar) * commutator
    out += p * gen.d_dq(data)
    out -= 0.5 * (f[..., :, None] + f[..., None, :]) * gen.d_dp(data)
    return A.with_data(out)


def apply_generator_wigner(gen: GeneratorWignerRep, A: WignerField) -> WignerField:
    """Streaming in (q1, p1) plus the quantum part evaluated on the separation lattice.

    The symbol is Fourier transformed over p2 to the (q2, eta) lattice, where the
    interaction commutator (odd kernel) and the symmetrized classical force
    (even kernel) are pointwise products. The quantum kinetic term, the
    discrete form of p2 d/dq2, is diagonal in the pair of momenta of the kernel.
    """
    cfg = gen.config
    H = cfg.hamiltonian
    require_same_grid("apply_generator_wigner", H.grid, A.grid)
    require_same_grid("apply_generator_wigner", H.qgrid, A.qgrid)
    n = H.qgrid.n
    a, b = pair_indices(n)
    data = A.data

    p1 = H.grid.p_grid.points[None, :, None, None]
    streaming = p1 * cfg.d_dq(data)

    lattice = np.fft.ifft(np.fft.ifftshift(data, axes=-1), axis=-1)
    quantum = gen.odd_kernel[:, None] * lattice + gen.even_kernel[:, None] * cfg.d_dp(lattice)

    kernel = np.empty(lattice.shape, dtype=complex)
    kernel[..., a, b] = lattice
    spectrum = np.fft.ifft(np.fft.fft(kernel, axis=-2), axis=-1)
    kernel = np.fft.fft(np.fft.ifft(gen.kinetic_multiplier * spectrum, axis=-2), axis=-1)
    quantum += kernel[..., a, b]

    out = np.fft.fftshift(np.fft.fft(quantum, axis=-1), axes=-1) + streaming
    if not np.iscomplexobj(data):
        scale = max(float(np.abs(out).max()), 1e-300)
        residue = float(np.abs(out.imag).max())
        if residue > 1e-8 * scale:
            raise NumericalConsistencyError(
                f"Wigner generator lost reality (imaginary residue {residue:.3e})", {"scale": scale}
            )
        out = out.real
    return A.with_data(out)


def apply_generator(gen: Generator, A):
    if isinstance(gen, GeneratorWignerRep):
        return apply_generator_wigner(gen, A)
    return apply_generator_config(gen, A)


@dataclass(frozen=True, eq=False)
class DenseGenerator:
    """Explicit matrix of L over the flattened field, with the mean-value pairing.

    pairing(a, d) = sum_k weights[k] * a[k] * d[partner[k]].
    """

    matrix: np.ndarray
    template: object
    weights: np.ndarray
    partner: np.ndarray

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.matrix @ vector

    def pairing(self, a: np.ndarray, d: np.ndarray) -> complex:
        return complex(np.sum(self.weights * a * d[self.partner]))


def assemble_dense_generator(gen: Generator, template=None, cap: int = None) -> DenseGenerator:
    cap = settings.ORACLE_CAP if cap is None else cap
    H = gen.hamiltonian
    wigner = isinstance(gen, GeneratorWignerRep)
    if template is None:
        if wigner:
            template = gen.h_symbol
        else:
            template = H.as_observable()
    size = template.data.size
    if size > cap:
        raise OracleSizeError(
            f"dense generator dimension {size} exceeds the oracle cap {cap}", {"dimension": size, "cap": cap}
        )

    dtype = float if wigner else complex
    matrix = np.empty((size, size), dtype=dtype)
    unit = np.zeros(size, dtype=dtype)
    for j in range(size):
        unit[j] = 1.0
        matrix[:, j] = apply_generator(gen, template.from_flat(unit)).flatten()
        unit[j] = 0.0

    shape = template.data.shape
    if wigner:
        weights = np.broadcast_to(template.weights(), shape).reshape(-1).copy()
        partner = np.arange(size)
    else:
        weights = np.broadcast_to(H.grid.weights[:, :, None, None], shape).reshape(-1).copy()
        # Tr(A D) pairs A_ij with D_ji
        partner = np.arange(size).reshape(shape).swapaxes(-1, -2).reshape(-1).copy()
    logger.info(f"Assembled dense {'Wigner' if wigner else 'configuration'} generator of dimension {size}")
    return DenseGenerator(matrix=matrix, template=template, weights=weights, partner=partner)
