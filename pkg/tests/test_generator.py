import numpy as np
import pytest

from qcdyn.core.exceptions import ConfigurationError, OracleSizeError
from qcdyn.services.generator import (
    GeneratorConfigRep,
    GeneratorWignerRep,
    apply_generator,
    apply_generator_config,
    apply_generator_wigner,
    assemble_dense_generator,
)
from qcdyn.services.hybrid_model import (
    ClassicalPhasePoint,
    Role,
    WaveFunction,
    build_hamiltonian,
    named_observable,
    pairing,
)
from qcdyn.services.potentials import GaussianBumpPotential, HarmonicPotential, ZeroPotential
from qcdyn.services.wigner import named_symbol, wigner_of_pure_state, wigner_transform
from qcdyn.utils.grids import Boundary, PhaseSpaceGrid, SpatialGrid
from qcdyn.utils.stencils import DerivativeScheme, derivative

BUMP = GaussianBumpPotential(v0=1.0, w=1.0)


@pytest.fixture
def config_gen(oracle_grids):
    return GeneratorConfigRep(build_hamiltonian(*oracle_grids, BUMP))


def test_generator_is_anti_adjoint_under_the_pairing(config_gen, oracle_grids, random_field):
    for _ in range(20):
        A = random_field(*oracle_grids)
        D = random_field(*oracle_grids, role=Role.STATE)
        lhs = pairing(apply_generator_config(config_gen, A), D) + pairing(A, apply_generator_config(config_gen, D))
        assert abs(lhs) <= 1e-9 * A.hs_norm() * D.hs_norm()


def test_generator_preserves_hermiticity(config_gen, oracle_grids, random_field):
    out = apply_generator_config(config_gen, random_field(*oracle_grids))
    assert float(out.hermitian_residual().max()) <= 1e-10


def test_trace_integral_of_generator_vanishes(config_gen, oracle_grids, random_field):
    D = random_field(*oracle_grids, role=Role.STATE)
    out = apply_generator_config(config_gen, D)
    assert abs(np.sum(out.grid.weights * out.traces())) <= 1e-9 * D.hs_norm()


def _annihilation_residual(n_q, n_p, n):
    pgrid = PhaseSpaceGrid(SpatialGrid(-4.0, 4.0, n_q), SpatialGrid(-4.0, 4.0, n_p))
    H = build_hamiltonian(pgrid, SpatialGrid(-3.0, 3.0, n), GaussianBumpPotential(v0=1.0, w=0.8))
    out = apply_generator_config(GeneratorConfigRep(H), H.as_observable())
    # periodic wrap of the non-periodic p^2/2 and U spoils the edges
    q, p = pgrid.mesh
    inner = (np.abs(q) <= 2.0) & (np.abs(p) <= 2.0)
    return float(np.abs(out.data[inner]).max())


def test_hamiltonian_is_annihilated_to_second_order():
    coarse = _annihilation_residual(16, 16, 5)
    fine = _annihilation_residual(32, 32, 5)
    assert coarse > 0.0
    assert coarse / fine >= 3.5


def test_harmonic_hamiltonian_is_annihilated_exactly_in_the_interior():
    pgrid = PhaseSpaceGrid(SpatialGrid(-4.0, 4.0, 16), SpatialGrid(-4.0, 4.0, 16))
    H = build_hamiltonian(pgrid, SpatialGrid(-3.0, 3.0, 5), HarmonicPotential(k=1.0))
    out = apply_generator_config(GeneratorConfigRep(H), H.as_observable())
    assert float(np.abs(out.data[1:-1, 1:-1]).max()) < 1e-10


def test_wigner_generator_matches_configuration_generator(wigner_grids, random_field):
    H = build_hamiltonian(*wigner_grids, BUMP)
    config = GeneratorConfigRep(H)
    wigner = GeneratorWignerRep(config)
    A = random_field(*wigner_grids)
    via_config = wigner_transform(apply_generator_config(config, A))
    via_wigner = apply_generator_wigner(wigner, wigner_transform(A))
    scale = float(np.abs(via_config.data).max())
    np.testing.assert_allclose(via_wigner.data, via_config.data, atol=1e-6 * scale)
    assert not np.iscomplexobj(via_wigner.data)


def test_classical_position_symbol_streams_with_momentum(wigner_grids):
    H = build_hamiltonian(*wigner_grids, BUMP)
    gen = GeneratorWignerRep(GeneratorConfigRep(H))
    out = apply_generator(gen, named_symbol("q_c", H))
    p1 = H.grid.p_grid.points[None, :, None, None]
    expected = np.broadcast_to(p1, out.data.shape)
    np.testing.assert_allclose(out.data[1:-1], expected[1:-1], atol=1e-9)


def test_dense_generator_matches_apply(wigner_grids, random_field):
    H = build_hamiltonian(*wigner_grids, BUMP)
    config = GeneratorConfigRep(H)
    wigner = GeneratorWignerRep(config)
    dense_config = assemble_dense_generator(config, random_field(*wigner_grids))
    dense_wigner = assemble_dense_generator(wigner, wigner_transform(random_field(*wigner_grids)))
    for _ in range(20):
        A = random_field(*wigner_grids)
        for gen, dense, field_ in ((config, dense_config, A), (wigner, dense_wigner, wigner_transform(A))):
            expected = apply_generator(gen, field_).flatten()
            scale = float(np.abs(expected).max())
            np.testing.assert_allclose(dense.apply(field_.flatten()), expected, atol=1e-13 * scale)


def test_zero_coupling_spectrum_is_imaginary():
    pgrid = PhaseSpaceGrid(SpatialGrid(-2.0, 2.0, 4), SpatialGrid(-2.0, 2.0, 4))
    H = build_hamiltonian(pgrid, SpatialGrid(-1.5, 1.5, 3), ZeroPotential())
    dense = assemble_dense_generator(GeneratorConfigRep(H))
    eigenvalues = np.linalg.eigvals(1j * dense.matrix)
    assert np.abs(eigenvalues.imag).max() < 1e-8 * np.abs(eigenvalues).max()


def test_dense_assembly_respects_the_cap(oracle_grids):
    H = build_hamiltonian(*oracle_grids, BUMP)
    with pytest.raises(OracleSizeError):
        assemble_dense_generator(GeneratorConfigRep(H), cap=512)


def test_spectral_derivatives_need_periodic_classical_axes():
    pgrid = PhaseSpaceGrid(SpatialGrid(-2.0, 2.0, 6, Boundary.BOUNDED), SpatialGrid(-2.0, 2.0, 6))
    H = build_hamiltonian(pgrid, SpatialGrid(-1.0, 1.0, 3), BUMP)
    with pytest.raises(ConfigurationError):
        GeneratorConfigRep(H, q_scheme=DerivativeScheme.SPECTRAL)


def test_free_quantum_position_streams_with_momentum():
    pgrid = PhaseSpaceGrid(SpatialGrid(-2.0, 2.0, 4), SpatialGrid(-2.0, 2.0, 4))
    qgrid = SpatialGrid(-2.0, 2.0, 9, Boundary.BOUNDED)
    H = build_hamiltonian(pgrid, qgrid, ZeroPotential())
    out = apply_generator_config(GeneratorConfigRep(H), named_observable("q_q", H))
    # [q, p^2/2] / (i hbar) = p with the matching central-difference stencils
    np.testing.assert_allclose(out.data, named_observable("p_q", H).data, atol=1e-12)


def _quantum_force_mismatch(n, k=1.0):
    """Relative gap between the harmonic interaction term and k (q1 - q2) dA/dp2 by central differences."""
    pgrid = PhaseSpaceGrid(SpatialGrid(-2.0, 2.0, 4), SpatialGrid(-2.0, 2.0, 4))
    qgrid = SpatialGrid(-0.25 * n, 0.25 * n, n)
    harmonic = GeneratorWignerRep(GeneratorConfigRep(build_hamiltonian(pgrid, qgrid, HarmonicPotential(k=k))))
    free = GeneratorWignerRep(GeneratorConfigRep(build_hamiltonian(pgrid, qgrid, ZeroPotential())))
    psi = WaveFunction.gaussian(qgrid, center=0.0, width=0.7, momentum=0.5)
    W = wigner_of_pure_state(pgrid, ClassicalPhasePoint(0.0, 0.0), psi)

    interaction = apply_generator_wigner(harmonic, W).data - apply_generator_wigner(free, W).data
    q1, p1, q2, p2 = W.mesh()
    classical_force = -k * (q1 - q2) * derivative(W.data, pgrid.p_grid, 1, DerivativeScheme.CENTRAL)
    dp2 = W.pgrid2.dx
    stencil = (np.roll(W.data, -1, axis=-1) - np.roll(W.data, 1, axis=-1)) / (2.0 * dp2)
    quantum_force = k * (q1 - q2) * stencil

    # antipodal ghosts live near the edges of the periodic quantum axis
    central = np.broadcast_to(np.abs(q2) <= 0.25 * qgrid.length, W.data.shape)
    gap = np.abs(interaction - classical_force - quantum_force)[central].max()
    return gap / np.abs(quantum_force).max()


def test_harmonic_interaction_term_is_a_classical_force_on_the_quantum_particle():
    coarse = _quantum_force_mismatch(41)
    fine = _quantum_force_mismatch(81)
    assert fine <= 0.05
    assert coarse / fine >= 3.0
