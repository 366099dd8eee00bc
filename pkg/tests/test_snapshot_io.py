import struct

import numpy as np
import pytest

from qcdyn.core.exceptions import SnapshotError
from qcdyn.services.heisenberg import CanonicalOperatorState
from qcdyn.services.hybrid_model import (
    ClassicalPhasePoint,
    HybridDensityField,
    Role,
    WaveFunction,
    marginal_classical,
    uncorrelated_pure_state,
)
from qcdyn.services.meanfield import EhrenfestState, MeanFieldState
from qcdyn.services.wigner import WignerField, wigner_of_pure_state
from qcdyn.utils.grids import PhaseSpaceGrid, SpatialGrid
from qcdyn.utils.snapshot_io import (
    MAGIC,
    TYPE_TAGS,
    can_snapshot,
    decode_snapshot,
    encode_snapshot,
    load_snapshot,
    save_snapshot,
)

PGRID = PhaseSpaceGrid(SpatialGrid(-3.0, 3.0, 6), SpatialGrid(-3.0, 3.0, 6))
QGRID = SpatialGrid(-2.5, 2.5, 5)


def _states():
    psi = WaveFunction.gaussian(QGRID, center=0.2, width=0.9, momentum=0.3)
    D = uncorrelated_pure_state(PGRID, ClassicalPhasePoint(0.0, 0.5), psi, (2.0, 2.0))
    return {
        "wave_function": psi,
        "hybrid_density": D,
        "wigner": wigner_of_pure_state(PGRID, ClassicalPhasePoint(0.0, 0.5), psi, (2.0, 2.0), hbar=0.8),
        "classical_distribution": marginal_classical(D),
        "meanfield": MeanFieldState.create(marginal_classical(D), psi.projector()),
        "ehrenfest": EhrenfestState(ClassicalPhasePoint(1.5, -0.25), psi),
        "canonical_operators": CanonicalOperatorState.initial(ClassicalPhasePoint(1.0, 2.0), QGRID, hbar=0.8),
    }


def _arrays(state):
    if isinstance(state, WaveFunction):
        return [state.amplitudes]
    if isinstance(state, (HybridDensityField, WignerField)):
        return [state.data]
    if isinstance(state, MeanFieldState):
        return [state.classical.data, state.rho]
    if isinstance(state, EhrenfestState):
        return [state.psi.amplitudes, np.array([state.x.q, state.x.p])]
    if isinstance(state, CanonicalOperatorState):
        return list(state.as_tuple())
    return [state.data]


@pytest.mark.parametrize("name", sorted(TYPE_TAGS))
def test_every_state_type_survives_a_file_round_trip(name, tmp_path):
    state = _states()[name]
    assert can_snapshot(state)
    path = save_snapshot(state, tmp_path / f"{name}.qcds")
    loaded = load_snapshot(path, expected_type=name)
    assert type(loaded) is type(state)
    for before, after in zip(_arrays(state), _arrays(loaded)):
        np.testing.assert_array_equal(after, before)


def test_snapshot_keeps_grids_roles_and_hbar():
    states = _states()
    D = decode_snapshot(encode_snapshot(states["hybrid_density"]))
    assert D.grid == PGRID and D.qgrid == QGRID and D.role is Role.STATE
    W = decode_snapshot(encode_snapshot(states["wigner"]))
    assert W.hbar == 0.8
    ops = decode_snapshot(encode_snapshot(states["canonical_operators"]))
    assert ops.hbar == 0.8


def test_encoding_is_deterministic():
    state = _states()["meanfield"]
    data = encode_snapshot(state)
    assert data == encode_snapshot(state)
    assert data[:4] == MAGIC
    assert struct.unpack_from("<H", data, 6)[0] == TYPE_TAGS["meanfield"]


@pytest.fixture
def blob():
    return encode_snapshot(_states()["ehrenfest"])


def test_corrupt_magic(blob):
    with pytest.raises(SnapshotError, match="bad magic"):
        decode_snapshot(b"XXXX" + blob[4:])


def test_unsupported_version(blob):
    with pytest.raises(SnapshotError, match="version"):
        decode_snapshot(blob[:4] + struct.pack("<H", 99) + blob[6:])


def test_unknown_type_tag(blob):
    with pytest.raises(SnapshotError, match="type tag"):
        decode_snapshot(blob[:6] + struct.pack("<H", 999) + blob[8:])


@pytest.mark.parametrize("cut", [3, 20, -1])
def test_truncation_is_detected(blob, cut):
    with pytest.raises(SnapshotError, match="truncated"):
        decode_snapshot(blob[:cut])


def test_trailing_bytes_are_rejected(blob):
    with pytest.raises(SnapshotError, match="trailing"):
        decode_snapshot(blob + b"\0")


def test_type_mismatch_is_reported(blob):
    with pytest.raises(SnapshotError, match="expected 'wave_function'"):
        decode_snapshot(blob, expected_type="wave_function")


def test_unsupported_objects_cannot_be_snapshotted():
    assert not can_snapshot({"q": 1.0})
    with pytest.raises(SnapshotError):
        encode_snapshot(object())
