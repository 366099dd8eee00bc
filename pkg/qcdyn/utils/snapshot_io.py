"""Binary state snapshots.

Layout (all integers little-endian)::

    magic        4 bytes   b"QCDS"
    version      uint16
    type tag     uint16
    endianness   1 byte    b"<"
    reserved     3 bytes
    header size  uint32
    header       JSON, utf-8: type name, grid descriptors, scalars, array table
    payload      raw little-endian IEEE-754 arrays in array-table order
"""
import json
import logging
import struct
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from qcdyn.core.exceptions import SnapshotError
from qcdyn.services.heisenberg import CanonicalOperatorState
from qcdyn.services.hybrid_model import (
    ClassicalDistribution,
    ClassicalPhasePoint,
    HybridDensityField,
    Role,
    WaveFunction,
)
from qcdyn.services.meanfield import EhrenfestState, MeanFieldState
from qcdyn.services.wigner import WignerField
from qcdyn.utils.csv_io import atomic_write
from qcdyn.utils.grids import PhaseSpaceGrid, SpatialGrid

logger = logging.getLogger(__name__)

MAGIC = b"QCDS"
VERSION = 1
_PREAMBLE = struct.Struct("<4sHHc3sI")

TYPE_TAGS = {
    "wave_function": 1,
    "hybrid_density": 2,
    "wigner": 3,
    "classical_distribution": 4,
    "meanfield": 5,
    "ehrenfest": 6,
    "canonical_operators": 7,
}
_TAG_NAMES = {tag: name for name, tag in TYPE_TAGS.items()}


def _spatial(descriptor: dict) -> SpatialGrid:
    return SpatialGrid(**descriptor)


def _phase(descriptor: dict) -> PhaseSpaceGrid:
    return PhaseSpaceGrid(_spatial(descriptor["q"]), _spatial(descriptor["p"]))


def _encode(state) -> Tuple[str, dict, Dict[str, np.ndarray]]:
    if isinstance(state, WaveFunction):
        return "wave_function", {"qgrid": state.grid.descriptor()}, {"amplitudes": state.amplitudes}
    if isinstance(state, HybridDensityField):
        header = {"grid": state.grid.descriptor(), "qgrid": state.qgrid.descriptor(), "role": state.role.value}
        return "hybrid_density", header, {"data": state.data}
    if isinstance(state, WignerField):
        header = {
            "grid": state.grid.descriptor(), "qgrid": state.qgrid.descriptor(),
            "role": state.role.value, "hbar": state.hbar,
        }
        return "wigner", header, {"data": state.data}
    if isinstance(state, ClassicalDistribution):
        return "classical_distribution", {"grid": state.grid.descriptor()}, {"data": state.data}
    if isinstance(state, MeanFieldState):
        return "meanfield", {"grid": state.classical.grid.descriptor()}, {
            "classical": state.classical.data, "rho": state.rho,
        }
    if isinstance(state, EhrenfestState):
        header = {"qgrid": state.psi.grid.descriptor(), "q": state.x.q, "p": state.x.p}
        return "ehrenfest", header, {"amplitudes": state.psi.amplitudes}
    if isinstance(state, CanonicalOperatorState):
        return "canonical_operators", {"hbar": state.hbar}, {
            "qc": state.qc, "pc": state.pc, "qq": state.qq, "pq": state.pq,
        }
    raise SnapshotError(f"no snapshot encoding for {type(state).__name__}")


def _decode(name: str, header: dict, arrays: Dict[str, np.ndarray]):
    if name == "wave_function":
        return WaveFunction(_spatial(header["qgrid"]), arrays["amplitudes"])
    if name == "hybrid_density":
        return HybridDensityField(_phase(header["grid"]), _spatial(header["qgrid"]), arrays["data"], Role(header["role"]))
    if name == "wigner":
        return WignerField(
            _phase(header["grid"]), _spatial(header["qgrid"]), header["hbar"], arrays["data"], Role(header["role"])
        )
    if name == "classical_distribution":
        return ClassicalDistribution(_phase(header["grid"]), arrays["data"])
    if name == "meanfield":
        return MeanFieldState(ClassicalDistribution(_phase(header["grid"]), arrays["classical"]), arrays["rho"])
    if name == "ehrenfest":
        psi = WaveFunction(_spatial(header["qgrid"]), arrays["amplitudes"])
        return EhrenfestState(ClassicalPhasePoint(header["q"], header["p"]), psi)
    if name == "canonical_operators":
        return CanonicalOperatorState(arrays["qc"], arrays["pc"], arrays["qq"], arrays["pq"], hbar=header["hbar"])
    raise SnapshotError(f"unknown snapshot type '{name}'")


def can_snapshot(state) -> bool:
    try:
        _encode(state)
    except SnapshotError:
        return False
    return True


def encode_snapshot(state) -> bytes:
    name, header, arrays = _encode(state)
    table: List[dict] = []
    chunks = []
    for key, array in arrays.items():
        array = np.asarray(array)
        dtype = np.dtype(array.dtype).newbyteorder("<")
        table.append({"name": key, "dtype": dtype.str, "shape": list(array.shape)})
        chunks.append(np.ascontiguousarray(array, dtype=dtype).tobytes())
    header = {"type": name, **header, "arrays": table}
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    preamble = _PREAMBLE.pack(MAGIC, VERSION, TYPE_TAGS[name], b"<", b"\0\0\0", len(blob))
    return preamble + blob + b"".join(chunks)


def decode_snapshot(data: bytes, expected_type: str = None):
    if len(data) < _PREAMBLE.size:
        raise SnapshotError("snapshot is truncated before the end of its preamble", {"size": len(data)})
    magic, version, tag, endian, _, header_size = _PREAMBLE.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"not a snapshot: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}", {"expected": VERSION})
    if endian != b"<":
        raise SnapshotError(f"unsupported byte order {endian!r}")
    if tag not in _TAG_NAMES:
        raise SnapshotError(f"unknown snapshot type tag {tag}")
    name = _TAG_NAMES[tag]
    if expected_type is not None and name != expected_type:
        raise SnapshotError(f"snapshot holds '{name}', expected '{expected_type}'")

    start = _PREAMBLE.size
    if len(data) < start + header_size:
        raise SnapshotError("snapshot is truncated inside its header")
    try:
        header = json.loads(data[start:start + header_size].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"snapshot header is corrupt: {exc}")
    if header.get("type") != name:
        raise SnapshotError("snapshot header type disagrees with its type tag")

    offset = start + header_size
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        end = offset + count * dtype.itemsize
        if end > len(data):
            raise SnapshotError(
                f"snapshot is truncated inside array '{entry['name']}'", {"needed": end, "size": len(data)}
            )
        arrays[entry["name"]] = np.frombuffer(data, dtype=dtype, count=count, offset=offset).reshape(entry["shape"])
        offset = end
    if offset != len(data):
        raise SnapshotError(f"snapshot has {len(data) - offset} trailing bytes")
    return _decode(name, header, arrays)


def save_snapshot(state, path: Union[str, Path]) -> Path:
    path = atomic_write(path, encode_snapshot(state))
    logger.info(f"Saved {type(state).__name__} snapshot to {path}")
    return path


def load_snapshot(path: Union[str, Path], expected_type: str = None):
    state = decode_snapshot(Path(path).read_bytes(), expected_type)
    logger.info(f"Loaded {type(state).__name__} snapshot from {path}")
    return state
