import os

import hypothesis
import numpy as np
import pytest

from qcdyn.core.config import settings
from qcdyn.services.hybrid_model import HybridDensityField, Role
from qcdyn.utils.grids import PhaseSpaceGrid, SpatialGrid

np.seterr(all="warn")

hypothesis.settings.register_profile("default", deadline=None, max_examples=50)
hypothesis.settings.register_profile("fast", parent=hypothesis.settings.get_profile("default"), max_examples=5)
hypothesis.settings.register_profile(
    "debugger", parent=hypothesis.settings.get_profile("default"), report_multiple_bugs=False
)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def oracle_grids():
    """n_q = n_p = 8, n = 4: flattened dimension 1024."""
    pgrid = PhaseSpaceGrid(SpatialGrid(-4.0, 4.0, 8), SpatialGrid(-4.0, 4.0, 8))
    return pgrid, SpatialGrid(-3.0, 3.0, 4)


@pytest.fixture
def wigner_grids():
    """Odd periodic quantum grid; flattened dimension 900."""
    pgrid = PhaseSpaceGrid(SpatialGrid(-3.0, 3.0, 6), SpatialGrid(-3.0, 3.0, 6))
    return pgrid, SpatialGrid(-2.5, 2.5, 5)


@pytest.fixture
def random_field(rng):
    def build(pgrid, qgrid, role=Role.OBSERVABLE):
        shape = pgrid.shape + (qgrid.n, qgrid.n)
        m = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        m = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
        return HybridDensityField(pgrid, qgrid, m, role)

    return build


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "OUTPUT_DIR_OVERRIDE", str(tmp_path / "runs"))
    return tmp_path / "runs"


GRID_SECTION = """\
[grid]
q_min = -4.0
q_max = 4.0
n_q = 8
p_min = -4.0
p_max = 4.0
n_p = 8
xi_min = -3.0
xi_max = 3.0
n_xi = 5
"""


@pytest.fixture
def scenario_file(tmp_path):
    """Write a scenario made of the small default grid plus the given sections."""
    def write(body: str, name: str = "scenario.ini", grid: str = GRID_SECTION):
        path = tmp_path / name
        path.write_text(grid + "\n" + body, encoding="utf-8")
        return path

    return write
