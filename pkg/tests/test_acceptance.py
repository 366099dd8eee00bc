"""End-to-end checks on whole scenarios run through the service layer."""
import numpy as np
import pytest

from qcdyn.services.meanfield import compare_with_full
from qcdyn.services.simulation_service import SimulationService, force_oracle
from qcdyn.utils.scenario_parser import parse_scenario

SMALL_GRID = """\
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

WIDE_GRID = """\
[grid]
q_min = -4.0
q_max = 4.0
n_q = 8
p_min = -4.0
p_max = 4.0
n_p = 8
xi_min = -12.0
xi_max = 12.0
n_xi = 127

[physics]
kinetic_scheme = spectral
"""


def _scenario(grid, body):
    return parse_scenario(grid + "\n" + body)


def _solve(scenario):
    return SimulationService(scenario).run(write=False)


@pytest.mark.slow
def test_rk4_matches_the_dense_oracle_at_a_fine_step():
    scenario = _scenario(SMALL_GRID, """\
[potential]
kind = gaussian_bump
v0 = 1.0
w = 1.0

[initial]
p0 = 0.5
sigma_q = 2.0
sigma_p = 2.0

[method]
name = full_qcle_config

[integrator]
dt = 0.005
t_final = 0.5
stride = 50
""")
    rk4 = _solve(scenario)
    oracle = _solve(force_oracle(scenario))
    for name in ("q_c", "p_c", "q_q", "p_q", "H"):
        np.testing.assert_allclose(rk4.table.column(name), oracle.table.column(name), atol=1e-5)


@pytest.mark.slow
def test_zero_coupling_keeps_the_state_factorized():
    body = """\
[initial]
p0 = 0.5
sigma_q = 2.0
sigma_p = 2.0

[method]
name = {method}

[integrator]
dt = {dt}
t_final = 5.0
stride = {stride}

[observables]
columns = q_c, p_c, q_q, p_q, H, correlation_norm
"""
    oracle = _solve(_scenario(SMALL_GRID, body.format(method="oracle_dense", dt=0.01, stride=25)))
    assert oracle.table.times[-1] == pytest.approx(5.0)
    assert max(oracle.table.column("correlation_norm")) <= 1e-9
    rk4 = _solve(_scenario(SMALL_GRID, body.format(method="full_qcle_config", dt=0.001, stride=250)))
    assert max(rk4.table.column("correlation_norm")) <= 1e-9
    report = compare_with_full(rk4.record, oracle.record, ["q_c", "p_c", "q_q", "p_q"], tol=1e-6)
    assert report.passed, report.columns


# (q0, p0) = (0, 0.5) sits on a grid point; the smeared density stays clear of the q seam up to t = 5
FREE_GRID = """\
[grid]
q_min = -12.5
q_max = 12.5
n_q = 50
p_min = -1.0
p_max = 2.0
n_p = 24
xi_min = -15.5
xi_max = 16.5
n_xi = 19

[physics]
kinetic_scheme = spectral
"""

FREE = """\
[potential]
kind = zero

[initial]
q0 = 0.0
p0 = 0.5
sigma_q = 1.0
sigma_p = 0.25
psi_center = 0.0
psi_width = 2.0
psi_momentum = 0.2

[method]
name = {method}

[integrator]
dt = 0.05
t_final = 5.0
stride = 20

[observables]
columns = q_c, p_c, q_q, p_q{extra}
"""


@pytest.mark.slow
def test_zero_coupling_methods_agree_on_first_moments():
    full = _solve(_scenario(FREE_GRID, FREE.format(method="full_qcle_config", extra=", correlation_norm")))
    assert full.table.times[-1] == pytest.approx(5.0)
    q_c = np.asarray(full.table.column("q_c"))
    np.testing.assert_allclose(q_c, 0.5 * np.asarray(full.table.times), atol=1e-6)
    for method in ("meanfield_distribution", "ehrenfest", "heisenberg_symbols"):
        approx = _solve(_scenario(FREE_GRID, FREE.format(method=method, extra="")))
        report = compare_with_full(approx.record, full.record, ["q_c", "p_c", "q_q", "p_q"], tol=1e-6)
        assert report.passed, (method, report.columns)


# classical axes centred on (q0, p0) = (1, 0); odd periodic quantum grid
SYMBOL_GRID = """\
[grid]
q_min = -4.0
q_max = 7.0
n_q = 11
p_min = -5.0
p_max = 6.0
n_p = 11
xi_min = -12.0
xi_max = 12.0
n_xi = 63

[physics]
kinetic_scheme = spectral
"""

HARMONIC = """\
[potential]
kind = harmonic
k = 1.0

[initial]
q0 = 1.0
p0 = 0.0
psi_center = -1.0
psi_width = 0.8

[method]
name = {method}
support_threshold = 1e-8

[integrator]
dt = 0.01
t_final = {t_final}
stride = {stride}
"""


def _period(times, values):
    crossings = []
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
        theta = values[i] / (values[i] - values[i + 1])
        crossings.append(times[i] + theta * (times[i + 1] - times[i]))
    return 2.0 * float(np.mean(np.diff(crossings)))


@pytest.mark.slow
def test_harmonic_first_moments_close_across_methods():
    runs = {
        method: _solve(_scenario(SYMBOL_GRID, HARMONIC.format(method=method, stride=50, t_final=10.0)))
        for method in ("ehrenfest", "heisenberg_operators", "heisenberg_symbols")
    }
    reference = runs["ehrenfest"].table
    for method in ("heisenberg_operators", "heisenberg_symbols"):
        table = runs[method].table
        np.testing.assert_allclose(table.times, reference.times, atol=1e-12)
        for name in ("q_c", "p_c", "q_q", "p_q"):
            np.testing.assert_allclose(table.column(name), reference.column(name), atol=5e-4, err_msg=method)


@pytest.mark.slow
def test_harmonic_relative_mode_period_and_ehrenfest_invariants():
    period = 2.0 * np.pi / np.sqrt(2.0)
    result = _solve(_scenario(WIDE_GRID, HARMONIC.format(method="ehrenfest", stride=1, t_final=10 * period)))
    record = result.record
    times = np.asarray(record.times)
    assert times[-1] == pytest.approx(10 * period)
    relative = record.column("q_c") - record.column("q_q")
    assert _period(times, relative) == pytest.approx(period, rel=0.01)

    energy = record.column("energy")
    assert np.abs(energy - energy[0]).max() <= 1e-6 * abs(energy[0])
    assert np.abs(record.column("norm") - 1.0).max() <= 1e-10


SMEARING_GRID = """\
[grid]
q_min = -6.0
q_max = 6.0
n_q = 48
p_min = -4.0
p_max = 4.0
n_p = 32
xi_min = -6.0
xi_max = 6.0
n_xi = 31
"""

BUMP = """\
[potential]
kind = gaussian_bump
v0 = 1.0
w = 1.0

[initial]
q0 = 0.0
p0 = 0.5
psi_center = -1.0
psi_width = 0.7
{sigma}

[method]
name = {method}

[integrator]
dt = 0.01
t_final = 5.0
stride = 10
"""


@pytest.mark.slow
def test_meanfield_approaches_ehrenfest_as_the_smearing_shrinks():
    ehrenfest = _solve(_scenario(SMEARING_GRID, BUMP.format(method="ehrenfest", sigma="")))
    target = np.asarray(ehrenfest.table.column("q_c"))
    gaps = []
    for cells in (4, 3, 2):
        sigma = f"sigma_q = {cells * 0.25}\nsigma_p = {cells * 0.25}"
        meanfield = _solve(_scenario(SMEARING_GRID, BUMP.format(method="meanfield_distribution", sigma=sigma)))
        gaps.append(float(np.abs(np.asarray(meanfield.table.column("q_c")) - target).max()))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] <= 3 * 0.25


@pytest.mark.slow
def test_coupling_builds_correlations_that_ehrenfest_misses():
    body = """\
[potential]
kind = {kind}
v0 = 1.0
w = 1.0

[initial]
q0 = 0.0
p0 = 0.5
sigma_q = 1.0
sigma_p = 0.25
psi_center = 0.0
psi_width = 2.0
psi_momentum = 0.2

[method]
name = {method}

[integrator]
dt = 0.05
t_final = 2.0
stride = 10

[observables]
columns = q_c, q_q{extra}
"""

    def pair(kind):
        full = _solve(_scenario(FREE_GRID, body.format(kind=kind, method="full_qcle_config", extra=", correlation_norm")))
        ehrenfest = _solve(_scenario(FREE_GRID, body.format(kind=kind, method="ehrenfest", extra="")))
        report = compare_with_full(ehrenfest.record, full.record, ["q_c"])
        return full.table.column("correlation_norm")[-1], np.asarray(report.series["q_c"])

    baseline_g, baseline_gap = pair("zero")
    coupled_g, gap = pair("gaussian_bump")
    assert coupled_g > 100 * baseline_g
    assert gap[0] <= 1e-12
    assert gap[-1] > 100 * baseline_gap[-1]
    assert gap.max() > 100 * baseline_gap.max()
