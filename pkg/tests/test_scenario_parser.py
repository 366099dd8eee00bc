import os

import pytest
from hypothesis import given, settings as hsettings
import hypothesis.strategies as st

from qcdyn.core.config import settings
from qcdyn.core.exceptions import ScenarioParseError, ScenarioValidationError
from qcdyn.schemas.scenario import Method, PotentialKind, PsiFamily
from qcdyn.utils.scenario_parser import dump_scenario, load_scenario, parse_scenario

MINIMAL = """\
# smallest useful scenario
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

[method]
name = ehrenfest   # trajectory level
"""


def test_minimal_scenario_takes_defaults():
    scenario = parse_scenario(MINIMAL)
    assert scenario.method.name is Method.EHRENFEST
    assert scenario.potential.kind is PotentialKind.ZERO
    assert scenario.initial.psi is PsiFamily.GAUSSIAN
    assert scenario.integrator.dt == settings.DEFAULT_DT
    assert scenario.observables.columns == ["q_c", "p_c", "q_q", "p_q", "H"]
    # smearing widths are materialized from the grid spacing
    assert scenario.initial.sigma_q == pytest.approx(settings.SMEARING_CELLS * 1.0)
    assert scenario.initial.sigma_p == pytest.approx(settings.SMEARING_CELLS * 1.0)


def test_lists_and_enums_are_parsed(tmp_path):
    text = MINIMAL + """
[potential]
kind = tabulated
r = -8.0, 0.0, 8.0, 9.0
values = 1.0, 0.0, 1.0, 2.0

[observables]
columns = q_c, H
"""
    path = tmp_path / "tab.ini"
    path.write_text(text, encoding="utf-8")
    scenario = load_scenario(path)
    assert scenario.potential.r == [-8.0, 0.0, 8.0, 9.0]
    assert scenario.potential.parameters()["values"] == [1.0, 0.0, 1.0, 2.0]
    assert scenario.observables.columns == ["q_c", "H"]


def test_hash_inside_a_value_is_not_a_comment():
    scenario = parse_scenario(MINIMAL + """
[output]
directory = runs/#3/out   # kept up to here
name = sweep#2
""")
    assert scenario.output.directory == "runs/#3/out"
    assert scenario.output.name == "sweep#2"
    assert scenario.method.name is Method.EHRENFEST


def test_dump_is_explicit_and_round_trips():
    scenario = parse_scenario(MINIMAL)
    text = dump_scenario(scenario)
    assert "sigma_q = 3.0" in text
    assert "[run]" in text
    assert parse_scenario(text) == scenario


@pytest.mark.parametrize("section", ["potental", "integrater"])
def test_unknown_sections_name_section_and_key(section):
    text = MINIMAL + f"\n[{section}]\nk = 1.0\n"
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(text)
    assert info.value.key == f"{section}.k"
    assert "unknown key" in info.value.constraint
    assert "line 17" in info.value.constraint


def test_unknown_key_in_a_known_section_reports_its_line():
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(MINIMAL + "\n[integrator]\ndt = 0.01\ntfinal = 2.0\n")
    assert info.value.key == "integrator.tfinal"
    assert info.value.constraint == "unknown key (line 18)"


def test_out_of_range_value_reports_its_line():
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(MINIMAL.replace("n_q = 8", "n_q = 1"))
    assert info.value.key == "grid.n_q"
    assert "(line 5)" in info.value.constraint


def test_missing_required_section():
    text = MINIMAL.split("[method]")[0]
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(text)
    assert info.value.key == "method"
    assert info.value.constraint == "required key is missing"


def test_potential_parameters_are_required_by_kind():
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(MINIMAL + "\n[potential]\nkind = gaussian_bump\nv0 = 1.0\n")
    assert info.value.key == "potential"
    assert "w" in info.value.constraint


@pytest.mark.parametrize("text,line", [
    (MINIMAL + "\n[method]\nname = ehrenfest\n", 16),
    (MINIMAL.replace("n_p = 8", "n_p = 8\nn_p = 9"), 9),
    ("q_min = 1.0\n", 1),
    (MINIMAL + "\nthis line is not an entry\n", 16),
    (MINIMAL + "\n[output]\nname =\n", 17),
])
def test_syntax_errors_carry_line_numbers(text, line):
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


@pytest.mark.parametrize("method", ["full_qcle_wigner", "heisenberg_symbols"])
def test_wigner_methods_need_odd_periodic_quantum_grids(method):
    text = MINIMAL.replace("name = ehrenfest", f"name = {method}")
    assert parse_scenario(text).method.name is Method(method)
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(text.replace("n_xi = 5", "n_xi = 6"))
    assert info.value.key == "grid.n_xi"
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(text.replace("n_xi = 5", "n_xi = 5\nxi_boundary = bounded"))
    assert info.value.key == "grid.xi_boundary"


def test_method_constraints():
    oracle = MINIMAL.replace("name = ehrenfest", "name = oracle_dense").replace("n_q = 8", "n_q = 32")
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(oracle)
    assert "oracle cap" in info.value.constraint

    operators = MINIMAL.replace("name = ehrenfest", "name = heisenberg_operators")
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(operators + "\n[potential]\nkind = gaussian_bump\nv0 = 1.0\nw = 1.0\n")
    assert info.value.key == "potential.kind"

    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(MINIMAL + "\n[observables]\ncolumns = q_c, correlation_norm\n")
    assert info.value.key == "observables.columns"


_finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)


@given(
    method=st.sampled_from(list(Method)),
    q0=_finite,
    p0=_finite,
    width=st.floats(min_value=0.1, max_value=3.0),
    dt=st.floats(min_value=1e-4, max_value=0.1),
    stride=st.integers(min_value=1, max_value=50),
    k=st.floats(min_value=0.01, max_value=10.0),
    name=st.text(alphabet="abcdefghijklmnopqrstuvwxyz_0123456789", min_size=1, max_size=12),
)
def test_dump_parse_round_trip(method, q0, p0, width, dt, stride, k, name):
    text = MINIMAL.replace("name = ehrenfest", f"name = {method.value}") + f"""
[potential]
kind = harmonic
k = {k!r}

[initial]
q0 = {q0!r}
p0 = {p0!r}
psi_width = {width!r}

[integrator]
dt = {dt!r}
stride = {stride}

[output]
name = {name}
"""
    scenario = parse_scenario(text)
    assert scenario.initial.q0 == q0
    assert parse_scenario(dump_scenario(scenario)) == scenario


def test_hypothesis_profile_follows_the_environment():
    active = hsettings.get_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))
    assert hsettings.default.max_examples == active.max_examples
    assert hsettings.default.deadline is None
