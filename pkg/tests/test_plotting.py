import pytest

from qcdyn.core.exceptions import UnknownColumnError
from qcdyn.schemas.table import TimeSeriesTable
from qcdyn.utils.plotting import emit_plot, render_svg


@pytest.fixture
def table():
    times = [0.1 * i for i in range(21)]
    return TimeSeriesTable.from_series(
        times,
        {"q_c": [1.0 - t * t for t in times], "q_q": [t for t in times]},
        metadata={"scenario_hash": "feedface"},
    )


def test_svg_is_byte_identical_across_renders(table):
    first = render_svg(table, ["q_c", "q_q"], title="positions")
    assert first == render_svg(table, ["q_c", "q_q"], title="positions")
    assert first.lstrip().startswith("<?xml")
    assert "positions" in first


def test_footer_carries_the_scenario_hash(table):
    assert "scenario feedface" in render_svg(table, ["q_c"])
    assert "custom footer" in render_svg(table, ["q_c"], footer="custom footer")


@pytest.mark.parametrize("columns", [["spin"], ["t"], []])
def test_unknown_columns_are_refused(table, columns):
    with pytest.raises(UnknownColumnError):
        render_svg(table, columns)


def test_emit_plot_writes_the_file(table, tmp_path):
    path = emit_plot(table, ["q_q"], tmp_path / "plots" / "run.svg")
    assert path.read_text(encoding="utf-8") == render_svg(table, ["q_q"])
