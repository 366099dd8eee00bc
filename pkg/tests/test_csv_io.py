import pytest

from qcdyn.core.exceptions import QCDynException
from qcdyn.schemas.table import TimeSeriesTable
from qcdyn.utils.csv_io import FORMAT_TAG, format_value, parse_table, read_table, render_table, write_table


@pytest.fixture
def table():
    return TimeSeriesTable.from_series(
        [0.0, 0.1, 0.2],
        {"q_c": [1.0, 0.995, 0.98], "energy": [0.5, 0.5000000000000001, 0.49999999999999994]},
        metadata={"version": "1.0.0", "scenario_hash": "abc123", "scenario": "[grid]\nn_q = 8\n\n[method]\nname = ehrenfest"},
    )


def test_values_use_seventeen_significant_digits():
    assert format_value(0.1) == "1.0000000000000001e-01"
    assert format_value(-2.0) == "-2.0000000000000000e+00"
    assert float(format_value(1 / 3)) == 1 / 3


def test_render_is_deterministic_and_documented(table):
    text = render_table(table)
    assert text == render_table(table)
    lines = text.splitlines()
    assert lines[0] == f"# {FORMAT_TAG}"
    assert "# scenario_hash: abc123" in lines
    assert "# units: time,length,energy" in lines
    assert "#   [method]" in lines
    assert "t,q_c,energy" in lines
    assert lines[-1].startswith("2.0000000000000001e-01,")


def test_parse_restores_values_and_metadata(table, tmp_path):
    path = write_table(table, tmp_path / "nested" / "run.csv")
    parsed = read_table(path)
    assert parsed.columns == table.columns
    assert parsed.rows == table.rows
    assert parsed.units == table.units
    assert parsed.metadata == table.metadata
    assert not [p for p in path.parent.iterdir() if p.name.startswith(".")]


@pytest.mark.parametrize("text", [
    "# qcdyn-csv 1\n",
    "t,q_c\n0.0,abc\n",
    "q_c,t\n0.0,1.0\n",
    "t,q_c\n0.0,1.0\n0.0,2.0\n",
    "t,q_c\n0.0\n",
])
def test_malformed_tables_are_rejected(text):
    with pytest.raises(QCDynException):
        parse_table(text)


def test_table_accessors(table):
    assert table.times == [0.0, 0.1, 0.2]
    assert table.column("q_c") == [1.0, 0.995, 0.98]
    assert list(table.series()) == ["q_c", "energy"]
