"""Time-series CSV files with a metadata comment block.

Layout::

    # qcdyn-csv 1
    # version: 1.0.0
    # scenario_hash: 3f2a...
    # grid.q: ab12...
    # scenario:
    # [grid]
    # q_min = -8.0
    # ...
    t,q_c,p_c
    0.0000000000000000e+00,...

Values use 17 significant digits in scientific notation with a '.' decimal
point. Files are written to a temporary sibling and renamed into place.
"""
import csv
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from qcdyn.core.config import settings
from qcdyn.core.exceptions import QCDynException
from qcdyn.schemas.table import COLUMN_UNITS, TimeSeriesTable

logger = logging.getLogger(__name__)

FORMAT_TAG = "qcdyn-csv 1"
_SCENARIO_KEY = "scenario"


def format_value(value: float) -> str:
    return f"{float(value):.{settings.CSV_SIGNIFICANT_DIGITS - 1}e}"


def render_table(table: TimeSeriesTable) -> str:
    out = io.StringIO()
    out.write(f"# {FORMAT_TAG}\n")
    for key, value in table.metadata.items():
        if key == _SCENARIO_KEY:
            continue
        out.write(f"# {key}: {value}\n")
    units = ",".join(table.units.get(name, "1") for name in table.columns)
    out.write(f"# units: {units}\n")
    if _SCENARIO_KEY in table.metadata:
        out.write(f"# {_SCENARIO_KEY}:\n")
        for line in table.metadata[_SCENARIO_KEY].splitlines():
            out.write(f"#   {line}\n" if line else "#\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return out.getvalue()


def atomic_write(path: Union[str, Path], data: Union[str, bytes]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_table(table: TimeSeriesTable, path: Union[str, Path]) -> Path:
    path = atomic_write(path, render_table(table))
    logger.info(f"Wrote {len(table.rows)} rows x {len(table.columns)} columns to {path}")
    return path


def parse_table(text: str) -> TimeSeriesTable:
    metadata = {}
    units = None
    scenario_lines = None
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            content = line[1:]
            if scenario_lines is not None:
                scenario_lines.append(content[3:] if content.startswith("   ") else content.strip())
                continue
            content = content.strip()
            if content == FORMAT_TAG:
                continue
            if content == f"{_SCENARIO_KEY}:":
                scenario_lines = []
                continue
            key, _, value = content.partition(":")
            if key == "units":
                units = value.strip().split(",")
            elif key:
                metadata[key.strip()] = value.strip()
            continue
        if line.strip():
            body.append(line)
    if scenario_lines is not None:
        metadata[_SCENARIO_KEY] = "\n".join(scenario_lines)

    rows = list(csv.reader(body))
    if not rows:
        raise QCDynException("CSV has no header row")
    columns = [name.strip() for name in rows[0]]
    try:
        values = [[float(v) for v in row] for row in rows[1:]]
    except ValueError as exc:
        raise QCDynException(f"CSV holds a non-numeric value: {exc}")
    if units is None or len(units) != len(columns):
        units = [COLUMN_UNITS.get(name, "1") for name in columns]
    try:
        return TimeSeriesTable(columns=columns, units=dict(zip(columns, units)), rows=values, metadata=metadata)
    except ValidationError as exc:
        raise QCDynException(f"CSV is not a valid time series: {exc.errors()[0]['msg']}")


def read_table(path: Union[str, Path]) -> TimeSeriesTable:
    return parse_table(Path(path).read_text(encoding="utf-8"))
