"""Deterministic SVG line plots of time-series tables."""
import io
import logging
from pathlib import Path
from typing import Iterable, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from qcdyn.core.exceptions import UnknownColumnError  # noqa: E402
from qcdyn.schemas.table import TimeSeriesTable  # noqa: E402
from qcdyn.utils.csv_io import atomic_write  # noqa: E402

logger = logging.getLogger(__name__)

_SVG_SALT = "qcdyn"


def render_svg(table: TimeSeriesTable, columns: Iterable[str], title: Optional[str] = None,
               footer: Optional[str] = None) -> str:
    columns = list(columns)
    missing = [name for name in columns if name not in table.columns or name == "t"]
    if missing:
        raise UnknownColumnError(f"cannot plot unknown columns {missing}", {"available": table.columns[1:]})
    if not columns:
        raise UnknownColumnError("no columns selected for plotting", {"available": table.columns[1:]})

    times = table.times
    with plt.rc_context({"svg.hashsalt": _SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        try:
            for name in columns:
                ax.plot(times, table.column(name), label=f"{name} [{table.units.get(name, '1')}]")
            ax.set_xlabel(f"t [{table.units.get('t', 'time')}]")
            ax.set_ylabel("value")
            ax.grid(True, alpha=0.3)
            ax.legend(loc="best")
            if title:
                ax.set_title(title)
            fig.text(0.01, 0.01, footer or f"scenario {table.metadata.get('scenario_hash', 'n/a')}",
                     fontsize=7, color="0.35")
            fig.tight_layout(rect=(0, 0.04, 1, 1))
            buffer = io.StringIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buffer.getvalue()


def emit_plot(table: TimeSeriesTable, columns: Iterable[str], path: Union[str, Path],
              title: Optional[str] = None) -> Path:
    columns = list(columns)
    svg = render_svg(table, columns, title)
    path = atomic_write(path, svg)
    logger.info(f"Wrote plot of {list(columns)} to {path}")
    return path
