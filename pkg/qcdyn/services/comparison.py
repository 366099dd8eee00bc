import logging
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from qcdyn.core.exceptions import AlignmentError, UnknownColumnError
from qcdyn.schemas.report import ColumnDiscrepancy, ComparisonReport

logger = logging.getLogger(__name__)

_TINY = 1e-300


def _align(times_a: np.ndarray, times_b: np.ndarray, interpolate: bool):
    if times_a.shape == times_b.shape and np.allclose(times_a, times_b, rtol=0.0, atol=1e-12):
        return times_a, None
    if not interpolate:
        raise AlignmentError(
            "time axes differ; pass interpolate=True to compare on the first run's times",
            {"len_a": int(times_a.size), "len_b": int(times_b.size)},
        )
    inside = (times_a >= times_b[0] - 1e-12) & (times_a <= times_b[-1] + 1e-12)
    if not np.any(inside):
        raise AlignmentError("time axes do not overlap")
    return times_a[inside], inside


def compare_series(times_a: Sequence[float], values_a: Dict[str, Sequence[float]],
                   times_b: Sequence[float], values_b: Dict[str, Sequence[float]],
                   columns: Iterable[str], tol: Optional[float] = None,
                   interpolate: bool = False) -> ComparisonReport:
    times_a = np.asarray(times_a, dtype=float)
    times_b = np.asarray(times_b, dtype=float)
    times, mask = _align(times_a, times_b, interpolate)

    results = {}
    series = {}
    for column in columns:
        for label, values in (("first", values_a), ("second", values_b)):
            if column not in values:
                raise UnknownColumnError(
                    f"column '{column}' missing from the {label} series", {"available": sorted(values)}
                )
        a = np.asarray(values_a[column], dtype=float)
        b = np.asarray(values_b[column], dtype=float)
        if mask is not None:
            a = a[mask]
            b = np.interp(times, times_b, b)
        diff = np.abs(a - b)
        scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), _TINY)
        max_abs = float(diff.max()) if diff.size else 0.0
        results[column] = ColumnDiscrepancy(
            column=column,
            max_abs=max_abs,
            mean_abs=float(diff.mean()) if diff.size else 0.0,
            max_rel=float((diff / scale).max()) if diff.size else 0.0,
            passed=None if tol is None else bool(max_abs <= tol),
        )
        series[column] = diff.tolist()

    report = ComparisonReport(
        columns=results,
        times=times.tolist(),
        series=series,
        tolerance=tol,
        interpolated=mask is not None,
    )
    summary = ", ".join(f"{k}={v.max_abs:.3e}" for k, v in results.items())
    logger.info(f"Compared {len(results)} columns over {times.size} times: {summary}")
    return report
