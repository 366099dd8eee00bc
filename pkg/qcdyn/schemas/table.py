from pydantic import BaseModel, Field, model_validator
from typing import Dict, List

COLUMN_UNITS = {
    "t": "time",
    "q_c": "length",
    "p_c": "momentum",
    "q_q": "length",
    "p_q": "momentum",
    "H": "energy",
    "energy": "energy",
    "correlation_norm": "1",
    "normalization": "1",
}


class TimeSeriesTable(BaseModel):
    """Rows of (t, values...) with a fixed column set; t is the first column."""

    columns: List[str]
    units: Dict[str, str] = Field(default_factory=dict)
    rows: List[List[float]] = Field(default_factory=list)
    metadata: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_shape(self):
        if not self.columns or self.columns[0] != "t":
            raise ValueError("the first column must be 't'")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} values, expected {width}")
        times = [row[0] for row in self.rows]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("t must be strictly increasing")
        return self

    @classmethod
    def from_series(cls, times: List[float], series: Dict[str, List[float]],
                    metadata: Dict[str, str] = None) -> "TimeSeriesTable":
        columns = ["t", *series]
        rows = [[float(t), *(float(series[name][i]) for name in series)] for i, t in enumerate(times)]
        units = {name: COLUMN_UNITS.get(name, "1") for name in columns}
        return cls(columns=columns, units=units, rows=rows, metadata=metadata or {})

    @property
    def times(self) -> List[float]:
        return [row[0] for row in self.rows]

    def column(self, name: str) -> List[float]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def series(self) -> Dict[str, List[float]]:
        return {name: self.column(name) for name in self.columns[1:]}
