from pydantic import BaseModel, Field
from typing import Dict, List, Optional


class ColumnDiscrepancy(BaseModel):
    column: str
    max_abs: float = Field(..., description="max_t |a(t) - b(t)|")
    mean_abs: float = Field(..., description="mean_t |a(t) - b(t)|")
    max_rel: float = Field(..., description="max_t |a(t) - b(t)| / max(|a(t)|, |b(t)|, tiny)")
    passed: Optional[bool] = None


class ComparisonReport(BaseModel):
    columns: Dict[str, ColumnDiscrepancy]
    times: List[float] = Field(default_factory=list)
    series: Dict[str, List[float]] = Field(
        default_factory=dict, description="absolute discrepancy per aligned time, per column"
    )
    correlation_norm: Optional[List[float]] = Field(
        None, description="correlation norm of the full run, when one took part"
    )
    tolerance: Optional[float] = None
    interpolated: bool = False
    notes: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.columns.values())

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    class Config:
        json_schema_extra = {
            "example": {
                "columns": {
                    "q_c": {"column": "q_c", "max_abs": 3.1e-9, "mean_abs": 1.2e-9, "max_rel": 2.0e-9, "passed": True}
                },
                "times": [0.0, 0.1, 0.2],
                "series": {"q_c": [0.0, 1.2e-9, 3.1e-9]},
                "tolerance": 1e-7,
                "interpolated": False,
                "notes": [],
            }
        }
