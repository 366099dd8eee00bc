from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Optional, List
from enum import Enum

from qcdyn.core.config import settings
from qcdyn.utils.grids import Boundary
from qcdyn.utils.stencils import DerivativeScheme, KineticScheme


class Method(str, Enum):
    FULL_QCLE_CONFIG = "full_qcle_config"
    FULL_QCLE_WIGNER = "full_qcle_wigner"
    MEANFIELD_DISTRIBUTION = "meanfield_distribution"
    EHRENFEST = "ehrenfest"
    HEISENBERG_SYMBOLS = "heisenberg_symbols"
    HEISENBERG_OPERATORS = "heisenberg_operators"
    ORACLE_DENSE = "oracle_dense"


class PotentialKind(str, Enum):
    ZERO = "zero"
    HARMONIC = "harmonic"
    BILINEAR = "bilinear"
    GAUSSIAN_BUMP = "gaussian_bump"
    TABULATED = "tabulated"


class PsiFamily(str, Enum):
    GAUSSIAN = "gaussian"
    SAMPLES = "samples"
    SNAPSHOT = "snapshot"


class QuantumStep(str, Enum):
    AUTO = "auto"
    SPLIT_OPERATOR = "split_operator"
    CRANK_NICOLSON = "crank_nicolson"


class Composition(str, Enum):
    STRANG = "strang"
    YOSHIDA4 = "yoshida4"


OBSERVABLE_NAMES = ("q_c", "p_c", "q_q", "p_q", "H", "correlation_norm")

FULL_METHODS = (Method.FULL_QCLE_CONFIG, Method.FULL_QCLE_WIGNER, Method.ORACLE_DENSE)
WIGNER_METHODS = (Method.FULL_QCLE_WIGNER, Method.HEISENBERG_SYMBOLS)


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class _Section(BaseModel):
    class Config:
        extra = "forbid"
        use_enum_values = False


class GridSection(_Section):
    q_min: float
    q_max: float
    n_q: int = Field(..., ge=2)
    q_boundary: Boundary = Boundary.PERIODIC
    p_min: float
    p_max: float
    n_p: int = Field(..., ge=2)
    p_boundary: Boundary = Boundary.PERIODIC
    xi_min: float
    xi_max: float
    n_xi: int = Field(..., ge=2)
    xi_boundary: Boundary = Boundary.PERIODIC

    @model_validator(mode="after")
    def check_ranges(self):
        for axis in ("q", "p", "xi"):
            if not getattr(self, f"{axis}_max") > getattr(self, f"{axis}_min"):
                raise ValueError(f"{axis}_max must exceed {axis}_min")
        return self


class PotentialSection(_Section):
    kind: PotentialKind = PotentialKind.ZERO
    k: Optional[float] = Field(None, gt=0)
    c: Optional[float] = None
    v0: Optional[float] = None
    w: Optional[float] = Field(None, gt=0)
    r: Optional[List[float]] = None
    values: Optional[List[float]] = None

    @field_validator("r", "values", mode="before")
    def split_samples(cls, v):
        return _split_list(v)

    @model_validator(mode="after")
    def check_parameters(self):
        required = {
            PotentialKind.ZERO: (),
            PotentialKind.HARMONIC: ("k",),
            PotentialKind.BILINEAR: ("c",),
            PotentialKind.GAUSSIAN_BUMP: ("v0", "w"),
            PotentialKind.TABULATED: ("r", "values"),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"potential '{self.kind.value}' needs {', '.join(missing)}")
        return self

    def parameters(self) -> dict:
        names = {
            PotentialKind.ZERO: (),
            PotentialKind.HARMONIC: ("k",),
            PotentialKind.BILINEAR: ("c",),
            PotentialKind.GAUSSIAN_BUMP: ("v0", "w"),
            PotentialKind.TABULATED: ("r", "values"),
        }[self.kind]
        return {name: getattr(self, name) for name in names}


class PhysicsSection(_Section):
    hbar: float = Field(settings.HBAR, gt=0)
    kinetic_scheme: KineticScheme = KineticScheme.FINITE_DIFFERENCE
    q_derivative: DerivativeScheme = DerivativeScheme.CENTRAL
    p_derivative: DerivativeScheme = DerivativeScheme.CENTRAL


class InitialSection(_Section):
    q0: float = 0.0
    p0: float = 0.0
    sigma_q: Optional[float] = Field(None, gt=0)
    sigma_p: Optional[float] = Field(None, gt=0)
    psi: PsiFamily = PsiFamily.GAUSSIAN
    psi_center: float = 0.0
    psi_width: float = Field(1.0, gt=0)
    psi_momentum: float = 0.0
    samples_real: Optional[List[float]] = None
    samples_imag: Optional[List[float]] = None
    snapshot: Optional[str] = None

    @field_validator("samples_real", "samples_imag", mode="before")
    def split_samples(cls, v):
        return _split_list(v)

    @model_validator(mode="after")
    def check_family(self):
        if self.psi is PsiFamily.SAMPLES and self.samples_real is None:
            raise ValueError("psi = samples needs samples_real")
        if self.psi is PsiFamily.SNAPSHOT and not self.snapshot:
            raise ValueError("psi = snapshot needs a snapshot path")
        return self


class MethodSection(_Section):
    name: Method
    quantum_step: QuantumStep = QuantumStep.AUTO
    composition: Composition = Composition(settings.EHRENFEST_COMPOSITION)
    support_threshold: float = Field(settings.SUPPORT_THRESHOLD, ge=0)


class IntegratorSection(_Section):
    dt: float = Field(settings.DEFAULT_DT, gt=0)
    t_final: float = Field(1.0, ge=0)
    stride: int = Field(settings.DEFAULT_STRIDE, ge=1)
    safety: float = Field(settings.CFL_SAFETY, gt=0)
    rescale: bool = False
    drift_limit: float = Field(settings.NORM_DRIFT_LIMIT, gt=0)


class ObservablesSection(_Section):
    columns: List[str] = Field(default_factory=lambda: ["q_c", "p_c", "q_q", "p_q", "H"])

    @field_validator("columns", mode="before")
    def split_columns(cls, v):
        return _split_list(v)

    @field_validator("columns")
    def validate_columns(cls, v):
        unknown = [name for name in v if name not in OBSERVABLE_NAMES]
        if unknown:
            raise ValueError(f"unknown observables {unknown}; choose from {list(OBSERVABLE_NAMES)}")
        if len(set(v)) != len(v):
            raise ValueError("observables must not repeat")
        if not v:
            raise ValueError("at least one observable is required")
        return v


class OutputSection(_Section):
    directory: Optional[str] = None
    name: str = "run"
    snapshots: bool = False
    plot: bool = False


class RunSection(_Section):
    seed: int = 0


class Scenario(BaseModel):
    grid: GridSection
    potential: PotentialSection = Field(default_factory=PotentialSection)
    physics: PhysicsSection = Field(default_factory=PhysicsSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    method: MethodSection
    integrator: IntegratorSection = Field(default_factory=IntegratorSection)
    observables: ObservablesSection = Field(default_factory=ObservablesSection)
    output: OutputSection = Field(default_factory=OutputSection)
    run: RunSection = Field(default_factory=RunSection)

    def constraint_violations(self) -> List[tuple]:
        """Method-specific (key, constraint) pairs that the section models cannot see."""
        grid = self.grid
        method = self.method.name
        problems = []
        if method in WIGNER_METHODS:
            if grid.xi_boundary is not Boundary.PERIODIC:
                problems.append(("grid.xi_boundary", f"method {method.value} needs a periodic quantum grid"))
            if grid.n_xi % 2 == 0:
                problems.append(("grid.n_xi", f"method {method.value} needs an odd number of quantum points"))
        if method is Method.ORACLE_DENSE:
            dimension = grid.n_q * grid.n_p * grid.n_xi ** 2
            if dimension > settings.ORACLE_CAP:
                problems.append(("grid.n_xi", f"dense dimension {dimension} exceeds the oracle cap {settings.ORACLE_CAP}"))
        if method is Method.HEISENBERG_OPERATORS and self.potential.kind in (
            PotentialKind.GAUSSIAN_BUMP, PotentialKind.TABULATED
        ):
            problems.append(("potential.kind", "canonical operators need a polynomial interaction of degree <= 2"))
        if "correlation_norm" in self.observables.columns and method not in FULL_METHODS:
            problems.append(("observables.columns", f"correlation_norm is only available for {[m.value for m in FULL_METHODS]}"))
        if self.physics.kinetic_scheme is KineticScheme.SPECTRAL and grid.xi_boundary is not Boundary.PERIODIC:
            problems.append(("physics.kinetic_scheme", "spectral kinetic term needs a periodic quantum grid"))
        for axis, key in ((grid.q_boundary, "q_derivative"), (grid.p_boundary, "p_derivative")):
            if getattr(self.physics, key) is DerivativeScheme.SPECTRAL and axis is not Boundary.PERIODIC:
                problems.append((f"physics.{key}", "spectral derivatives need a periodic axis"))
        return problems

    class Config:
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "grid": {"q_min": -8.0, "q_max": 8.0, "n_q": 32, "p_min": -6.0, "p_max": 6.0, "n_p": 32,
                         "xi_min": -8.0, "xi_max": 8.0, "n_xi": 31},
                "potential": {"kind": "harmonic", "k": 1.0},
                "initial": {"q0": 1.0, "p0": 0.0, "psi": "gaussian", "psi_center": -1.0, "psi_width": 0.7},
                "method": {"name": "ehrenfest"},
                "integrator": {"dt": 0.01, "t_final": 10.0, "stride": 10},
                "observables": {"columns": ["q_c", "p_c", "q_q", "p_q", "H"]},
            }
        }


SECTION_ORDER = tuple(Scenario.model_fields)
