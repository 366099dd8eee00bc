from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    PROJECT_NAME: str = "qcdyn - quantum-classical dynamics simulator"
    VERSION: str = "1.0.0"
    DEBUG: bool = False

    HBAR: float = 1.0

    HERMITIAN_TOL: float = 1e-10
    NORM_TOL: float = 1e-8
    WIGNER_NORM_TOL: float = 1e-6
    WAVEFUNCTION_NORM_TOL: float = 1e-10
    NORM_DRIFT_LIMIT: float = 1e-4
    MEAN_IMAG_TOL: float = 1e-9
    POSITIVITY_TOL: float = 1e-8

    ORACLE_CAP: int = 4096
    CFL_SAFETY: float = 0.5
    SMEARING_CELLS: float = 3.0
    MIN_SMEARING_CELLS: float = 2.0
    SUPPORT_THRESHOLD: float = 1e-12
    EDGE_MASS_TOL: float = 1e-6
    MIN_TRAJECTORIES: int = 1

    DEFAULT_DT: float = 0.01
    DEFAULT_STRIDE: int = 10
    EHRENFEST_COMPOSITION: str = "yoshida4"

    CSV_SIGNIFICANT_DIGITS: int = 17
    OUTPUT_DIR: str = "runs"
    OUTPUT_DIR_OVERRIDE: Optional[str] = None

    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"
    LOG_TO_FILE: bool = False

    class Config:
        env_file = ".env"
        env_prefix = "QCDYN_"
        case_sensitive = True
        extra = "ignore"


settings = Settings()
