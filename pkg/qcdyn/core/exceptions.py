from typing import Optional, Dict, Any


class QCDynException(Exception):
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class GridMismatchError(QCDynException):
    pass


class RoleError(QCDynException):
    pass


class ResolutionError(QCDynException):
    pass


class PotentialRangeError(QCDynException):
    pass


class UnsupportedGridError(QCDynException):
    pass


class NumericalConsistencyError(QCDynException):
    pass


class NormalizationDriftError(NumericalConsistencyError):
    pass


class ConfigurationError(QCDynException):
    pass


class CapabilityError(QCDynException):
    pass


class OracleSizeError(QCDynException):
    pass


class HorizonError(QCDynException):
    pass


class ScenarioParseError(QCDynException):
    def __init__(self, message: str, line: int, details: Optional[Dict[str, Any]] = None):
        self.line = line
        super().__init__(f"line {line}: {message}", {"line": line, **(details or {})})


class ScenarioValidationError(QCDynException):
    def __init__(self, key: str, constraint: str):
        self.key = key
        self.constraint = constraint
        super().__init__(f"invalid value for '{key}': {constraint}", {"key": key, "constraint": constraint})


class AlignmentError(QCDynException):
    pass


class UnknownColumnError(QCDynException):
    pass


class SnapshotError(QCDynException):
    pass


class SolverError(QCDynException):
    pass
