from typing import Any, Sequence


class BiphotonError(Exception):
    """Base class for every error raised by common_lib"""


class InvalidGeometryError(BiphotonError, ValueError):
    pass


class ConfigError(BiphotonError, ValueError):
    pass


class QuadratureNonConvergenceError(BiphotonError, ArithmeticError):
    pass


class InsufficientDomainError(BiphotonError, ValueError):
    pass


class InsufficientPowerError(BiphotonError, ValueError):
    pass


class BoundaryLeakageError(BiphotonError, ValueError):
    pass


class OverlappingSegmentsError(BiphotonError, ValueError):
    pass


class EvanescentModeError(BiphotonError, ValueError):
    def __init__(self, message: str, indices: Sequence[tuple[int, ...]] = ()):
        super().__init__(message)
        self.indices = [tuple(index) for index in indices]


class OptimizerNonConvergenceError(BiphotonError, ArithmeticError):
    def __init__(self, message: str, diagnostics: Sequence[dict[str, Any]] = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


NUMERICAL_ERRORS = (
    QuadratureNonConvergenceError,
    InsufficientDomainError,
    InsufficientPowerError,
    BoundaryLeakageError,
    EvanescentModeError,
    OptimizerNonConvergenceError,
)
