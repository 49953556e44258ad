"""
Error hierarchy for echo-lab
Every error derives from ValidationFailure (bad input, CLI exit 2)
or NumericalFailure (the computation broke down, CLI exit 3)
"""
from typing import Optional


class EchoLabError(Exception):
    """Base class for all echo-lab errors"""


class ValidationFailure(EchoLabError):
    exit_code = 2


class NumericalFailure(EchoLabError):
    exit_code = 3


# ==================== INPUT ERRORS ====================

class InvalidDimensionError(ValidationFailure):
    pass


class InvalidOrderError(ValidationFailure):
    pass


class InvalidExponentsError(ValidationFailure):
    pass


class DegenerateWindowError(ValidationFailure):
    pass


class UnsupportedCutoffError(ValidationFailure):
    pass


class UnsupportedModelError(ValidationFailure):
    pass


class ScenarioValidationError(ValidationFailure):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class TableFormatError(ValidationFailure):
    pass


# ==================== NUMERICAL ERRORS ====================

class SingularMatrixError(NumericalFailure):
    pass


class CausticError(NumericalFailure):
    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message if index is None else f"{message} (index {index})")


class RefinementRequiredError(NumericalFailure):
    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message if index is None else f"{message} (index {index})")


class IntegrationFailureError(NumericalFailure):
    def __init__(self, message: str, last_time: float):
        self.last_time = last_time
        super().__init__(f"{message} (last valid t={last_time:.6g})")


class ModelEvaluationError(NumericalFailure):
    pass


class NonConfiningError(NumericalFailure):
    pass


class SingularOrbitError(NumericalFailure):
    pass


class EigenvalueMinusOneError(NumericalFailure):
    pass


class NoLevelsError(NumericalFailure):
    pass


class AssumptionViolationError(NumericalFailure):
    pass


class EmptyPacketError(NumericalFailure):
    pass


class ResolutionError(NumericalFailure):
    pass


class DomainError(NumericalFailure):
    pass


class TruncationError(NumericalFailure):
    pass


class SolverError(NumericalFailure):
    """A numpy or scipy routine failed inside an experiment"""

    def __init__(self, cause: Exception):
        self.cause = type(cause).__name__
        super().__init__(f"{self.cause}: {cause}")
