"""
Exception hierarchy for the partial integral equation solver.

Every error carries the exit code the command line maps it to, so the
application entry point can translate failures without knowing where they
were raised.
"""

from typing import Any, Dict, Optional


class PieError(Exception):
    """Base class for all solver errors."""

    exit_code = 3

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable summary written to stdout by the CLI."""
        return {"error": type(self).__name__, "message": str(self)}


class ConfigError(PieError):
    """Malformed job configuration or environment setting."""

    exit_code = 2


class InvalidArgumentError(PieError):
    """An operation received an argument outside its precondition."""

    exit_code = 2


class ExpressionSyntaxError(PieError):
    """Expression text does not follow the grammar."""

    exit_code = 2

    def __init__(self, message: str, text: str, offset: int, expected: Optional[str] = None):
        self.text = text
        self.offset = offset
        self.expected = expected
        detail = f"{message} at byte offset {offset}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class UnknownIdentifierError(ExpressionSyntaxError):
    """Identifier is neither a variable nor a known function."""


class ArityError(ExpressionSyntaxError):
    """Function called with the wrong number of arguments."""


class NumericError(PieError):
    """A numerical step failed."""

    exit_code = 3


class ExpressionDomainError(NumericError):
    """Evaluation left the real domain of a function (log, sqrt, division, power)."""

    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message} in '{subexpression}'")


class KernelEvaluationError(NumericError):
    """Kernel or right-hand side produced a non-finite value."""

    def __init__(self, message: str, point: tuple):
        self.point = point
        super().__init__(f"{message} at {point}")


class NearSingularSliceError(NumericError):
    """The slice determinant lies inside the degeneracy band."""

    def __init__(self, y: float, abs_det: float):
        self.y = y
        self.abs_det = abs_det
        super().__init__(f"slice y={y!r} is near-singular (|det|={abs_det:.3e})")


class ConvergenceDomainError(NumericError):
    """Series evaluation requested outside its convergence region."""


class ConvergenceError(NumericError):
    """An iteration diverged or failed to reach its tolerance."""


class DegenerateSystemError(NumericError):
    """A dense system is singular at working precision."""


class SizeLimitError(NumericError):
    """Requested discretization exceeds the dense-matrix guard."""


class InvalidWitnessError(NumericError):
    """Multiplicity witness has zero norm."""


class IndeterminateClassificationError(PieError):
    """The profile cannot resolve whether a near-zero of D1 is a zero."""

    exit_code = 4


class CharacteristicParameterError(PieError):
    """Solve requested at a characteristic number."""

    exit_code = 5

    def __init__(self, message: str, parameter_class: Any = None):
        self.parameter_class = parameter_class
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        if self.parameter_class is not None:
            data["class"] = self.parameter_class.to_dict()
        return data


class ConditionIIDivergentError(PieError):
    """Essential number whose right-hand side violates condition (II)."""

    exit_code = 6

    def __init__(self, message: str, report: Any = None, parameter_class: Any = None):
        self.report = report
        self.parameter_class = parameter_class
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        if self.parameter_class is not None:
            data["class"] = self.parameter_class.to_dict()
        if self.report is not None:
            data["condition_II"] = self.report.to_dict()
        return data


class ConsistencyError(PieError):
    """Two independent computations disagree."""

    exit_code = 7


class PropertyViolationError(ConsistencyError):
    """A structural identity (adjoint, duality) failed numerically."""
