"""
Exception hierarchy for the gluing toolkit.

Every error carries the process exit code the command-line driver reports
when it escapes a command.
"""

from typing import Optional, Sequence


class GluingError(Exception):
    """Base class for every domain error."""

    exit_code: int = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DimensionError(GluingError):
    pass


class SymmetryError(GluingError):
    pass


class NotPositiveDefiniteError(GluingError):
    def __init__(self, message: str, smallest_eigenvalue: float):
        super().__init__(f"{message} (smallest eigenvalue {smallest_eigenvalue:.3e})")
        self.smallest_eigenvalue = smallest_eigenvalue


class StencilClearanceError(GluingError):
    def __init__(self, point: Sequence[float], reach: float):
        super().__init__(
            f"point {list(point)} lies within {reach:.2e} of the chart edge"
        )
        self.point = list(point)
        self.reach = reach


class FermiFormError(GluingError):
    pass


class BoundaryIsometryError(GluingError):
    pass


class TransportError(GluingError):
    pass


class FocalPointError(GluingError):
    pass


class InfeasibleProfileError(GluingError):
    pass


class MollifierError(GluingError):
    pass


class HypothesisRefusedError(GluingError):
    exit_code = 3

    def __init__(self, message: str, offending_value: Optional[float] = None):
        super().__init__(message)
        self.offending_value = offending_value


class UnknownScenarioError(GluingError):
    exit_code = 4


class ExpressionSyntaxError(GluingError):
    exit_code = 5

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.reason = message
        self.line = line
        self.column = column


class ConfigParseError(ExpressionSyntaxError):
    pass


class PerturbationError(GluingError):
    pass


class ScenarioMetadataError(GluingError):
    """Declared scenario metadata disagrees with the metrics it describes."""

    exit_code = 5
