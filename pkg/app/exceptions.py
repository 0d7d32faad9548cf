"""
Exception hierarchy shared by all services.

Each class carries the exit status the command line reports for it.
"""

from typing import List, Optional


class DelocLabError(Exception):
    """Root of all laboratory errors"""
    exit_code: int = 1


class SpecificationError(DelocLabError, ValueError):
    """Invalid distribution or ensemble specification"""
    exit_code = 2

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ArgumentError(DelocLabError, ValueError):
    """Operation argument outside its domain"""
    exit_code = 2


class PreconditionError(ArgumentError):
    pass


class UnsupportedError(ArgumentError):
    """Request exceeds a desk-scale guard"""


class DegeneracyError(DelocLabError):
    exit_code = 3


class NoNonEdgesError(DegeneracyError):
    """The graph is complete, so no edge can be added"""

    def __init__(self, n: int):
        self.n = n
        super().__init__(f"graph on {n} vertices has no non-edges")


class NumericalError(DelocLabError, ArithmeticError):
    """Numerical failure, tagged with the seed of the offending sample"""
    exit_code = 3

    def __init__(self, message: str, seed: Optional[object] = None):
        self.seed = seed
        if seed is not None:
            message = f"{message} (seed={seed})"
        super().__init__(message)


class ConfigValidationError(DelocLabError):
    exit_code = 2

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
