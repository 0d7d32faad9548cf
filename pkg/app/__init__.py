"""
deloc-lab Application Package

Core configuration and the shared exception hierarchy.
"""

from app.config import settings, Settings
from app.exceptions import (
    DelocLabError,
    SpecificationError,
    ArgumentError,
    PreconditionError,
    UnsupportedError,
    DegeneracyError,
    NoNonEdgesError,
    NumericalError,
    ConfigValidationError,
)

__all__ = [
    "settings",
    "Settings",
    "DelocLabError",
    "SpecificationError",
    "ArgumentError",
    "PreconditionError",
    "UnsupportedError",
    "DegeneracyError",
    "NoNonEdgesError",
    "NumericalError",
    "ConfigValidationError",
]
