"""
Domain Models Package

Enums and array-bearing entities shared by the laboratory services.
"""

from models.enums import (
    DistributionKind,
    SymmetryClass,
    TensorizationKind,
    BraessMode,
    ExperimentKind,
)
from models.spectral import SpectralData, SubspaceBasis
from models.profile import MassProfile, DensityCurve
from models.graph import GraphSample, GraphMatrices, NodalDecomposition

__all__ = [
    "DistributionKind",
    "SymmetryClass",
    "TensorizationKind",
    "BraessMode",
    "ExperimentKind",
    "SpectralData",
    "SubspaceBasis",
    "MassProfile",
    "DensityCurve",
    "GraphSample",
    "GraphMatrices",
    "NodalDecomposition",
]
