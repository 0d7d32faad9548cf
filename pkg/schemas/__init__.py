"""
Schemas Package

Pydantic models for specifications, audit records and experiment configs.
"""

from schemas.ensemble import DistributionSpec, EnsembleSpec, Seed, build_spec

from schemas.linalg import (
    BoundednessReport,
    NegativeMomentAudit,
    DecompositionAudit,
    ColumnDeletionAudit,
    MassResult,
    NetReport
)

from schemas.deloc import LocWitness, LocReport, SurveyRow, SurveySummary, DelocSurvey

from schemas.small_ball import (
    WeightedSumSpec,
    SuperlevelReport,
    ProjectionDensityReport,
    SmallBallReport,
    TensorizationRow,
    RandomizeCoordinatesReport,
    DistanceSmallBallRow
)

from schemas.graph import (
    GraphAuditReport,
    CrossDomainReport,
    SpectralGapResult,
    BraessReport,
    LaplacianDelocReport,
    NodalSummary
)

from schemas.experiment import ExperimentConfig, RunManifest

__all__ = [
    # Ensemble schemas
    "DistributionSpec",
    "EnsembleSpec",
    "Seed",
    "build_spec",

    # Linear algebra audits
    "BoundednessReport",
    "NegativeMomentAudit",
    "DecompositionAudit",
    "ColumnDeletionAudit",
    "MassResult",
    "NetReport",

    # Delocalization
    "LocWitness",
    "LocReport",
    "SurveyRow",
    "SurveySummary",
    "DelocSurvey",

    # Small ball
    "WeightedSumSpec",
    "SuperlevelReport",
    "ProjectionDensityReport",
    "SmallBallReport",
    "TensorizationRow",
    "RandomizeCoordinatesReport",
    "DistanceSmallBallRow",

    # Graphs
    "GraphAuditReport",
    "CrossDomainReport",
    "SpectralGapResult",
    "BraessReport",
    "LaplacianDelocReport",
    "NodalSummary",

    # Experiments
    "ExperimentConfig",
    "RunManifest",
]
