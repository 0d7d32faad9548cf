"""
Services Package

Numerical services of the laboratory, each exposed through a singleton getter.
"""

from services.ensemble_service import EnsembleService, get_ensemble_service
from services.linalg_service import LinalgService, get_linalg_service
from services.deloc_service import DelocService, get_deloc_service
from services.small_ball_service import SmallBallService, get_small_ball_service
from services.graph_service import GraphService, get_graph_service
from services.report_store import ReportStore
from services.experiment_service import ExperimentService, get_experiment_service, run_experiment, validate_config

__all__ = [
    "EnsembleService",
    "get_ensemble_service",
    "LinalgService",
    "get_linalg_service",
    "DelocService",
    "get_deloc_service",
    "SmallBallService",
    "get_small_ball_service",
    "GraphService",
    "get_graph_service",
    "ReportStore",
    "ExperimentService",
    "get_experiment_service",
    "run_experiment",
    "validate_config",
]
