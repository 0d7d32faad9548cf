from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class LocWitness(BaseModel):
    """Eigenvector with a light coordinate set"""
    eigen_index: int = Field(..., ge=0, description="Position in eigenvalue order")
    indices: List[int] = Field(..., description="0-based coordinates, ascending")
    mass: float = Field(..., ge=0.0)


class LocReport(BaseModel):
    """Outcome of the localization event Loc(A, eps, delta)"""
    event: bool
    witness: Optional[LocWitness] = None
    eps: float
    delta: float

    @model_validator(mode="after")
    def _witness_matches_event(self) -> "LocReport":
        has_witness = self.witness is not None and self.witness.mass < self.delta
        if self.event != has_witness:
            raise ValueError("event must be true exactly when a witness with mass < delta is present")
        return self


class SurveyRow(BaseModel):
    """One eigenvector of one trial"""
    trial: int
    index: int
    eigenvalue_re: float
    eigenvalue_im: float
    linf: float
    min_mass: List[float] = Field(..., description="One value per eps grid point")


class SurveySummary(BaseModel):
    """Aggregate over all rows of a survey"""
    trials: int
    n: int
    eps_grid: List[float]
    min_mass: List[float] = Field(..., description="Minimum over all rows, per eps grid point")
    max_linf: float
    eps: float
    delta: float
    localized_trials: int
    localization_frequency: float
    m: float = Field(..., gt=0, description="Boundedness constant M")
    bounded_trials: int = Field(..., ge=0, description="Trials with ||A|| <= M sqrt(n)")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "trials": 50, "n": 400, "eps_grid": [0.1, 0.5],
                "min_mass": [0.011, 0.2], "max_linf": 0.21,
                "eps": 0.1, "delta": 0.0001,
                "localized_trials": 0, "localization_frequency": 0.0,
                "m": 3.0, "bounded_trials": 50
            }
        }
    )


class DelocSurvey(BaseModel):
    rows: List[SurveyRow]
    summary: SurveySummary
