from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class BoundednessReport(BaseModel):
    """Boundedness event ||A|| <= M sqrt(n)"""
    holds: bool
    norm: float = Field(..., ge=0.0, description="Operator norm (largest singular value)")
    threshold: float = Field(..., description="M * sqrt(n)")


class NegativeMomentAudit(BaseModel):
    """Both sides of sum s_j^-2 = sum dist(B_j, H_j)^-2"""
    lhs: float
    rhs: float
    relative_gap: float
    holds: bool


class DecompositionAudit(BaseModel):
    """Evaluation of s_A >= s_B * s_G / (4 ||A||) for one row split"""
    s_A: float
    s_B: float
    s_G: float
    norm_A: float
    bound: float
    bound_sharp: float = Field(..., description="s_B * s_G / (2 (s_B + ||A||)), the pre-simplified form")
    holds: bool
    holds_sharp: bool
    degenerate: bool = Field(False, description="E+ or E- is the zero space")
    dim_plus: int
    dim_minus: int

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "s_A": 1.0, "s_B": 1.0, "s_G": 1.0, "norm_A": 1.0,
                "bound": 0.25, "bound_sharp": 0.25, "holds": True, "holds_sharp": True,
                "degenerate": False, "dim_plus": 1, "dim_minus": 1
            }
        }
    )


class ColumnDeletionRow(BaseModel):
    column: int
    distance: float
    distance_deleted: float
    holds: bool


class ColumnDeletionAudit(BaseModel):
    """dist(B_j, H_j) >= dist(B'_j, H'_j) after removing coordinate j"""
    rows: List[ColumnDeletionRow]
    holds: bool


class MassResult(BaseModel):
    """Smallest l2 mass over coordinate sets of size ceil(eps * n)"""
    mass: float
    indices: List[int] = Field(..., description="0-based coordinates realising the minimum, ascending")
    k: int


class NetReport(BaseModel):
    k: int
    eps: float
    cardinality: int
    cardinality_bound: float
    covering_radius: Optional[float] = None
