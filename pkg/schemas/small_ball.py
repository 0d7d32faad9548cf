import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.enums import TensorizationKind
from schemas.ensemble import DistributionSpec


class WeightedSumSpec(BaseModel):
    """Law of sum_j a_j X_j (+ optional N(0, smoothing_sigma^2)) with continuous X_j"""
    dists: List[DistributionSpec]
    weights: List[float]
    smoothing_sigma: float = Field(0.0, ge=0.0)

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "dists": [{"kind": "uniform", "a": -0.5, "b": 0.5}, {"kind": "uniform", "a": -0.5, "b": 0.5}],
                "weights": [0.7071067811865476, 0.7071067811865476],
                "smoothing_sigma": 0.0
            }
        }
    )

    @model_validator(mode="after")
    def _check_weights(self) -> "WeightedSumSpec":
        if len(self.dists) != len(self.weights):
            raise ValueError("weights: must have one weight per distribution")
        if not self.dists:
            raise ValueError("dists: at least one distribution is required")
        for j, dist in enumerate(self.dists):
            if not dist.is_continuous:
                raise ValueError(f"dists.{j}: {dist.kind.value} has no density")
        total = math.fsum(w * w for w in self.weights)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"weights: sum of squares must be 1, got {total!r}")
        return self

    def nonzero_terms(self):
        """(dist, weight) pairs with the exact zeros dropped"""
        return [(d, w) for d, w in zip(self.dists, self.weights) if w != 0.0]


class SuperlevelReport(BaseModel):
    """Measure of {x : |phi(x)| > t} with both decay bounds"""
    t: float
    measure: float
    window: float = Field(..., description="Half-width of the integration window")
    bound_low_t: float = Field(..., description="2 pi / t^2, stated for t < 3/4")
    holds_low_t: bool
    bound_high_t: float = Field(..., description="C sqrt(1 - t^2), stated for t >= 3/4")
    holds_high_t: bool
    applicable_holds: bool = Field(..., description="Check of the bound stated for this t")


class ProjectionDensityReport(BaseModel):
    d: int
    sup: float
    stderr: float = 0.0
    bound: float = Field(..., description="(C K)^d")
    holds: bool
    method: str


class SmallBallReport(BaseModel):
    """P(||Gx|| <= theta sqrt(l)) against (C0 theta)^l"""
    l: int
    m: int
    theta: float
    trials: int
    empirical: float
    stderr: float
    bound: float
    holds: bool
    c0_min: float = Field(..., description="Smallest C0 with empirical <= (C0 theta)^l")
    row_empirical: float = Field(..., description="Empirical P(|<G_j, x>| <= theta) over all rows")
    row_bound: Optional[float] = Field(None, description="C0 K theta; absent for discrete entries")


class TensorizationRow(BaseModel):
    kind: TensorizationKind
    t: float
    empirical: float
    stderr: float
    bound: float
    holds: bool


class RandomizeCoordinatesReport(BaseModel):
    lhs: float = Field(..., description="L(P_E Z, r)")
    rhs: float = Field(..., description="L(P_Real(E) Z_hat, 2r)^(1/2)")
    margin: float
    holds: bool


class DistanceSmallBallRow(BaseModel):
    """P(dist(X, H) < tau sqrt(k)) for a subspace H of codimension k"""
    tau: float
    k: int
    empirical: float
    stderr: float
    bound: float
    holds: bool
    c_min: float
