from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.enums import BraessMode, ExperimentKind, TensorizationKind
from schemas.ensemble import DistributionSpec, EnsembleSpec
from schemas.small_ball import WeightedSumSpec


class ConstantsConfig(BaseModel):
    """Overrides for the absolute constants; unset values fall back to settings"""
    c0: Optional[float] = Field(None, gt=0)
    c_audit: Optional[float] = Field(None, gt=0)
    c1: Optional[float] = Field(None, ge=0)
    c2: Optional[float] = Field(None, gt=0)
    m: Optional[float] = Field(None, gt=0, description="Boundedness constant M")
    s: Optional[float] = Field(None, gt=0, description="delta = (eps * s)^6")
    halasz_c: Optional[float] = Field(None, gt=0)
    tie_tol: Optional[float] = Field(None, ge=0)
    zero_tol: Optional[float] = Field(None, ge=0)

    model_config = ConfigDict(extra="forbid")


class GraphConfig(BaseModel):
    """Either G(n, p) parameters or a path to an edge list"""
    n: Optional[int] = Field(None, ge=2)
    p: Optional[float] = Field(None, gt=0, lt=1)
    edge_list: Optional[str] = Field(None, description="Edge list file: header 'n <count>', then 'u v' lines")

    model_config = ConfigDict(extra="forbid")


class RandomizeConfig(BaseModel):
    """Randomize-coordinates comparison on a random k-dimensional subspace of R^n"""
    n: int = Field(6, ge=2)
    k: int = Field(2, ge=1)
    r_grid: List[float] = Field(default_factory=lambda: [0.1, 0.25])
    trials: int = Field(20_000, ge=100)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_dimension(self) -> "RandomizeConfig":
        if self.k > self.n:
            raise ValueError("k: must not exceed n")
        if any(r < 0 for r in self.r_grid):
            raise ValueError("r_grid: radii must be nonnegative")
        return self


class ProjectionConfig(BaseModel):
    """Density sup of P_E X for random subspaces of dimension d in R^n"""
    n: int = Field(6, ge=2)
    d: List[int] = Field(default_factory=lambda: [1, 2])
    samples: int = Field(200_000, ge=1000)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_dimension(self) -> "ProjectionConfig":
        if any(not 1 <= d <= min(2, self.n) for d in self.d):
            raise ValueError("d: projection dimensions must lie in [1, 2]")
        return self


class DistanceConfig(BaseModel):
    """Small-ball probability of dist(X, H) for a random H of codimension k"""
    n: int = Field(8, ge=2)
    k: int = Field(2, ge=1)
    tau_grid: List[float] = Field(default_factory=lambda: [0.05, 0.1, 0.2])
    trials: int = Field(20_000, ge=100)
    c: Optional[float] = Field(None, gt=0, description="Constant C of (C K tau)^k; settings.projection_c if unset")

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_dimension(self) -> "DistanceConfig":
        if self.k > self.n:
            raise ValueError("k: must not exceed n")
        return self


class SmallBallConfig(BaseModel):
    entry: DistributionSpec = Field(default_factory=lambda: DistributionSpec.uniform(-0.5, 0.5))
    samples: int = Field(100_000, ge=100)
    levy_r: List[float] = Field(default_factory=lambda: [0.25, 1.0])
    superlevel_t: List[float] = Field(
        default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
    )
    l: int = Field(4, ge=1)
    m: int = Field(4, ge=1)
    theta_grid: List[float] = Field(default_factory=lambda: [0.1, 0.25, 0.5])
    gx_trials: int = Field(10_000, ge=100)
    tensorization: List[TensorizationKind] = Field(
        default_factory=lambda: [TensorizationKind.Z1Z2, TensorizationKind.PRODUCT]
    )
    tensorization_samples: int = Field(1_000_000, ge=100)
    d: int = Field(5, ge=2)
    big_m: float = Field(4.0, gt=0, description="M of the Z1Z2 lemma")
    product_l: int = Field(5, ge=1)
    product_c: float = Field(1.0, gt=0)
    randomize: Optional[RandomizeConfig] = None
    projection: Optional[ProjectionConfig] = None
    distance: Optional[DistanceConfig] = None

    model_config = ConfigDict(extra="forbid")


class DensityConfig(BaseModel):
    spec: WeightedSumSpec
    eval_points: Optional[List[float]] = None

    model_config = ConfigDict(extra="forbid")


class BraessConfig(BaseModel):
    mode: BraessMode = BraessMode.EXACT
    m: Optional[int] = Field(None, ge=1)
    frontier: bool = False
    c1_grid: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0])
    c2_grid: List[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])

    model_config = ConfigDict(extra="forbid")


class ExperimentConfig(BaseModel):
    """One experiment per invocation"""
    experiment: ExperimentKind
    master_seed: Optional[int] = Field(None, ge=0, lt=2**64)
    trials: int = Field(1, ge=1)
    threads: Optional[int] = Field(None, ge=1)
    output_dir: Optional[str] = None
    ensemble: Optional[EnsembleSpec] = None
    graph: Optional[GraphConfig] = None
    eps_grid: List[float] = Field(default_factory=lambda: [0.1, 0.25, 0.5])
    eps: Optional[float] = Field(None, gt=0, le=1)
    delta: Optional[float] = Field(None, gt=0)
    t_grid: Optional[List[float]] = None
    constants: ConstantsConfig = Field(default_factory=ConstantsConfig)
    smallball: Optional[SmallBallConfig] = None
    density: Optional[DensityConfig] = None
    braess: Optional[BraessConfig] = None

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "experiment": "deloc_survey",
                "master_seed": 7,
                "trials": 2,
                "ensemble": {"n": 10, "symmetry": "symmetric", "entry": {"kind": "gaussian", "mean": 0.0, "sigma": 1.0}},
                "eps_grid": [0.1, 0.5]
            }
        }
    )


class RunManifest(BaseModel):
    """Written once per run; everything but duration_seconds is reproducible"""
    app_name: str
    app_version: str
    experiment: ExperimentKind
    master_seed: int
    config: Dict[str, Any]
    duration_seconds: float
    row_counts: Dict[str, int]
    outputs: List[str]
    warnings: List[str] = Field(default_factory=list)
