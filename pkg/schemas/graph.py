from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.enums import BraessMode


class PropertyCheck(BaseModel):
    """One item of the G(n, p) property audit"""
    item: int = Field(..., ge=1, le=5)
    name: str
    value: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    holds: Optional[bool] = Field(None, description="None when the check was skipped")
    heuristic: bool = False
    detail: str = ""


class GraphAuditReport(BaseModel):
    n: int
    p: float
    edge_count: int
    checks: List[PropertyCheck]

    def check(self, item: int) -> List[PropertyCheck]:
        return [c for c in self.checks if c.item == item]

    @property
    def exact_items_hold(self) -> bool:
        """Items 3 to 5, the exactly computable ones"""
        return all(c.holds for c in self.checks if c.item >= 3 and c.holds is not None)


class CrossDomainReport(BaseModel):
    """Minimum number of opposite-sign neighbours over P and over N"""
    min_positive_to_negative: Optional[int] = None
    min_negative_to_positive: Optional[int] = None
    degenerate: bool = False


class SpectralGapResult(BaseModel):
    """Second-smallest normalized-Laplacian eigenvalue and its eigenvector"""
    lambda1: float
    lambda2: float
    lambda3: Optional[float] = None
    vector: np.ndarray
    multiplicity_flag: bool = False

    model_config = ConfigDict(arbitrary_types_allowed=True)


class BraessPair(BaseModel):
    u: int
    w: int
    lambda2_new: float
    decreased: bool
    tie: bool = Field(False, description="|lambda2_new - lambda2_base| within tie_tol")
    sufficient_condition: bool
    certificate_bound: Optional[float] = Field(None, description="Rayleigh-quotient upper bound on lambda2_new")
    certified: bool = False


class BraessReport(BaseModel):
    """Effect of every tested edge addition on the spectral gap"""
    n: int
    lambda2_base: float
    mode: BraessMode
    m: Optional[int] = None
    tested: List[BraessPair]
    a_minus: float
    same_sign_fraction: float
    degree_hypothesis: bool
    multiplicity_flag: bool = False
    c1: float
    c2: float

    @model_validator(mode="after")
    def _fraction_matches(self) -> "BraessReport":
        if self.tested:
            expected = sum(p.decreased for p in self.tested) / len(self.tested)
            if abs(expected - self.a_minus) > 1e-15:
                raise ValueError("a_minus must equal the fraction of decreased pairs")
        return self


class FrontierRow(BaseModel):
    c1: float
    c2: float
    flagged: int
    false_positives: int
    zero_false_positives: bool


class LaplacianDelocReport(BaseModel):
    lambda2: float
    linf: float
    frac_below: float
    threshold: float = Field(..., description="n^(-5/8)")
    eps_grid: List[float]
    min_mass: List[float]
    multiplicity_flag: bool = False
    adjacency_residual: float = Field(..., description="||A x - (1 - lambda2) d x|| / ||x|| for x = d^(1/2) D^(-1/2) f")


class WeylAuditRow(BaseModel):
    u: int
    w: int
    perturbation_norm: float
    max_shift: float
    holds: bool


class NodalRow(BaseModel):
    trial: int
    index: int
    eigenvalue: float
    domains: int
    positive_domains: int
    negative_domains: int
    zero_count: int
    residual_count: int
    min_positive_to_negative: Optional[int] = None
    min_negative_to_positive: Optional[int] = None


class NodalSummary(BaseModel):
    trials: int
    n: int
    p: float
    vectors: int
    two_domain_fraction: float = Field(..., description="Fraction with exactly 2 domains and an empty zero set")
    max_residual_count: int
    residual_reference: float = Field(..., description="C log^2 n / p^2, reference only")
