import math
from typing import Any, Dict, Optional, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_serializer, field_validator, model_validator
from scipy import special

from app.exceptions import SpecificationError
from models.enums import DistributionKind, SymmetryClass
from utils.seeding import substream, trial_key

M = TypeVar("M", bound=BaseModel)

_REQUIRED_PARAMS = {
    DistributionKind.UNIFORM: ("a", "b"),
    DistributionKind.GAUSSIAN: ("mean", "sigma"),
    DistributionKind.BERNOULLI_SYM: (),
    DistributionKind.BERNOULLI: ("p",),
    DistributionKind.POINT_MASS: ("c",),
}


def build_spec(model: Type[M], data: Dict[str, Any]) -> M:
    """Validate data into a spec model, raising SpecificationError with the offending field"""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        message = first["msg"]
        if not field and ":" in message:
            field, _, message = message.partition(":")
            field = field.removeprefix("Value error, ").strip()
        raise SpecificationError(field or model.__name__, message.strip()) from e


class DistributionSpec(BaseModel):
    """Scalar entry law with its density bound K (absent for discrete kinds)"""
    kind: DistributionKind
    a: Optional[float] = Field(None, description="Uniform lower end")
    b: Optional[float] = Field(None, description="Uniform upper end")
    mean: Optional[float] = Field(None, description="Gaussian mean")
    sigma: Optional[float] = Field(None, description="Gaussian standard deviation")
    p: Optional[float] = Field(None, description="Bernoulli success probability")
    c: Optional[float] = Field(None, description="Point mass location")
    density_bound: Optional[float] = Field(None, description="Essential sup of the density")

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {"kind": "uniform", "a": -0.5, "b": 0.5}
        }
    )

    @model_validator(mode="after")
    def _check_parameters(self) -> "DistributionSpec":
        for name in _REQUIRED_PARAMS[self.kind]:
            if getattr(self, name) is None:
                raise ValueError(f"{name}: required for {self.kind.value}")
        if self.kind is DistributionKind.UNIFORM and not self.a < self.b:
            raise ValueError("b: uniform requires a < b")
        if self.kind is DistributionKind.GAUSSIAN and not self.sigma > 0:
            raise ValueError("sigma: gaussian requires sigma > 0")
        if self.kind is DistributionKind.BERNOULLI and not 0 < self.p < 1:
            raise ValueError("p: bernoulli requires p in (0, 1)")

        exact = self._exact_density_bound()
        if self.density_bound is not None:
            if exact is None or not math.isclose(self.density_bound, exact, rel_tol=1e-12):
                raise ValueError(f"density_bound: must equal the density sup {exact}")
        self.density_bound = exact
        return self

    def _exact_density_bound(self) -> Optional[float]:
        if self.kind is DistributionKind.UNIFORM:
            return 1.0 / (self.b - self.a)
        if self.kind is DistributionKind.GAUSSIAN:
            return 1.0 / (self.sigma * math.sqrt(2.0 * math.pi))
        return None

    # ==================== Constructors ====================

    @classmethod
    def uniform(cls, a: float, b: float) -> "DistributionSpec":
        return build_spec(cls, {"kind": "uniform", "a": a, "b": b})

    @classmethod
    def gaussian(cls, mean: float = 0.0, sigma: float = 1.0) -> "DistributionSpec":
        return build_spec(cls, {"kind": "gaussian", "mean": mean, "sigma": sigma})

    @classmethod
    def bernoulli_sym(cls) -> "DistributionSpec":
        return build_spec(cls, {"kind": "bernoulli_sym"})

    @classmethod
    def bernoulli(cls, p: float) -> "DistributionSpec":
        return build_spec(cls, {"kind": "bernoulli", "p": p})

    @classmethod
    def point_mass(cls, c: float) -> "DistributionSpec":
        return build_spec(cls, {"kind": "point_mass", "c": c})

    # ==================== Law helpers ====================

    @property
    def is_continuous(self) -> bool:
        return self.kind.is_continuous

    @property
    def half_width(self) -> float:
        """Radius of an interval around the center holding essentially all mass"""
        if self.kind is DistributionKind.UNIFORM:
            return 0.5 * (self.b - self.a)
        if self.kind is DistributionKind.GAUSSIAN:
            return 8.0 * self.sigma
        return 1.0 if self.kind is not DistributionKind.POINT_MASS else 0.0

    @property
    def center(self) -> float:
        if self.kind is DistributionKind.UNIFORM:
            return 0.5 * (self.a + self.b)
        if self.kind is DistributionKind.GAUSSIAN:
            return self.mean
        if self.kind is DistributionKind.BERNOULLI:
            return self.p
        if self.kind is DistributionKind.POINT_MASS:
            return self.c
        return 0.0

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF transform of uniform(0, 1) draws"""
        u = np.asarray(u, dtype=np.float64)
        if self.kind is DistributionKind.UNIFORM:
            return self.a + (self.b - self.a) * u
        if self.kind is DistributionKind.GAUSSIAN:
            return self.mean + self.sigma * special.ndtri(u)
        if self.kind is DistributionKind.BERNOULLI_SYM:
            return np.where(u < 0.5, -1.0, 1.0)
        if self.kind is DistributionKind.BERNOULLI:
            return (u < self.p).astype(np.float64)
        return np.full(u.shape, self.c, dtype=np.float64)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind is DistributionKind.UNIFORM:
            return rng.uniform(self.a, self.b, size=size)
        if self.kind is DistributionKind.GAUSSIAN:
            return rng.normal(self.mean, self.sigma, size=size)
        if self.kind is DistributionKind.BERNOULLI_SYM:
            return 2.0 * rng.integers(0, 2, size=size) - 1.0
        if self.kind is DistributionKind.BERNOULLI:
            return (rng.random(size=size) < self.p).astype(np.float64)
        return np.full(size, self.c, dtype=np.float64)

    def label(self) -> str:
        params = {k: v for k, v in self.model_dump(exclude={"kind", "density_bound"}).items() if v is not None}
        inner = ",".join(f"{k}={v!r}" for k, v in params.items())
        return f"{self.kind.value}({inner})"


class Seed(BaseModel):
    """Master seed plus trial index; identical pairs reproduce identical samples"""
    master: int = Field(0, ge=0, lt=2**64)
    trial_index: int = Field(0, ge=0)

    model_config = ConfigDict(frozen=True, extra="forbid")

    def __str__(self):
        return f"{self.master}:{self.trial_index}"

    def key(self, stream: int = 0) -> int:
        """64-bit key for counter-based pair draws"""
        return trial_key(self.master, self.trial_index, stream)

    def generator(self, stream: int = 0) -> np.random.Generator:
        """Independent numpy Generator for this (master, trial, stream)"""
        return np.random.default_rng(substream(self.master, self.trial_index, stream))


class EnsembleSpec(BaseModel):
    """Matrix dimension, symmetry class, entry law and optional shift / fixed imaginary part"""
    n: int = Field(..., gt=0, description="Matrix side")
    symmetry: SymmetryClass = SymmetryClass.IID
    entry: DistributionSpec
    shift_mu: float = 0.0
    fixed_imaginary: Optional[np.ndarray] = Field(None, description="n x n real matrix held fixed across trials")

    model_config = ConfigDict(
        extra="forbid",
        arbitrary_types_allowed=True,
        json_schema_extra={
            "example": {
                "n": 400,
                "symmetry": "symmetric",
                "entry": {"kind": "uniform", "a": -1.7320508075688772, "b": 1.7320508075688772},
                "shift_mu": 0.0
            }
        }
    )

    @field_validator("fixed_imaginary", mode="before")
    @classmethod
    def _as_array(cls, value):
        if value is None:
            return None
        arr = np.asarray(value)
        if np.iscomplexobj(arr) or not np.all(np.isfinite(arr)):
            raise ValueError("fixed_imaginary must be a finite real matrix")
        return arr.astype(np.float64)

    @model_validator(mode="after")
    def _check_shape(self) -> "EnsembleSpec":
        if self.fixed_imaginary is not None and self.fixed_imaginary.shape != (self.n, self.n):
            raise ValueError(f"fixed_imaginary: expected shape ({self.n}, {self.n})")
        return self

    @field_serializer("fixed_imaginary")
    def _serialize_imaginary(self, value: Optional[np.ndarray]):
        return None if value is None else value.tolist()

    @property
    def is_complex(self) -> bool:
        return self.fixed_imaginary is not None
