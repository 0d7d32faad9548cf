from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import linalg

from app.config import settings
from app.exceptions import ArgumentError


@dataclass(frozen=True)
class SpectralData:
    """
    Eigenpairs of one matrix sample.

    Eigenvalues are sorted by real part, then imaginary part, descending.
    Eigenvectors are the columns of ``eigenvectors``; each has unit norm and its
    largest-magnitude coordinate is positive real.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    seed: Optional[object] = None

    def __repr__(self):
        return f"<SpectralData(n={self.n}, real={self.is_real}, max_residual={self.max_residual:.3e})>"

    @property
    def n(self) -> int:
        return int(self.eigenvectors.shape[0])

    @property
    def is_real(self) -> bool:
        """Check if both eigenvalues and eigenvectors are real"""
        return not (np.iscomplexobj(self.eigenvalues) or np.iscomplexobj(self.eigenvectors))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    def vector(self, index: int) -> np.ndarray:
        return self.eigenvectors[:, index]


@dataclass(frozen=True)
class SubspaceBasis:
    """
    Orthonormal basis of a subspace E of R^n or C^n, stored as the columns of ``basis``.
    """
    basis: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.basis)
        if q.ndim != 2 or q.shape[1] < 1 or q.shape[1] > q.shape[0]:
            raise ArgumentError(f"basis must be n x k with 1 <= k <= n, got shape {q.shape}")
        gram = q.conj().T @ q
        if np.max(np.abs(gram - np.eye(q.shape[1]))) > settings.orthonormal_tol:
            raise ArgumentError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", q)

    def __repr__(self):
        return f"<SubspaceBasis(n={self.n}, k={self.k}, complex={self.is_complex})>"

    @property
    def n(self) -> int:
        """Ambient dimension"""
        return int(self.basis.shape[0])

    @property
    def k(self) -> int:
        """Dimension of the subspace"""
        return int(self.basis.shape[1])

    @property
    def is_complex(self) -> bool:
        return bool(np.iscomplexobj(self.basis))

    @classmethod
    def span(cls, vectors: Iterable[np.ndarray]) -> "SubspaceBasis":
        """Orthonormalise the span of the given vectors"""
        m = np.column_stack([np.asarray(v) for v in vectors])
        q = linalg.orth(m, rcond=settings.rank_tol)
        if q.shape[1] == 0:
            raise ArgumentError("vectors span the zero subspace")
        return cls(q)

    @classmethod
    def full(cls, n: int) -> "SubspaceBasis":
        return cls(np.eye(n))

    @classmethod
    def coordinates(cls, n: int, indices: Iterable[int]) -> "SubspaceBasis":
        """Span of the coordinate vectors e_i, i in indices"""
        idx = sorted(set(int(i) for i in indices))
        return cls(np.eye(n)[:, idx])
