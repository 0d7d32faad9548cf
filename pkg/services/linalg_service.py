from typing import Iterable, List, Optional, Sequence
import logging
import math

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from app.config import settings
from app.exceptions import ArgumentError, DegeneracyError, NumericalError, UnsupportedError
from models.spectral import SpectralData, SubspaceBasis
from schemas.linalg import (
    BoundednessReport,
    ColumnDeletionAudit,
    ColumnDeletionRow,
    DecompositionAudit,
    NegativeMomentAudit,
    NetReport,
)
from utils.seeding import substream

logger = logging.getLogger(__name__)


def _inf_norm_ratio(matrix: np.ndarray) -> float:
    """inf over unit x of ||Mx||_2 (zero when M has more columns than rows)"""
    rows, cols = matrix.shape
    if cols == 0:
        return math.inf
    if rows < cols:
        return 0.0
    return float(linalg.svdvals(matrix)[-1])


def _normalize_phase(vectors: np.ndarray) -> np.ndarray:
    """Unit columns whose largest-magnitude coordinate is positive real (ties: lowest index)"""
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    top = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[top, np.arange(vectors.shape[1])]
    phases = pivots / np.abs(pivots)
    return vectors * np.conj(phases)


class LinalgService:
    """
    Dense linear-algebra kernels and audits of the matrix identities used by the
    invertibility argument.
    """

    # ==================== Singular values ====================

    def singular_values(self, matrix: np.ndarray) -> np.ndarray:
        """Nonincreasing singular values, l ∧ m of them"""
        return linalg.svdvals(np.asarray(matrix))

    def smin_submatrix(self, matrix: np.ndarray, lam: complex, index_set: Iterable[int]) -> float:
        """
        Smallest singular value of the columns of A - lam*I outside index_set.

        Args:
            matrix: n x n matrix A
            lam: spectral parameter
            index_set: 0-based removed columns, 1 <= |I| < n

        Returns:
            s_min of the n x (n - |I|) submatrix
        """
        a = np.asarray(matrix)
        n = a.shape[0]
        removed = set(int(i) for i in index_set)
        if not removed or len(removed) >= n:
            raise ArgumentError(f"index set must satisfy 1 <= |I| < n, got |I|={len(removed)}, n={n}")
        if min(removed) < 0 or max(removed) >= n:
            raise ArgumentError(f"index set out of range for n={n}")
        kept = [j for j in range(n) if j not in removed]
        shifted = a - lam * np.eye(n)
        return float(linalg.svdvals(shifted[:, kept])[-1])

    def boundedness_event(self, matrix: np.ndarray, m: Optional[float] = None) -> BoundednessReport:
        m = settings.boundedness_m if m is None else m
        a = np.asarray(matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ArgumentError(f"boundedness event needs a square matrix, got {a.shape}")
        norm = float(linalg.svdvals(a)[0])
        threshold = m * math.sqrt(a.shape[0])
        return BoundednessReport(holds=norm <= threshold, norm=norm, threshold=threshold)

    # ==================== Distances ====================

    def distance_to_span(self, x: np.ndarray, spanning: Sequence[np.ndarray]) -> float:
        """||x - P_H x||_2 with H = span(spanning); ||x||_2 for an empty list"""
        x = np.asarray(x)
        if len(spanning) == 0:
            return float(np.linalg.norm(x))
        columns = np.column_stack([np.asarray(v) for v in spanning])
        if columns.shape[0] != x.shape[0]:
            raise ArgumentError("vectors must share the ambient dimension")
        q = linalg.orth(columns)
        residual = x - q @ (q.conj().T @ x)
        return float(np.linalg.norm(residual))

    def negative_second_moment_audit(self, matrix: np.ndarray) -> NegativeMomentAudit:
        """
        Compare sum_j s_j(B)^-2 with sum_j dist(B_j, H_j)^-2, H_j the span of the other columns.
        """
        b = np.asarray(matrix)
        k, m = b.shape
        if k < m:
            raise ArgumentError(f"need k >= m, got {k} x {m}")
        s = linalg.svdvals(b)
        if s[-1] <= settings.rank_tol:
            raise DegeneracyError(f"B is rank deficient (s_min={s[-1]:.3e})")

        lhs = float(np.sum(s ** -2.0))
        distances = [
            self.distance_to_span(b[:, j], [b[:, l] for l in range(m) if l != j])
            for j in range(m)
        ]
        rhs = float(np.sum(np.asarray(distances) ** -2.0))
        gap = abs(lhs - rhs) / lhs
        return NegativeMomentAudit(lhs=lhs, rhs=rhs, relative_gap=gap, holds=gap <= settings.nsm_rel_tol)

    def column_deletion_audit(self, matrix: np.ndarray) -> ColumnDeletionAudit:
        """
        For each column j: dist(B_j, H_j) against the same distance after deleting
        coordinate j from every column. Deleting a coordinate never increases it.
        """
        b = np.asarray(matrix)
        k, m = b.shape
        if k < m:
            raise ArgumentError(f"need k >= m, got {k} x {m}")
        rows: List[ColumnDeletionRow] = []
        for j in range(m):
            others = [b[:, l] for l in range(m) if l != j]
            full = self.distance_to_span(b[:, j], others)
            reduced = np.delete(b, j, axis=0)
            deleted = self.distance_to_span(reduced[:, j], [reduced[:, l] for l in range(m) if l != j])
            slack = settings.rank_tol * max(1.0, float(np.linalg.norm(b[:, j])))
            rows.append(ColumnDeletionRow(column=j, distance=full, distance_deleted=deleted,
                                          holds=full >= deleted - slack))
        return ColumnDeletionAudit(rows=rows, holds=all(r.holds for r in rows))

    # ==================== Subspace restrictions ====================

    def restricted_smin(self, matrix: np.ndarray, subspace: SubspaceBasis) -> float:
        """inf over unit x in E of ||Gx||_2, i.e. s_min(G Q_E)"""
        g = np.asarray(matrix)
        if subspace.n != g.shape[1]:
            raise ArgumentError(f"subspace lives in dimension {subspace.n}, G has {g.shape[1]} columns")
        return _inf_norm_ratio(g @ subspace.basis)

    def decomposition_bound_audit(self, matrix: np.ndarray, m1: int, threshold: float) -> DecompositionAudit:
        """
        Split A into its first m1 rows B and the rest G, split the domain along the
        right singular vectors of B at ``threshold`` and evaluate s_A >= s_B s_G / (4 ||A||).

        When E- = {0}, s_G is +inf and the record checks s_A >= s_B instead; when
        E+ = {0}, s_B is +inf and it checks s_A >= s_G. Both cases set ``degenerate``.
        """
        a = np.asarray(matrix)
        m, n = a.shape
        if not 1 <= m1 < m:
            raise ArgumentError(f"m1 must satisfy 1 <= m1 < m={m}, got {m1}")
        if threshold <= 0:
            raise ArgumentError("threshold must be positive")

        b, g = a[:m1], a[m1:]
        _, s_small, vh = linalg.svd(b, full_matrices=True)
        s_full = np.zeros(n)
        s_full[: s_small.size] = s_small
        plus = s_full > threshold
        right = vh.conj().T

        s_b = float(np.min(s_full[plus])) if plus.any() else math.inf
        s_g = self.restricted_smin(g, SubspaceBasis(right[:, ~plus])) if (~plus).any() else math.inf
        norm_a = float(linalg.svdvals(a)[0])
        s_a = _inf_norm_ratio(a)

        degenerate = not plus.any() or plus.all()
        if not (~plus).any():
            bound = bound_sharp = s_b
        elif not plus.any():
            bound = bound_sharp = s_g
        elif norm_a == 0.0:
            bound = bound_sharp = 0.0
        else:
            bound = s_b * s_g / (4.0 * norm_a)
            bound_sharp = s_b * s_g / (2.0 * (s_b + norm_a))

        # floating point slack only
        slack = settings.rank_tol * max(norm_a, 1.0)
        return DecompositionAudit(
            s_A=s_a, s_B=s_b, s_G=s_g, norm_A=norm_a,
            bound=bound, bound_sharp=bound_sharp,
            holds=s_a >= bound - slack, holds_sharp=s_a >= bound_sharp - slack,
            degenerate=degenerate,
            dim_plus=int(plus.sum()), dim_minus=int((~plus).sum()),
        )

    # ==================== Nets and embeddings ====================

    def epsilon_net(self, k: int, eps: float, seed: int = 0, pool_size: Optional[int] = None) -> np.ndarray:
        """
        eps-net of the unit sphere S^{k-1} by greedy farthest-point insertion over a
        random pool, followed by refinement rounds on fresh pools.

        Returns:
            array of shape (N, k) whose rows are unit vectors
        """
        if not 1 <= k <= settings.eps_net_max_k:
            raise UnsupportedError(f"k must lie in [1, {settings.eps_net_max_k}], got {k}")
        if not 0 < eps <= 1:
            raise ArgumentError(f"eps must lie in (0, 1], got {eps}")
        if k == 1:
            return np.array([[-1.0], [1.0]])

        pool_size = pool_size or settings.eps_net_pool
        rng = np.random.default_rng(substream(seed, 0, stream=k))
        radius = eps * settings.eps_net_shrink

        net = np.empty((0, k))
        for round_index in range(4):
            pool = rng.normal(size=(pool_size, k))
            pool /= np.linalg.norm(pool, axis=1, keepdims=True)
            if net.shape[0]:
                nearest = cdist(pool, net).min(axis=1)
            else:
                net = pool[:1]
                nearest = np.linalg.norm(pool - pool[0], axis=1)
            if round_index and nearest.max() <= radius:
                break
            added = []
            while nearest.max() > radius:
                j = int(np.argmax(nearest))
                added.append(pool[j])
                nearest = np.minimum(nearest, np.linalg.norm(pool - pool[j], axis=1))
            if added:
                net = np.vstack([net, np.asarray(added)])

        bound = (1.0 + 2.0 / eps) ** k
        if net.shape[0] > bound:
            logger.warning(f"eps-net for k={k}, eps={eps} has {net.shape[0]} points, above {bound:.1f}")
        logger.debug(f"eps-net k={k} eps={eps}: {net.shape[0]} points")
        return net

    def covering_radius(self, net: np.ndarray, samples: int = 100_000, seed: int = 1) -> float:
        """Largest distance from a uniform random point of the sphere to the net"""
        k = net.shape[1]
        rng = np.random.default_rng(substream(seed, 1, stream=k))
        worst = 0.0
        remaining = samples
        while remaining > 0:
            chunk = min(remaining, 10_000)
            points = rng.normal(size=(chunk, k))
            points /= np.linalg.norm(points, axis=1, keepdims=True)
            worst = max(worst, float(cdist(points, net).min(axis=1).max()))
            remaining -= chunk
        return worst

    def net_report(self, k: int, eps: float, samples: int = 100_000, seed: int = 0) -> NetReport:
        net = self.epsilon_net(k, eps, seed=seed)
        return NetReport(
            k=k, eps=eps, cardinality=net.shape[0],
            cardinality_bound=(1.0 + 2.0 / eps) ** k,
            covering_radius=self.covering_radius(net, samples=samples, seed=seed + 1),
        )

    def real_embedding(self, value: np.ndarray) -> np.ndarray:
        """
        Real(z) = [Re z; Im z] for vectors, [[R, -T], [T, R]] for matrices B = R + iT.
        """
        z = np.asarray(value)
        if z.ndim == 1:
            return np.concatenate([z.real, z.imag]).astype(np.float64)
        if z.ndim == 2:
            r, t = z.real.astype(np.float64), z.imag.astype(np.float64)
            return np.block([[r, -t], [t, r]])
        raise ArgumentError(f"expected a vector or matrix, got ndim={z.ndim}")

    # ==================== Eigenpairs ====================

    def eigenpairs(self, matrix: np.ndarray, symmetric: Optional[bool] = None,
                   seed: Optional[object] = None) -> SpectralData:
        """
        Eigenpairs sorted by real part then imaginary part, descending.

        Args:
            matrix: square matrix
            symmetric: hint; detected from exact equality A == A^H when None
            seed: attached to NumericalError if the solver fails

        Returns:
            SpectralData with unit, phase-normalised eigenvectors and residuals
        """
        a = np.asarray(matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ArgumentError(f"eigenpairs needs a square matrix, got {a.shape}")
        if symmetric is None:
            symmetric = bool(np.array_equal(a, a.conj().T))

        try:
            if symmetric:
                values, vectors = linalg.eigh(a)
                order = np.argsort(-values, kind="stable")
            else:
                values, vectors = linalg.eig(a)
                order = np.lexsort((-values.imag, -values.real))
        except (linalg.LinAlgError, ValueError) as e:
            logger.error(f"Eigensolver failed: {e}")
            raise NumericalError(f"eigensolver did not converge: {e}", seed=seed) from e

        values = values[order]
        vectors = _normalize_phase(vectors[:, order])
        if symmetric and not np.iscomplexobj(a):
            vectors = vectors.real
        residuals = np.linalg.norm(a @ vectors - vectors * values, axis=0)

        limit = settings.residual_tol * (1.0 + float(linalg.norm(a, 2)))
        if residuals.size and residuals.max() > limit:
            logger.warning(f"Eigen residual {residuals.max():.3e} above {limit:.3e} (seed={seed})")
        return SpectralData(eigenvalues=values, eigenvectors=vectors, residuals=residuals, seed=seed)


# Singleton instance
_linalg_service_instance: Optional[LinalgService] = None


def get_linalg_service() -> LinalgService:
    """Get linear algebra service singleton instance"""
    global _linalg_service_instance
    if _linalg_service_instance is None:
        _linalg_service_instance = LinalgService()
    return _linalg_service_instance
