from typing import List, Optional, Sequence
import logging
import math

import numpy as np

from app.config import settings
from app.exceptions import ArgumentError
from models.enums import SymmetryClass
from models.profile import MassProfile
from models.spectral import SpectralData
from schemas.deloc import DelocSurvey, LocReport, LocWitness, SurveyRow, SurveySummary
from schemas.ensemble import EnsembleSpec, Seed
from schemas.linalg import MassResult
from services.ensemble_service import get_ensemble_service
from services.linalg_service import get_linalg_service
from utils.logger import log_timing
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)


def subset_size(n: int, eps: float) -> int:
    """k = ceil(eps * n), the smallest size satisfying |I| >= eps * n"""
    if eps * n < 1 - 1e-12:
        raise ArgumentError(f"eps * n must be at least 1 (eps={eps}, n={n}); use eps >= 1/n")
    # absorb rounding of products like 0.1 * 30
    k = math.ceil(eps * n - 1e-9)
    if k > n:
        raise ArgumentError(f"eps must not exceed 1, got {eps}")
    return max(k, 1)


def default_delta(eps: float, s: Optional[float] = None) -> float:
    """(eps * s)^6, the no-gaps threshold"""
    s = settings.deloc_s if s is None else s
    return (eps * s) ** 6


class DelocService:
    """
    Delocalization statistics of eigenvectors: mass profiles, sup norms,
    localization events and ensemble surveys.
    """

    def __init__(self):
        self.ensembles = get_ensemble_service()
        self.linalg = get_linalg_service()

    # ==================== Single vectors ====================

    def min_mass(self, v: np.ndarray, eps: float) -> MassResult:
        """
        Smallest l2 mass over coordinate sets of size ceil(eps * n).

        Sorting |v_i| realises the minimum; ties go to the lowest index.

        Args:
            v: unit vector (real or complex)
            eps: fraction of coordinates, eps * n >= 1

        Returns:
            MassResult with the mass and the minimising coordinates
        """
        v = np.asarray(v)
        if v.ndim != 1:
            raise ArgumentError(f"expected a vector, got ndim={v.ndim}")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > settings.unit_norm_tol:
            raise ArgumentError(f"vector must have unit norm, got {norm!r}")
        k = subset_size(v.size, eps)

        magnitudes = np.abs(v)
        chosen = np.argsort(magnitudes, kind="stable")[:k]
        mass = float(np.sqrt(np.sum(magnitudes[chosen] ** 2)))
        return MassResult(mass=mass, indices=sorted(int(i) for i in chosen), k=k)

    def mass_profile(self, v: np.ndarray, eps_grid: Sequence[float]) -> MassProfile:
        v = np.asarray(v)
        masses = tuple(self.min_mass(v, eps).mass for eps in eps_grid)
        return MassProfile(
            n=int(v.size),
            eps_grid=tuple(float(e) for e in eps_grid),
            min_mass=masses,
            linf=float(np.max(np.abs(v))),
        )

    # ==================== Localization events ====================

    def localization_event(self, spectral: SpectralData, eps: float, delta: float) -> LocReport:
        """Loc(A, eps, delta): some eigenvector has ceil(eps*n) coordinates with mass < delta"""
        for index in range(spectral.eigenvectors.shape[1]):
            result = self.min_mass(spectral.vector(index), eps)
            if result.mass < delta:
                witness = LocWitness(eigen_index=index, indices=result.indices, mass=result.mass)
                return LocReport(event=True, witness=witness, eps=eps, delta=delta)
        return LocReport(event=False, eps=eps, delta=delta)

    def approx_localization_event(self, matrix: np.ndarray, v: np.ndarray, lam: complex,
                                  eps: float, delta: float, m: Optional[float] = None) -> bool:
        """
        Localization of an approximate eigenvector: ||(A - lam) v|| <= M delta sqrt(n)
        and a light coordinate set of size ceil(eps * n).
        """
        m = settings.boundedness_m if m is None else m
        a = np.asarray(matrix)
        v = np.asarray(v)
        n = a.shape[0]
        if abs(lam) > m * math.sqrt(n):
            raise ArgumentError(f"|lambda| = {abs(lam):.4g} exceeds M sqrt(n) = {m * math.sqrt(n):.4g}")
        residual = float(np.linalg.norm(a @ v - lam * v))
        if residual > m * delta * math.sqrt(n):
            return False
        return self.min_mass(v, eps).mass < delta

    # ==================== Surveys ====================

    def sample_shifted(self, spec: EnsembleSpec, seed: Seed) -> np.ndarray:
        """One matrix of the ensemble with its shift applied"""
        matrix = self.ensembles.sample_matrix(spec, seed)
        if spec.shift_mu:
            matrix = self.ensembles.shift_matrix(matrix, spec.shift_mu)
        return matrix

    def spectrum(self, spec: EnsembleSpec, seed: Seed, matrix: Optional[np.ndarray] = None) -> SpectralData:
        """Eigenpairs of one shifted sample (``matrix`` when it is already drawn for ``seed``)"""
        if matrix is None:
            matrix = self.sample_shifted(spec, seed)
        symmetric = spec.symmetry is SymmetryClass.SYMMETRIC and not spec.is_complex
        return self.linalg.eigenpairs(matrix, symmetric=symmetric or None, seed=seed)

    @log_timing("deloc survey")
    def deloc_survey(self, spec: EnsembleSpec, trials: int, eps_grid: Sequence[float],
                     master_seed: int = 0, eps: Optional[float] = None,
                     delta: Optional[float] = None, threads: Optional[int] = None,
                     m: Optional[float] = None) -> DelocSurvey:
        """
        Run ``trials`` independent samples and record the mass profile of every eigenvector.

        Args:
            spec: ensemble specification
            trials: number of samples, at least 1
            eps_grid: eps values for the min_mass columns
            master_seed: trial t uses Seed(master_seed, t)
            eps: localization eps (defaults to the first grid point)
            delta: localization threshold (defaults to (eps * s)^6)
            threads: worker count (defaults to settings.threads)
            m: boundedness constant, ||A|| <= M sqrt(n) (defaults to settings.boundedness_m)

        Returns:
            DelocSurvey with rows sorted by (trial, index) and a summary
        """
        if trials < 1:
            raise ArgumentError(f"trials must be at least 1, got {trials}")
        if not eps_grid:
            raise ArgumentError("eps_grid must not be empty")
        grid = [float(e) for e in eps_grid]
        for e in grid:
            subset_size(spec.n, e)
        eps = grid[0] if eps is None else float(eps)
        delta = default_delta(eps) if delta is None else float(delta)
        m = settings.boundedness_m if m is None else float(m)

        def run_trial(trial: int):
            seed = Seed(master=master_seed, trial_index=trial)
            matrix = self.sample_shifted(spec, seed)
            bounded = self.linalg.boundedness_event(matrix, m=m).holds
            spectral = self.spectrum(spec, seed, matrix=matrix)
            rows = []
            for index in range(spectral.n):
                profile = self.mass_profile(spectral.vector(index), grid)
                value = complex(spectral.eigenvalues[index])
                rows.append(SurveyRow(
                    trial=trial, index=index,
                    eigenvalue_re=value.real, eigenvalue_im=value.imag,
                    linf=profile.linf, min_mass=list(profile.min_mass),
                ))
            report = self.localization_event(spectral, eps, delta)
            return rows, report.event, bounded

        results = ordered_map(run_trial, range(trials), threads=threads)
        rows: List[SurveyRow] = [row for trial_rows, _, _ in results for row in trial_rows]
        localized = sum(1 for _, event, _ in results if event)
        bounded = sum(1 for _, _, holds in results if holds)

        summary = SurveySummary(
            trials=trials, n=spec.n, eps_grid=grid,
            min_mass=[min(row.min_mass[j] for row in rows) for j in range(len(grid))],
            max_linf=max(row.linf for row in rows),
            eps=eps, delta=delta,
            localized_trials=localized,
            localization_frequency=localized / trials,
            m=m, bounded_trials=bounded,
        )
        logger.info(f"Survey n={spec.n} trials={trials}: localized in {localized}, bounded in {bounded}, "
                    f"max linf {summary.max_linf:.4f}")
        return DelocSurvey(rows=rows, summary=summary)


# Singleton instance
_deloc_service_instance: Optional[DelocService] = None


def get_deloc_service() -> DelocService:
    """Get delocalization service singleton instance"""
    global _deloc_service_instance
    if _deloc_service_instance is None:
        _deloc_service_instance = DelocService()
    return _deloc_service_instance
