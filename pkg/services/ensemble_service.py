from typing import Any, Dict, Optional, Union
import logging

import numpy as np

from app.exceptions import SpecificationError
from models.enums import SymmetryClass
from schemas.ensemble import DistributionSpec, EnsembleSpec, Seed, build_spec
from utils.seeding import pair_uniforms

logger = logging.getLogger(__name__)


class EnsembleService:
    """
    Entry laws and matrix ensembles with counter-based seeding.

    Every entry A_ij is a pure function of (trial key, min(i, j), max(i, j), lane):
    symmetric classes sample the upper triangle only, iid matrices draw a second
    lane for the lower triangle.
    """

    # ==================== Specs ====================

    def make_distribution(self, data: Union[Dict[str, Any], DistributionSpec]) -> DistributionSpec:
        if isinstance(data, DistributionSpec):
            return data
        return build_spec(DistributionSpec, data)

    def make_ensemble(self, data: Union[Dict[str, Any], EnsembleSpec]) -> EnsembleSpec:
        if isinstance(data, EnsembleSpec):
            return data
        return build_spec(EnsembleSpec, data)

    def density_bound(self, dist: DistributionSpec) -> Optional[float]:
        """
        Essential sup of the density: 1/(b-a) for uniform, 1/(sigma*sqrt(2*pi)) for
        gaussian, None for discrete kinds.
        """
        return dist.density_bound

    # ==================== Sampling ====================

    def sample_matrix(self, spec: EnsembleSpec, seed: Seed) -> np.ndarray:
        """
        Sample one matrix of the ensemble.

        Args:
            spec: ensemble specification
            seed: (master, trial_index); identical seeds give bit-identical matrices

        Returns:
            n x n float64 matrix, or complex128 when spec.fixed_imaginary is present
            (sampled real part + i * fixed_imaginary). The shift mu is not applied here.
        """
        if not isinstance(spec, EnsembleSpec):
            raise SpecificationError("spec", "expected an EnsembleSpec")

        n = spec.n
        key = seed.key()
        iu, ju = np.triu_indices(n)
        upper = spec.entry.from_uniform(pair_uniforms(key, iu, ju, lane=0))

        matrix = np.zeros((n, n), dtype=np.float64)
        if spec.symmetry is SymmetryClass.SYMMETRIC:
            matrix[iu, ju] = upper
            matrix[ju, iu] = upper
        elif spec.symmetry is SymmetryClass.SKEW_SYMMETRIC:
            strict = iu < ju
            matrix[iu[strict], ju[strict]] = upper[strict]
            matrix[ju[strict], iu[strict]] = -upper[strict]
        else:
            strict = iu < ju
            lower = spec.entry.from_uniform(pair_uniforms(key, iu[strict], ju[strict], lane=1))
            matrix[iu, ju] = upper
            matrix[ju[strict], iu[strict]] = lower

        if spec.fixed_imaginary is not None:
            return matrix + 1j * spec.fixed_imaginary
        return matrix

    def freeze_imaginary(self, n: int, dist: DistributionSpec, seed: Seed) -> np.ndarray:
        """Draw an iid imaginary part once, from a stream disjoint from the real parts"""
        key = seed.key(stream=1)
        iu, ju = np.triu_indices(n)
        strict = iu < ju
        out = np.zeros((n, n), dtype=np.float64)
        out[iu, ju] = dist.from_uniform(pair_uniforms(key, iu, ju, lane=0))
        out[ju[strict], iu[strict]] = dist.from_uniform(pair_uniforms(key, iu[strict], ju[strict], lane=1))
        logger.debug(f"Froze imaginary part n={n} from {dist.label()} seed={seed}")
        return out

    def shift_matrix(self, matrix: np.ndarray, mu: float) -> np.ndarray:
        """A - mu * J with J the all-ones matrix"""
        matrix = np.asarray(matrix)
        return matrix - mu * np.ones(matrix.shape)


# Singleton instance
_ensemble_service_instance: Optional[EnsembleService] = None


def get_ensemble_service() -> EnsembleService:
    """Get ensemble service singleton instance"""
    global _ensemble_service_instance
    if _ensemble_service_instance is None:
        _ensemble_service_instance = EnsembleService()
    return _ensemble_service_instance
