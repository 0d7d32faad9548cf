from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class MassProfile:
    """
    No-gaps mass profile of one unit vector: for every eps on the grid, the smallest
    l2 mass carried by ceil(eps * n) coordinates, together with the largest coordinate.
    """
    n: int
    eps_grid: Tuple[float, ...]
    min_mass: Tuple[float, ...]
    linf: float

    def __repr__(self):
        return f"<MassProfile(n={self.n}, points={len(self.eps_grid)}, linf={self.linf:.4f})>"

    @property
    def is_monotone(self) -> bool:
        """Check that min_mass is nondecreasing along increasing eps"""
        order = np.argsort(self.eps_grid, kind="stable")
        masses = np.asarray(self.min_mass)[order]
        return bool(np.all(np.diff(masses) >= 0.0))

    def at(self, eps: float) -> float:
        return self.min_mass[self.eps_grid.index(eps)]


@dataclass(frozen=True)
class DensityCurve:
    """Density values on an evenly spaced grid (Fourier inversion output)"""
    grid: np.ndarray
    values: np.ndarray
    grid_step: float
    truncation_window: float
    tail_bound: float = 0.0             # certified bound on the truncated Fourier tail

    def __repr__(self):
        return (f"<DensityCurve(points={self.grid.size}, step={self.grid_step:.3g}, "
                f"window={self.truncation_window:.3g}, tail={self.tail_bound:.1e})>")

    @property
    def integral(self) -> float:
        """Trapezoid integral of the values over the grid"""
        if self.grid.size < 2:
            return 0.0
        return float(integrate.trapezoid(self.values, self.grid))

    @property
    def sup(self) -> float:
        return float(np.max(self.values))

    def value_at(self, x: float) -> float:
        """Value at the grid point closest to x"""
        return float(self.values[int(np.argmin(np.abs(self.grid - x)))])

    def to_rows(self) -> List[dict]:
        return [{"grid": float(g), "value": float(v)} for g, v in zip(self.grid, self.values)]
