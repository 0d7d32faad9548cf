from typing import Callable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import integrate, linalg, optimize, special
from scipy.spatial import cKDTree

from app.config import settings
from app.exceptions import ArgumentError, PreconditionError, UnsupportedError
from models.enums import DistributionKind, TensorizationKind
from models.profile import DensityCurve
from models.spectral import SubspaceBasis
from schemas.ensemble import DistributionSpec, Seed
from schemas.small_ball import (
    DistanceSmallBallRow,
    ProjectionDensityReport,
    RandomizeCoordinatesReport,
    SmallBallReport,
    SuperlevelReport,
    TensorizationRow,
    WeightedSumSpec,
)
from services.linalg_service import get_linalg_service
from utils.logger import log_timing
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)

# Generator streams, one per Monte Carlo audit
_GX_STREAM = 2
_TENSOR_STREAM = 3
_RANDOMIZE_STREAM = 4
_DISTANCE_STREAM = 5
_PROJECTION_STREAM = 6


def mc_blocks(total: int, block_size: Optional[int] = None) -> List[Tuple[int, int]]:
    """Split ``total`` draws into (block index, size) pairs of fixed size"""
    block_size = block_size or settings.mc_block_size
    return [(b, min(block_size, total - b * block_size)) for b in range(math.ceil(total / block_size))]


def _stderr(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def _as_real_rows(samples: np.ndarray) -> np.ndarray:
    """Samples as an (N, m) real array; complex coordinates are split into [Re, Im]"""
    x = np.asarray(samples)
    if x.ndim == 1:
        x = x[:, None]
    if np.iscomplexobj(x):
        x = np.concatenate([x.real, x.imag], axis=1)
    return x.astype(np.float64)


class SmallBallService:
    """
    Small-ball machinery: Levy concentration estimates, characteristic functions,
    Fourier-inversion densities and Monte Carlo audits of the tensorization and
    fixed-vector bounds.
    """

    def __init__(self):
        self.linalg = get_linalg_service()

    # ==================== Concentration ====================

    def levy_concentration(self, samples: np.ndarray, r: float,
                           max_centers: Optional[int] = None) -> float:
        """
        Estimate L(Y, r) = sup_y P(||Y - y|| <= r) from samples.

        One-dimensional samples use the exact sliding window over the order
        statistics (closed intervals of length 2r). In dimension m >= 2 the sup is
        taken over balls centred at the first ``max_centers`` samples, which lies
        between L(Y, r) (up to sampling error) and L(Y, 2r).

        Args:
            samples: N scalars or an (N, m) array; complex coordinates are embedded in R^{2m}
            r: radius, r >= 0

        Returns:
            estimate in [0, 1]
        """
        x = _as_real_rows(samples)
        n = x.shape[0]
        if n < 2:
            raise ArgumentError(f"need at least 2 samples, got {n}")
        if r < 0:
            raise ArgumentError(f"radius must be nonnegative, got {r}")

        if x.shape[1] == 1:
            s = np.sort(x[:, 0])
            inside = np.searchsorted(s, s + 2.0 * r, side="right") - np.arange(n)
            return float(inside.max()) / n

        max_centers = max_centers or settings.levy_max_centers
        tree = cKDTree(x)
        counts = tree.query_ball_point(x[:max_centers], r, return_length=True)
        return float(np.max(counts)) / n

    # ==================== Characteristic functions ====================

    def char_fn(self, dist: DistributionSpec, x):
        """Closed-form characteristic function E exp(i x X)"""
        x = np.asarray(x, dtype=np.float64)
        kind = dist.kind
        if kind is DistributionKind.UNIFORM:
            width = dist.b - dist.a
            value = np.exp(1j * x * dist.center) * np.sinc(x * width / (2.0 * np.pi))
        elif kind is DistributionKind.GAUSSIAN:
            value = np.exp(1j * x * dist.mean - 0.5 * (dist.sigma * x) ** 2)
        elif kind is DistributionKind.BERNOULLI_SYM:
            value = np.cos(x) + 0j
        elif kind is DistributionKind.BERNOULLI:
            value = 1.0 - dist.p + dist.p * np.exp(1j * x)
        else:
            value = np.exp(1j * x * dist.c)
        return complex(value) if value.ndim == 0 else value

    def rescale_to_unit_density(self, dist: DistributionSpec) -> DistributionSpec:
        """Law of K X, whose density sup is 1"""
        if not dist.is_continuous:
            raise PreconditionError(f"{dist.kind.value} has no density")
        k = dist.density_bound
        if dist.kind is DistributionKind.UNIFORM:
            return DistributionSpec.uniform(dist.a * k, dist.b * k)
        return DistributionSpec.gaussian(dist.mean * k, dist.sigma * k)

    def _envelope_radius(self, dist: DistributionSpec, t: float) -> float:
        """Radius beyond which |phi(x)| <= t"""
        if dist.kind is DistributionKind.UNIFORM:
            return 2.0 / ((dist.b - dist.a) * t)
        return math.sqrt(2.0 * math.log(1.0 / t)) / dist.sigma

    def superlevel_measure(self, dist: DistributionSpec, t: float, c: Optional[float] = None) -> SuperlevelReport:
        """
        Lebesgue measure of {x : |phi(x)| > t} for a law with density sup 1.

        The grid covers |x| up to the analytic envelope radius, so nothing beyond it
        contributes; sign changes of |phi| - t are refined with brentq.
        """
        c = settings.halasz_c if c is None else c
        if not 0 < t < 1:
            raise ArgumentError(f"t must lie in (0, 1), got {t}")
        if not dist.is_continuous or not math.isclose(dist.density_bound, 1.0, rel_tol=1e-9):
            raise PreconditionError("superlevel measure needs a density bounded by exactly 1; rescale first")

        window = self._envelope_radius(dist, t)
        step = settings.superlevel_step
        grid = np.arange(0.0, window + step, step)

        def excess(x):
            return np.abs(self.char_fn(dist, x)) - t

        values = excess(grid)
        changes = np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]
        edges = [optimize.brentq(excess, grid[i], grid[i + 1]) for i in changes if values[i] != 0.0]

        # |phi(0)| = 1 > t, so the set starts as an interval around 0
        measure = 0.0
        start = 0.0
        inside = True
        for edge in edges:
            if inside:
                measure += edge - start
            else:
                start = edge
            inside = not inside
        if inside:
            measure += grid[-1] - start
        measure *= 2.0

        low = 2.0 * math.pi / t ** 2
        high = c * math.sqrt(1.0 - t ** 2)
        return SuperlevelReport(
            t=t, measure=measure, window=window,
            bound_low_t=low, holds_low_t=measure <= low,
            bound_high_t=high, holds_high_t=measure <= high,
            applicable_holds=measure <= (low if t < 0.75 else high),
        )

    # ==================== Fourier inversion ====================

    def _product_char_fn(self, spec: WeightedSumSpec) -> Callable[[np.ndarray], np.ndarray]:
        terms = spec.nonzero_terms()
        sigma = spec.smoothing_sigma

        def phi(x):
            value = np.exp(-0.5 * (sigma * x) ** 2) + 0j
            for dist, weight in terms:
                value = value * self.char_fn(dist, weight * x)
            return value
        return phi

    def _truncation_window(self, spec: WeightedSumSpec) -> Tuple[float, float]:
        """
        Smallest doubling T whose tail integral of the envelope prod_j min(1, 2/(|a_j| w_j x))
        times the gaussian factors is below fourier_tail_tol, with that tail bound.
        Past fourier_max_window the window is capped and the larger tail is returned.
        """
        terms = spec.nonzero_terms()
        uniform = [(d, w) for d, w in terms if d.kind is DistributionKind.UNIFORM]
        q = len(uniform)
        coeff = math.prod(2.0 / (abs(w) * (d.b - d.a)) for d, w in uniform)
        knee = max([2.0 / (abs(w) * (d.b - d.a)) for d, w in uniform], default=1.0)
        beta = spec.smoothing_sigma ** 2 + sum((d.sigma * w) ** 2 for d, w in terms
                                               if d.kind is DistributionKind.GAUSSIAN)
        if q < 2 and beta == 0.0:
            raise PreconditionError(
                "characteristic function product is not integrable; add smoothing_sigma > 0"
            )

        def tail(T):
            bounds = []
            if beta > 0:
                gauss_tail = math.sqrt(math.pi / (2.0 * beta)) * special.erfc(T * math.sqrt(beta / 2.0))
                bounds.append(coeff * T ** -q * gauss_tail)
            if q >= 2:
                bounds.append(coeff * T ** (1 - q) / (q - 1))
            return min(bounds) / math.pi

        limit = settings.fourier_max_window
        T = max(knee, 1.0)
        while tail(T) > settings.fourier_tail_tol and T < limit:
            T *= 2.0
        T = min(T, limit)
        bound = tail(T)
        if bound > settings.fourier_tail_tol:
            logger.warning(f"Fourier window capped at {limit:g}; tail bound {bound:.2e}")
        return T, bound

    def weighted_sum_density(self, spec: WeightedSumSpec,
                             eval_points: Optional[Sequence[float]] = None) -> DensityCurve:
        """
        Density of sum_j a_j X_j by Fourier inversion of the closed-form
        characteristic function product:

            f(s) = (1/pi) * int_0^T Re[phi_S(x) exp(-i x s)] dx

        Args:
            spec: weighted sum (continuous laws, unit weight vector)
            eval_points: evenly spaced evaluation grid; defaults to 401 points covering the support

        Returns:
            DensityCurve with negative values clipped to 0
        """
        terms = spec.nonzero_terms()
        center = sum(w * d.center for d, w in terms)
        half = sum(abs(w) * d.half_width for d, w in terms) + 8.0 * spec.smoothing_sigma
        default_grid = eval_points is None
        points = (np.linspace(center - half, center + half, 401) if default_grid
                  else np.asarray(eval_points, dtype=np.float64))
        if points.ndim != 1 or points.size == 0:
            raise ArgumentError("eval_points must be a nonempty list of reals")

        window, tail_bound = self._truncation_window(spec)
        frequency = sum(abs(w) * (0.5 * (d.b - d.a) + abs(d.center)) if d.kind is DistributionKind.UNIFORM
                        else abs(w) * abs(d.mean) for d, w in terms)
        frequency += float(np.max(np.abs(points))) + 1.0
        count = int(math.ceil(window / (math.pi / (4.0 * frequency))))
        count += 1 - count % 2
        xs = np.linspace(0.0, window, max(count, 65))
        phi = self._product_char_fn(spec)(xs)

        values = np.empty(points.size)
        for start in range(0, points.size, 32):
            chunk = points[start:start + 32, None]
            integrand = phi.real * np.cos(xs * chunk) + phi.imag * np.sin(xs * chunk)
            values[start:start + 32] = integrate.simpson(integrand, x=xs, axis=1) / math.pi
        values = np.clip(values, 0.0, None)

        step = float(points[1] - points[0]) if points.size > 1 else 0.0
        curve = DensityCurve(grid=points, values=values, grid_step=step, truncation_window=window,
                             tail_bound=tail_bound)
        if default_grid and abs(curve.integral - 1.0) > settings.density_norm_tol:
            logger.warning(f"Density integrates to {curve.integral:.5f} over the default grid")
        return curve

    def projection_density_sup(self, dists: Sequence[DistributionSpec], subspace: SubspaceBasis,
                               samples: int = 200_000, master_seed: int = 0,
                               bin_width: Optional[float] = None,
                               c: Optional[float] = None,
                               threads: Optional[int] = None) -> ProjectionDensityReport:
        """
        Sup of the density of P_E X for iid-coordinate X with continuous laws, against (C K)^d.

        d = 1 inverts the weighted sum exactly; d = 2 uses a Monte Carlo 2-D histogram.
        """
        c = settings.projection_c if c is None else c
        d = subspace.k
        if d > 2:
            raise UnsupportedError(f"projection density sup supports d <= 2, got {d}")
        if len(dists) != subspace.n:
            raise ArgumentError(f"need {subspace.n} distributions, got {len(dists)}")
        if subspace.is_complex:
            raise ArgumentError("projection density sup needs a real subspace")
        if any(not dist.is_continuous for dist in dists):
            raise PreconditionError("all coordinates need a density")

        k = max(dist.density_bound for dist in dists)
        bound = (c * k) ** d

        if d == 1:
            a = subspace.basis[:, 0]
            nonzero = np.flatnonzero(a)
            if nonzero.size == 1:
                j = int(nonzero[0])
                sup = dists[j].density_bound / abs(a[j])
            else:
                spec = WeightedSumSpec(dists=list(dists), weights=[float(w) for w in a])
                center = sum(w * dist.center for dist, w in zip(dists, a))
                half = sum(abs(w) * dist.half_width for dist, w in zip(dists, a))
                curve = self.weighted_sum_density(spec, np.linspace(center - half, center + half, 801))
                sup = curve.sup
            return ProjectionDensityReport(d=1, sup=sup, bound=bound, holds=sup <= bound, method="fourier")

        h = bin_width or settings.projection_bins_h
        q = subspace.basis
        centers = np.array([dist.center for dist in dists]) @ q
        halves = np.array([dist.half_width for dist in dists]) @ np.abs(q)
        edges = []
        for axis in range(2):
            lo = math.floor((centers[axis] - halves[axis]) / h)
            hi = math.ceil((centers[axis] + halves[axis]) / h)
            edges.append(np.arange(lo, hi + 1) * h)

        def count_block(block):
            index, size = block
            rng = Seed(master=master_seed, trial_index=index).generator(stream=_PROJECTION_STREAM)
            x = np.column_stack([dist.sample(rng, size) for dist in dists])
            y = x @ q
            counts, _, _ = np.histogram2d(y[:, 0], y[:, 1], bins=edges)
            return counts

        counts = sum(ordered_map(count_block, mc_blocks(samples), threads=threads))
        peak = float(counts.max())
        sup = peak / (samples * h * h)
        stderr = math.sqrt(peak) / (samples * h * h)
        holds = sup - settings.statistical_sigmas * stderr <= bound
        return ProjectionDensityReport(d=2, sup=sup, stderr=stderr, bound=bound, holds=holds, method="histogram")

    # ==================== Monte Carlo audits ====================

    @log_timing("small ball of Gx")
    def small_ball_Gx(self, l: int, m: int, entry: DistributionSpec, x: np.ndarray, theta: float,
                      trials: int = 10_000, master_seed: int = 0,
                      c0: Optional[float] = None, threads: Optional[int] = None) -> SmallBallReport:
        """
        P(||G x||_2 <= theta sqrt(l)) for an l x m matrix G with iid entries, against (C0 theta)^l.

        Also reports the per-row probability P(|<G_j, x>| <= theta) against C0 K theta.
        """
        c0 = settings.c0 if c0 is None else c0
        if trials < 100:
            raise ArgumentError(f"trials must be at least 100, got {trials}")
        if l < 1 or m < 1:
            raise ArgumentError("l and m must be positive")
        x = np.asarray(x)
        if x.shape != (m,):
            raise ArgumentError(f"x must have length m={m}")
        if abs(np.linalg.norm(x) - 1.0) > settings.unit_norm_tol:
            raise ArgumentError("x must be a unit vector")

        radius = theta * math.sqrt(l)

        def count_block(block):
            index, size = block
            rng = Seed(master=master_seed, trial_index=index).generator(stream=_GX_STREAM)
            g = entry.sample(rng, (size, l, m))
            gx = np.einsum("tlm,m->tl", g, x)
            return int(np.sum(np.linalg.norm(gx, axis=1) <= radius)), int(np.sum(np.abs(gx) <= theta))

        counts = ordered_map(count_block, mc_blocks(trials), threads=threads)
        empirical = sum(c for c, _ in counts) / trials
        row_empirical = sum(r for _, r in counts) / (trials * l)
        stderr = _stderr(empirical, trials)
        bound = (c0 * theta) ** l
        c0_min = empirical ** (1.0 / l) / theta if theta > 0 else 0.0
        return SmallBallReport(
            l=l, m=m, theta=theta, trials=trials,
            empirical=empirical, stderr=stderr, bound=bound,
            holds=empirical - settings.statistical_sigmas * stderr <= bound,
            c0_min=c0_min, row_empirical=row_empirical,
            row_bound=c0 * entry.density_bound * theta if entry.is_continuous else None,
        )

    @log_timing("tensorization audit")
    def tensorization_audit(self, kind: TensorizationKind, t_grid: Sequence[float],
                            samples: int = 1_000_000, master_seed: int = 0,
                            d: int = 5, m: float = 4.0, l: int = 5, c: float = 1.0,
                            threads: Optional[int] = None) -> List[TensorizationRow]:
        """
        Monte Carlo check of the two tensorization bounds on synthetic laws meeting
        their hypotheses exactly.

        Z1Z2: Z1 ~ U[0, 1/2], Z2 = sqrt(d-1) U^(1/(d-1)) / M;
              P(sqrt(Z1^2 + Z2^2) <= t sqrt(d)) <= (M t)^d.
        PRODUCT: V_j ~ U[0, 1/C], j = 1..l;
              P(sum V_j^2 <= t^2 l) <= (e C sqrt(pi) / 2 * t)^l.
        """
        kind = TensorizationKind(kind)
        if kind is TensorizationKind.Z1Z2:
            if d <= 1:
                raise ArgumentError(f"d must exceed 1, got {d}")
            if m < settings.tensorization_m_min:
                raise ArgumentError(f"M must be at least {settings.tensorization_m_min}, got {m}")
        else:
            if l < 1:
                raise ArgumentError(f"l must be positive, got {l}")
            if c <= 0:
                raise ArgumentError(f"C must be positive, got {c}")
        ts = np.asarray(t_grid, dtype=np.float64)
        if np.any(ts < 0):
            raise ArgumentError("t grid must be nonnegative")

        def count_block(block):
            index, size = block
            rng = Seed(master=master_seed, trial_index=index).generator(stream=_TENSOR_STREAM)
            if kind is TensorizationKind.Z1Z2:
                z1 = 0.5 * rng.random(size)
                z2 = math.sqrt(d - 1) * rng.random(size) ** (1.0 / (d - 1)) / m
                stat = np.sqrt((z1 ** 2 + z2 ** 2) / d)
            else:
                v = rng.random((size, l)) / c
                stat = np.sqrt(np.sum(v ** 2, axis=1) / l)
            return np.sum(stat[:, None] <= ts[None, :], axis=0)

        counts = sum(ordered_map(count_block, mc_blocks(samples), threads=threads))
        if kind is TensorizationKind.Z1Z2:
            bounds = (m * ts) ** d
        else:
            bounds = (math.e * c * math.sqrt(math.pi) / 2.0 * ts) ** l

        rows = []
        for t, count, bound in zip(ts, counts, bounds):
            empirical = float(count) / samples
            stderr = _stderr(empirical, samples)
            rows.append(TensorizationRow(
                kind=kind, t=float(t), empirical=empirical, stderr=stderr, bound=float(bound),
                holds=empirical - settings.statistical_sigmas * stderr <= bound,
            ))
        return rows

    @log_timing("randomize coordinates audit")
    def randomize_coordinates_audit(self, dist: DistributionSpec, subspace: SubspaceBasis, r: float,
                                    trials: int = 100_000, master_seed: int = 0,
                                    imaginary: Optional[np.ndarray] = None) -> RandomizeCoordinatesReport:
        """
        Compare L(P_E Z, r) with L(P_Real(E) Z_hat, 2r)^(1/2) where Z = X + iY has iid real
        parts and a fixed imaginary part Y, and Z_hat stacks two independent copies of X.
        """
        if not dist.is_continuous:
            raise PreconditionError("randomize coordinates audit needs a continuous law")
        n = subspace.n
        y = np.zeros(n) if imaginary is None else np.asarray(imaginary, dtype=np.float64)
        if y.shape != (n,):
            raise ArgumentError(f"imaginary part must have length {n}")

        rng = Seed(master=master_seed, trial_index=0).generator(stream=_RANDOMIZE_STREAM)
        x = dist.sample(rng, (trials, n))
        x_copy = dist.sample(rng, (trials, n))

        q = subspace.basis
        coords = (x + 1j * y) @ q.conj()
        lhs = self.levy_concentration(coords, r)

        w = self.linalg.real_embedding(q.astype(np.complex128))
        stacked = np.concatenate([x, x_copy], axis=1) @ w
        rhs = math.sqrt(self.levy_concentration(stacked, 2.0 * r))

        margin = settings.statistical_sigmas / math.sqrt(trials)
        return RandomizeCoordinatesReport(lhs=lhs, rhs=rhs, margin=margin, holds=lhs <= rhs + margin)

    def distance_small_ball_audit(self, n: int, k: int, dist: DistributionSpec, tau_grid: Sequence[float],
                                  trials: int = 20_000, master_seed: int = 0,
                                  complement: Optional[SubspaceBasis] = None,
                                  c: Optional[float] = None,
                                  threads: Optional[int] = None) -> List[DistanceSmallBallRow]:
        """
        P(dist(X, H) < tau sqrt(k)) for X with iid coordinates and H of codimension k,
        against (C K tau)^k. ``complement`` is an orthonormal basis of H-perp; a random
        one is drawn when omitted.
        """
        c = settings.projection_c if c is None else c
        if not 1 <= k <= n:
            raise ArgumentError(f"codimension must satisfy 1 <= k <= n, got k={k}, n={n}")
        if not dist.is_continuous:
            raise PreconditionError("distance audit needs a continuous law")
        if complement is None:
            rng = Seed(master=master_seed, trial_index=0).generator(stream=_DISTANCE_STREAM)
            basis, _ = linalg.qr(rng.normal(size=(n, k)), mode="economic")
            complement = SubspaceBasis(basis)
        if complement.n != n or complement.k != k:
            raise ArgumentError(f"complement basis must be {n} x {k}")

        taus = np.asarray(tau_grid, dtype=np.float64)
        thresholds = taus * math.sqrt(k)
        q = complement.basis

        def count_block(block):
            index, size = block
            rng = Seed(master=master_seed, trial_index=index + 1).generator(stream=_DISTANCE_STREAM)
            distances = np.linalg.norm(dist.sample(rng, (size, n)) @ q, axis=1)
            return np.sum(distances[:, None] < thresholds[None, :], axis=0)

        counts = sum(ordered_map(count_block, mc_blocks(trials), threads=threads))
        kappa = dist.density_bound
        rows = []
        for tau, count in zip(taus, counts):
            empirical = float(count) / trials
            stderr = _stderr(empirical, trials)
            bound = (c * kappa * tau) ** k
            rows.append(DistanceSmallBallRow(
                tau=float(tau), k=k, empirical=empirical, stderr=stderr, bound=bound,
                holds=empirical - settings.statistical_sigmas * stderr <= bound,
                c_min=empirical ** (1.0 / k) / (kappa * tau) if tau > 0 else 0.0,
            ))
        return rows


# Singleton instance
_small_ball_service_instance: Optional[SmallBallService] = None


def get_small_ball_service() -> SmallBallService:
    """Get small-ball service singleton instance"""
    global _small_ball_service_instance
    if _small_ball_service_instance is None:
        _small_ball_service_instance = SmallBallService()
    return _small_ball_service_instance
