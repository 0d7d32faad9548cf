import math

import numpy as np
import pytest
from scipy import integrate, linalg, optimize, stats

from app.config import settings
from app.exceptions import ArgumentError, PreconditionError, UnsupportedError
from models.enums import TensorizationKind
from models.spectral import SubspaceBasis
from schemas.ensemble import DistributionSpec
from schemas.small_ball import WeightedSumSpec
from services.small_ball_service import mc_blocks

UNIT_UNIFORM = DistributionSpec.uniform(-0.5, 0.5)
SQRT3 = math.sqrt(3.0)


def _weighted(dists, weights, smoothing_sigma=0.0):
    return WeightedSumSpec(dists=dists, weights=weights, smoothing_sigma=smoothing_sigma)


class TestLevyConcentration:

    def test_constant_samples(self, small_ball):
        assert small_ball.levy_concentration(np.full(50, 3.0), 0.0) == 1.0

    def test_uniform_quarter(self, small_ball, rng):
        samples = rng.uniform(-0.5, 0.5, size=100_000)
        assert small_ball.levy_concentration(samples, 0.25) == pytest.approx(0.5, abs=0.02)

    def test_gaussian_unit_radius(self, small_ball, rng):
        samples = rng.normal(size=100_000)
        expected = stats.norm.cdf(1.0) - stats.norm.cdf(-1.0)
        assert small_ball.levy_concentration(samples, 1.0) == pytest.approx(expected, abs=0.01)

    def test_monotone_and_scale_covariant(self, small_ball, rng):
        samples = rng.normal(size=5_000)
        values = [small_ball.levy_concentration(samples, r) for r in (0.0, 0.1, 0.5, 1.0, 3.0)]
        assert values == sorted(values)
        assert small_ball.levy_concentration(2.0 * samples, 1.0) == small_ball.levy_concentration(samples, 0.5)

    def test_complex_samples_embed(self, small_ball, rng):
        z = rng.normal(size=2_000) + 1j * rng.normal(size=2_000)
        stacked = np.column_stack([z.real, z.imag])
        assert small_ball.levy_concentration(z, 0.3) == small_ball.levy_concentration(stacked, 0.3)

    def test_rejects_bad_input(self, small_ball):
        with pytest.raises(ArgumentError):
            small_ball.levy_concentration(np.array([1.0]), 0.5)
        with pytest.raises(ArgumentError):
            small_ball.levy_concentration(np.zeros(10), -1.0)


class TestCharacteristicFunctions:

    def test_known_values(self, small_ball):
        assert small_ball.char_fn(UNIT_UNIFORM, 0.0) == pytest.approx(1.0)
        assert small_ball.char_fn(DistributionSpec.bernoulli_sym(), math.pi) == pytest.approx(-1.0)
        assert small_ball.char_fn(UNIT_UNIFORM, 2.0) == pytest.approx(math.sin(1.0))
        assert small_ball.char_fn(DistributionSpec.point_mass(2.0), 0.5) == pytest.approx(np.exp(1j))

    @pytest.mark.parametrize("dist", [
        DistributionSpec.uniform(0.0, 2.0),
        DistributionSpec.gaussian(1.0, 0.5),
        DistributionSpec.bernoulli(0.3),
    ])
    def test_conjugate_symmetry_and_modulus(self, small_ball, dist):
        xs = np.linspace(-20.0, 20.0, 401)
        phi = small_ball.char_fn(dist, xs)
        assert np.allclose(small_ball.char_fn(dist, -xs), np.conj(phi))
        assert np.all(np.abs(phi) <= 1.0 + 1e-12)

    def test_uniform_against_quadrature(self, small_ball):
        dist = DistributionSpec.uniform(0.0, 2.0)
        for x in (0.3, 1.7, 5.0):
            re, _ = integrate.quad(lambda s: math.cos(x * s) / 2.0, 0.0, 2.0)
            im, _ = integrate.quad(lambda s: math.sin(x * s) / 2.0, 0.0, 2.0)
            assert small_ball.char_fn(dist, x) == pytest.approx(complex(re, im), abs=1e-10)

    def test_plancherel(self, small_ball):
        # int |phi|^2 = 2 pi int f^2 = 2 pi for the unit uniform
        L = 4000.0
        xs = np.linspace(-L, L, 800_001)
        total = integrate.trapezoid(np.abs(small_ball.char_fn(UNIT_UNIFORM, xs)) ** 2, xs)
        assert total + 4.0 / L == pytest.approx(2.0 * math.pi, abs=1e-3)


class TestSuperlevel:

    def test_uniform_at_point_nine(self, small_ball):
        y = optimize.brentq(lambda s: math.sin(s) / s - 0.9, 0.1, 1.5)
        report = small_ball.superlevel_measure(UNIT_UNIFORM, 0.9)
        assert report.measure == pytest.approx(4.0 * y, abs=1e-6)
        assert report.measure == pytest.approx(3.14, abs=0.01)

    def test_gaussian_closed_form(self, small_ball):
        dist = small_ball.rescale_to_unit_density(DistributionSpec.gaussian(0.0, 1.0))
        for t in (0.2, 0.5, 0.9):
            expected = 2.0 * math.sqrt(2.0 * math.log(1.0 / t)) / dist.sigma
            assert small_ball.superlevel_measure(dist, t).measure == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("base", [
        DistributionSpec.uniform(-SQRT3, SQRT3),
        DistributionSpec.gaussian(0.0, 1.0),
    ])
    def test_bounds_hold_on_grid(self, small_ball, base):
        dist = small_ball.rescale_to_unit_density(base)
        assert dist.density_bound == pytest.approx(1.0)
        for t in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95):
            assert small_ball.superlevel_measure(dist, t).applicable_holds

    def test_high_threshold_is_small(self, small_ball):
        assert small_ball.superlevel_measure(UNIT_UNIFORM, 0.999).measure < 0.5

    def test_preconditions(self, small_ball):
        with pytest.raises(PreconditionError):
            small_ball.superlevel_measure(DistributionSpec.uniform(0.0, 2.0), 0.5)
        with pytest.raises(ArgumentError):
            small_ball.superlevel_measure(UNIT_UNIFORM, 1.0)


class TestWeightedSumDensity:

    def test_two_uniforms(self, small_ball):
        w = 1.0 / math.sqrt(2.0)
        curve = small_ball.weighted_sum_density(_weighted([UNIT_UNIFORM] * 2, [w, w]), [0.0])
        assert curve.values[0] == pytest.approx(math.sqrt(2.0), abs=1e-3)

    def test_three_uniforms(self, small_ball):
        w = 1.0 / SQRT3
        spec = _weighted([UNIT_UNIFORM] * 3, [w, w, w])
        curve = small_ball.weighted_sum_density(spec)
        assert curve.value_at(0.0) == pytest.approx(3.0 * SQRT3 / 4.0, abs=1e-3)
        assert curve.integral == pytest.approx(1.0, abs=1e-3)

    def test_smoothed_single_uniform(self, small_ball):
        curve = small_ball.weighted_sum_density(_weighted([UNIT_UNIFORM], [1.0], 0.01), [0.0])
        assert curve.values[0] == pytest.approx(1.0, abs=1e-3)

    def test_single_gaussian(self, small_ball):
        curve = small_ball.weighted_sum_density(_weighted([DistributionSpec.gaussian()], [1.0]), [0.0, 1.0])
        assert curve.values[0] == pytest.approx(stats.norm.pdf(0.0), abs=1e-4)
        assert curve.values[1] == pytest.approx(stats.norm.pdf(1.0), abs=1e-4)

    def test_order_of_terms_is_irrelevant(self, small_ball):
        dists = [UNIT_UNIFORM, DistributionSpec.uniform(0.0, 2.0), DistributionSpec.gaussian(0.0, 0.5)]
        weights = [0.6, 0.0, 0.8]
        points = [-0.3, 0.0, 0.4]
        forward = small_ball.weighted_sum_density(_weighted(dists, weights), points)
        backward = small_ball.weighted_sum_density(_weighted(dists[::-1], weights[::-1]), points)
        assert np.allclose(forward.values, backward.values, atol=1e-9)

    def test_capped_window_reports_its_tail(self, small_ball):
        w = 1.0 / math.sqrt(2.0)
        curve = small_ball.weighted_sum_density(_weighted([UNIT_UNIFORM] * 2, [w, w]), [0.0])
        assert curve.truncation_window == settings.fourier_max_window
        assert curve.tail_bound == pytest.approx(8.0 / (math.pi * settings.fourier_max_window), rel=1e-9)

    def test_gaussian_tail_is_within_tolerance(self, small_ball):
        curve = small_ball.weighted_sum_density(_weighted([DistributionSpec.gaussian()], [1.0]), [0.0])
        assert 0.0 < curve.tail_bound <= settings.fourier_tail_tol
        assert curve.truncation_window < settings.fourier_max_window

    def test_single_uniform_needs_smoothing(self, small_ball):
        with pytest.raises(PreconditionError):
            small_ball.weighted_sum_density(_weighted([UNIT_UNIFORM], [1.0]))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            _weighted([UNIT_UNIFORM] * 2, [1.0, 1.0])
        with pytest.raises(ValueError):
            _weighted([DistributionSpec.bernoulli_sym()], [1.0])


class TestProjectionDensity:

    def test_coordinate_line(self, small_ball):
        report = small_ball.projection_density_sup([UNIT_UNIFORM] * 3, SubspaceBasis.coordinates(3, [1]))
        assert report.sup == pytest.approx(1.0)

    def test_diagonal_line(self, small_ball):
        w = 1.0 / math.sqrt(2.0)
        subspace = SubspaceBasis(np.array([[w], [w], [0.0]]))
        report = small_ball.projection_density_sup([UNIT_UNIFORM] * 3, subspace)
        assert report.sup == pytest.approx(math.sqrt(2.0), abs=1e-3)
        assert report.holds

    def test_coordinate_plane(self, small_ball):
        report = small_ball.projection_density_sup(
            [UNIT_UNIFORM] * 3, SubspaceBasis.coordinates(3, [0, 1]), samples=200_000, master_seed=3,
        )
        assert 0.9 <= report.sup <= 1.2
        assert report.method == "histogram"
        assert report.holds

    def test_dimension_guard(self, small_ball):
        with pytest.raises(UnsupportedError):
            small_ball.projection_density_sup([UNIT_UNIFORM] * 4, SubspaceBasis.coordinates(4, [0, 1, 2]))


class TestMonteCarloAudits:

    def test_blocks_cover_total(self):
        blocks = mc_blocks(10_000, 4096)
        assert blocks == [(0, 4096), (1, 4096), (2, 1808)]

    def test_gaussian_gx_matches_chi_square(self, small_ball):
        x = np.array([1.0, 0.0, 0.0])
        report = small_ball.small_ball_Gx(4, 3, DistributionSpec.gaussian(), x, 0.5, trials=10_000, master_seed=1)
        assert report.empirical == pytest.approx(stats.chi2.cdf(1.0, 4), abs=0.015)
        assert report.empirical == pytest.approx(0.0902, abs=0.015)

    def test_zero_theta(self, small_ball):
        x = np.array([0.6, 0.8])
        report = small_ball.small_ball_Gx(3, 2, UNIT_UNIFORM, x, 0.0, trials=500)
        assert report.empirical == 0.0
        assert report.holds

    def test_uniform_gx_small_ball(self, small_ball):
        x = np.ones(6) / math.sqrt(6.0)
        report = small_ball.small_ball_Gx(8, 6, DistributionSpec.uniform(-SQRT3, SQRT3), x, 0.1, trials=5_000)
        assert report.holds

    def test_gx_rejects_bad_arguments(self, small_ball):
        with pytest.raises(ArgumentError):
            small_ball.small_ball_Gx(2, 2, UNIT_UNIFORM, np.array([1.0, 1.0]), 0.5, trials=500)
        with pytest.raises(ArgumentError):
            small_ball.small_ball_Gx(2, 2, UNIT_UNIFORM, np.array([1.0, 0.0]), 0.5, trials=10)

    def test_z1z2_tensorization(self, small_ball):
        rows = small_ball.tensorization_audit(TensorizationKind.Z1Z2, [0.0, 0.05, 0.1, 0.2, 0.3],
                                              samples=1_000_000, master_seed=2)
        assert rows[0].empirical == 0.0
        assert all(row.holds for row in rows)
        at_tenth = rows[2]
        assert at_tenth.bound == pytest.approx(0.4 ** 5)
        assert at_tenth.empirical <= at_tenth.bound

    def test_product_tensorization(self, small_ball):
        rows = small_ball.tensorization_audit(TensorizationKind.PRODUCT, [0.05, 0.1, 0.2, 0.3],
                                              samples=200_000, master_seed=2)
        assert all(row.holds for row in rows)

    def test_tensorization_hypotheses(self, small_ball):
        with pytest.raises(ArgumentError):
            small_ball.tensorization_audit(TensorizationKind.Z1Z2, [0.1], samples=1_000, d=1)
        with pytest.raises(ArgumentError):
            small_ball.tensorization_audit(TensorizationKind.Z1Z2, [0.1], samples=1_000, m=2.0)

    def test_randomize_coordinates_trivial_radius(self, small_ball):
        report = small_ball.randomize_coordinates_audit(UNIT_UNIFORM, SubspaceBasis.full(2), 100.0, trials=500)
        assert report.lhs == 1.0
        assert report.rhs == 1.0
        assert report.holds

    def test_randomize_coordinates_complex_subspace(self, small_ball, rng):
        q, _ = linalg.qr(rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2)), mode="economic")
        report = small_ball.randomize_coordinates_audit(
            UNIT_UNIFORM, SubspaceBasis(q), 0.3, trials=5_000, imaginary=rng.normal(size=6),
        )
        assert report.holds

    def test_distance_small_ball(self, small_ball):
        rows = small_ball.distance_small_ball_audit(6, 2, UNIT_UNIFORM, [0.05, 0.1, 0.2],
                                                    trials=20_000, master_seed=4, c=10.0)
        assert [row.tau for row in rows] == [0.05, 0.1, 0.2]
        empirical = [row.empirical for row in rows]
        assert empirical == sorted(empirical)
        assert all(row.holds for row in rows)
        for row in rows:
            if row.empirical > 0:
                assert (row.c_min * row.tau) ** 2 == pytest.approx(row.empirical)
