import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import linalg

from app.exceptions import ArgumentError, DegeneracyError, NumericalError, UnsupportedError
from models.spectral import SubspaceBasis


class TestSingularValues:

    def test_matches_numpy(self, linalg_service, rng):
        a = rng.normal(size=(7, 4))
        assert np.allclose(linalg_service.singular_values(a), np.linalg.svd(a, compute_uv=False))

    def test_squares_sum_to_entrywise_norm(self, linalg_service, rng):
        m = rng.normal(size=(5, 3))
        s = linalg_service.singular_values(m)
        assert np.sum(s ** 2) == pytest.approx(np.sum(m ** 2), rel=1e-10)
        assert s[0] == pytest.approx(np.linalg.norm(m, 2), rel=1e-10)
        assert np.all(np.diff(s) <= 0)

    def test_padded_diagonal(self, linalg_service):
        m = np.array([[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        assert np.allclose(linalg_service.singular_values(m), [2.0, 1.0])

    def test_smin_submatrix(self, linalg_service):
        assert linalg_service.smin_submatrix(np.eye(3), 0.0, [0]) == pytest.approx(1.0)
        assert linalg_service.smin_submatrix(2.0 * np.eye(3), 2.0, [1]) == pytest.approx(0.0)

    def test_smin_submatrix_against_gesvd(self, linalg_service):
        a = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]])
        value = linalg_service.smin_submatrix(a, 0.0, [1])
        oracle = linalg.svd(a[:, [0, 2]], compute_uv=False, lapack_driver="gesvd")[-1]
        assert value == pytest.approx(oracle, abs=1e-10)
        # columns (1, 0, 1) and (0, 1, 1): Gram matrix [[2, 1], [1, 2]]
        assert value == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("index_set", [[], [0, 1, 2], [5]])
    def test_smin_submatrix_rejects_bad_sets(self, linalg_service, index_set):
        with pytest.raises(ArgumentError):
            linalg_service.smin_submatrix(np.eye(3), 0.0, index_set)

    def test_boundedness_event(self, linalg_service):
        assert linalg_service.boundedness_event(np.eye(4)).holds
        report = linalg_service.boundedness_event(10.0 * np.eye(4), m=3.0)
        assert not report.holds
        assert report.norm == pytest.approx(10.0)
        assert report.threshold == pytest.approx(6.0)


class TestDistances:

    def test_distance_to_span(self, linalg_service):
        x = np.array([1.0, 1.0, 0.0])
        assert linalg_service.distance_to_span(x, [np.array([1.0, 0.0, 0.0])]) == pytest.approx(1.0)
        assert linalg_service.distance_to_span(x, []) == pytest.approx(math.sqrt(2.0))

    def test_distance_matches_normal_equations(self, linalg_service, rng):
        x = rng.normal(size=6)
        s = rng.normal(size=(6, 3))
        coefficients = np.linalg.solve(s.T @ s, s.T @ x)
        oracle = np.linalg.norm(x - s @ coefficients)
        assert linalg_service.distance_to_span(x, list(s.T)) == pytest.approx(oracle, abs=1e-8)
        assert linalg_service.distance_to_span(s[:, 0] + 2.0 * s[:, 2], list(s.T)) < 1e-10

    @pytest.mark.parametrize("shape", [(12, 8), (20, 10), (30, 30)])
    def test_negative_second_moment_identity(self, linalg_service, rng, shape):
        for _ in range(100):
            audit = linalg_service.negative_second_moment_audit(rng.normal(size=shape))
            assert audit.holds
            assert audit.relative_gap <= 1e-8

    def test_negative_second_moment_complex(self, linalg_service, rng):
        b = rng.normal(size=(9, 5)) + 1j * rng.normal(size=(9, 5))
        assert linalg_service.negative_second_moment_audit(b).holds

    def test_negative_second_moment_rejects_degenerate(self, linalg_service, rng):
        b = rng.normal(size=(6, 3))
        b[:, 2] = b[:, 0]
        with pytest.raises(DegeneracyError):
            linalg_service.negative_second_moment_audit(b)
        with pytest.raises(ArgumentError):
            linalg_service.negative_second_moment_audit(rng.normal(size=(3, 5)))

    def test_column_deletion_never_increases_distance(self, linalg_service, rng):
        for _ in range(100):
            audit = linalg_service.column_deletion_audit(rng.normal(size=(8, 5)))
            assert audit.holds
            assert len(audit.rows) == 5


class TestDecomposition:

    def test_identity_example(self, linalg_service):
        audit = linalg_service.decomposition_bound_audit(np.eye(2), m1=1, threshold=0.5)
        assert audit.s_A == pytest.approx(1.0)
        assert audit.bound == pytest.approx(0.25)
        assert audit.holds
        assert not audit.degenerate
        assert (audit.dim_plus, audit.dim_minus) == (1, 1)

    def test_random_instances(self, linalg_service, rng):
        for _ in range(50):
            audit = linalg_service.decomposition_bound_audit(rng.normal(size=(8, 6)), m1=4, threshold=1.0)
            assert audit.holds
            assert audit.holds_sharp
            assert audit.dim_minus >= 2

    def test_median_threshold_instances(self, linalg_service, rng):
        for _ in range(50):
            a = rng.normal(size=(8, 6))
            threshold = float(np.median(linalg.svdvals(a[:5])))
            audit = linalg_service.decomposition_bound_audit(a, m1=5, threshold=threshold)
            assert audit.holds
            assert not audit.degenerate

    def test_repeated_column(self, linalg_service, rng):
        a = rng.normal(size=(6, 4))
        a[:, 3] = a[:, 0]
        b = a[:3]
        audit = linalg_service.decomposition_bound_audit(a, m1=3, threshold=float(np.median(linalg.svdvals(b))))
        # e_0 - e_3 is in the kernel of B, so it lies in E- and G kills it
        assert audit.s_A == pytest.approx(0.0, abs=1e-10)
        assert audit.s_G == pytest.approx(0.0, abs=1e-10)
        assert audit.bound == pytest.approx(0.0, abs=1e-10)
        assert audit.holds

    def test_empty_minus_space_is_degenerate(self, linalg_service):
        audit = linalg_service.decomposition_bound_audit(np.eye(2), m1=1, threshold=5.0)
        assert audit.degenerate
        assert audit.dim_plus == 0
        assert audit.bound == pytest.approx(audit.s_G)
        assert audit.holds

    def test_restricted_smin(self, linalg_service):
        g = np.diag([3.0, 1.0, 2.0])
        assert linalg_service.restricted_smin(g, SubspaceBasis.coordinates(3, [0, 2])) == pytest.approx(2.0)
        assert linalg_service.restricted_smin(g[:1], SubspaceBasis.full(3)) == 0.0

    def test_restricted_smin_on_full_space(self, linalg_service, rng):
        g = rng.normal(size=(6, 4))
        value = linalg_service.restricted_smin(g, SubspaceBasis.full(4))
        assert value == pytest.approx(linalg.svdvals(g)[-1], rel=1e-12)

    def test_restricted_smin_against_circle_search(self, linalg_service, rng):
        g = rng.normal(size=(6, 4))
        q, _ = np.linalg.qr(rng.normal(size=(4, 2)))
        angles = np.linspace(0.0, np.pi, 100_000)
        points = np.outer(np.cos(angles), q[:, 0]) + np.outer(np.sin(angles), q[:, 1])
        searched = np.linalg.norm(points @ g.T, axis=1).min()
        assert linalg_service.restricted_smin(g, SubspaceBasis(q)) == pytest.approx(searched, abs=1e-3)

    def test_bad_split(self, linalg_service):
        with pytest.raises(ArgumentError):
            linalg_service.decomposition_bound_audit(np.eye(3), m1=3, threshold=0.5)


class TestNets:

    def test_one_dimensional_net(self, linalg_service):
        net = linalg_service.epsilon_net(1, 0.5)
        assert sorted(net[:, 0]) == [-1.0, 1.0]

    @pytest.mark.parametrize("k, eps", [(2, 0.5), (3, 0.5), (3, 0.3)])
    def test_net_covers_sphere(self, linalg_service, k, eps):
        report = linalg_service.net_report(k, eps, samples=100_000)
        assert report.cardinality <= report.cardinality_bound
        assert report.covering_radius <= eps

    def test_net_points_are_unit(self, linalg_service):
        net = linalg_service.epsilon_net(3, 0.5, seed=4)
        assert np.allclose(np.linalg.norm(net, axis=1), 1.0)

    def test_dimension_guard(self, linalg_service):
        with pytest.raises(UnsupportedError):
            linalg_service.epsilon_net(13, 0.5)


class TestRealEmbedding:

    @given(
        arrays(np.float64, (4, 3), elements=st.floats(-10, 10)),
        arrays(np.float64, (4, 3), elements=st.floats(-10, 10)),
        arrays(np.float64, 3, elements=st.floats(-10, 10)),
        arrays(np.float64, 3, elements=st.floats(-10, 10)),
    )
    @hyp_settings(max_examples=50, deadline=None)
    def test_embedding_is_multiplicative(self, re, im, zr, zi):
        from services.linalg_service import get_linalg_service
        service = get_linalg_service()
        b = re + 1j * im
        z = zr + 1j * zi
        left = service.real_embedding(b @ z)
        right = service.real_embedding(b) @ service.real_embedding(z)
        assert np.allclose(left, right, atol=1e-9)
        assert np.linalg.norm(service.real_embedding(z)) == pytest.approx(np.linalg.norm(z))

    def test_rejects_tensors(self, linalg_service):
        with pytest.raises(ArgumentError):
            linalg_service.real_embedding(np.zeros((2, 2, 2)))


class TestEigenpairs:

    def test_diagonal_order(self, linalg_service):
        spectral = linalg_service.eigenpairs(np.diag([1.0, 2.0, 3.0]))
        assert np.allclose(spectral.eigenvalues, [3.0, 2.0, 1.0])
        assert np.allclose(spectral.eigenvectors, np.eye(3)[:, ::-1])
        assert spectral.is_real

    def test_symmetric_random(self, linalg_service, rng):
        a = rng.normal(size=(30, 30))
        a = a + a.T
        spectral = linalg_service.eigenpairs(a)
        q = spectral.eigenvectors
        assert np.allclose(q.T @ q, np.eye(30), atol=1e-10)
        assert np.all(np.diff(spectral.eigenvalues) <= 0)
        assert spectral.max_residual < 1e-8

    def test_rotation_eigenvalues(self, linalg_service):
        spectral = linalg_service.eigenpairs(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert np.allclose(np.sort_complex(spectral.eigenvalues), [-1j, 1j])
        assert not spectral.is_real

    def test_phase_normalisation(self, linalg_service, rng):
        spectral = linalg_service.eigenpairs(rng.normal(size=(12, 12)))
        for index in range(12):
            v = spectral.vector(index)
            top = v[np.argmax(np.abs(v))]
            assert np.linalg.norm(v) == pytest.approx(1.0)
            assert abs(top.imag) < 1e-12
            assert top.real > 0
        assert spectral.max_residual < 1e-8

    def test_failures(self, linalg_service):
        with pytest.raises(ArgumentError):
            linalg_service.eigenpairs(np.zeros((2, 3)))
        bad = np.array([[1.0, np.nan], [0.0, 1.0]])
        with pytest.raises(NumericalError) as excinfo:
            linalg_service.eigenpairs(bad, seed="9:0")
        assert excinfo.value.seed == "9:0"
