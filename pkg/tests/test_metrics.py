import numpy as np
import pytest

from evogame.metrics import fit_rate, norm_n, wasserstein1_empirical


class TestNormN:
    def test_zero_on_equal(self):
        a = np.random.default_rng(0).normal(size=(6, 2))
        assert norm_n(a, a) == 0.0

    def test_hand_value(self):
        assert norm_n(np.array([[0.0], [0.0]]), np.array([[1.0], [3.0]])) == pytest.approx(2.0)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, b, c = rng.normal(size=(3, 5, 3))
            assert norm_n(a, c) <= norm_n(a, b) + norm_n(b, c) + 1e-12

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            norm_n(np.zeros((3, 1)), np.zeros((4, 1)))


class TestWasserstein:
    def test_point_masses(self):
        assert wasserstein1_empirical(np.array([[0.0]]), np.array([[1.0]])) == pytest.approx(1.0)

    def test_sorted_matching_hand_value(self):
        a = np.array([[0.0], [1.0]])
        b = np.array([[0.0], [0.0]])
        assert wasserstein1_empirical(a, b) == pytest.approx(0.5)

    def test_1d_matches_assignment_and_sorting(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            a = rng.normal(size=(n, 1))
            b = rng.normal(size=(n, 1))
            quantile = wasserstein1_empirical(a, b)
            sorted_coupling = np.mean(np.abs(np.sort(a[:, 0]) - np.sort(b[:, 0])))
            assignment = wasserstein1_empirical(np.c_[a, np.zeros(n)], np.c_[b, np.zeros(n)])
            assert quantile == pytest.approx(sorted_coupling, abs=1e-12)
            assert quantile == pytest.approx(assignment, abs=1e-12)

    def test_1d_unequal_sizes(self):
        a = np.array([[0.0], [1.0]])
        b = np.array([[0.5]])
        assert wasserstein1_empirical(a, b) == pytest.approx(0.5)

    def test_metric_properties_2d(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            a, b, c = rng.normal(size=(3, 6, 2))
            ab = wasserstein1_empirical(a, b)
            assert ab == pytest.approx(wasserstein1_empirical(b, a), abs=1e-10)
            assert ab <= (
                wasserstein1_empirical(a, c) + wasserstein1_empirical(c, b) + 1e-10
            )

    def test_bounded_by_aligned_norm(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            a, b = rng.normal(size=(2, 8, 2))
            assert wasserstein1_empirical(a, b) <= norm_n(a, b) + 1e-12

    def test_size_cap(self):
        big = np.zeros((1025, 2))
        with pytest.raises(ValueError, match="1-d projections"):
            wasserstein1_empirical(big, big)


class TestFitRate:
    def test_exact_inverse_sqrt(self):
        xs = np.array([1.0, 10.0, 100.0, 1000.0])
        assert fit_rate(xs, 1 / np.sqrt(xs)) == pytest.approx(-0.5, abs=1e-12)

    def test_constant_is_flat(self):
        assert fit_rate([1.0, 2.0, 4.0], [3.0, 3.0, 3.0]) == pytest.approx(0.0, abs=1e-12)

    def test_inverse_is_minus_one(self):
        xs = np.array([2.0, 4.0, 8.0, 16.0])
        assert fit_rate(xs, 5.0 / xs) == pytest.approx(-1.0, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fit_rate([1.0, 2.0, 3.0], [1.0, -1.0, 1.0])
        with pytest.raises(ValueError):
            fit_rate([1.0, 2.0], [1.0, 1.0])
