import math

import numpy as np
import pytest

from evogame.strategy import (
    StrategyDomainError,
    StrategySpace,
    check_density,
    entropic_box_bounds,
    entropy_drift,
    hellinger_tangent_distance,
    kl_divergence,
    replicator_drift_full,
    replicator_drift_undisclosed,
    softmax_strategy,
    space_1d,
    strategy_velocity,
    uniform_density,
)


def random_density(rng, k):
    d = rng.uniform(0.05, 2.0, k)
    return d / d.mean()


class TestSoftmax:
    def test_constant_payoff_gives_uniform(self):
        for eps in (0.1, 1.0, 7.0):
            np.testing.assert_allclose(softmax_strategy(np.zeros(4), eps), np.ones(4))

    def test_two_point_closed_form(self):
        # g(u) = -x*u over U={-1,+1} at x=2, eps=0.5: densities 2/(1+e^-8), 2/(1+e^8)
        sigma = softmax_strategy(np.array([2.0, -2.0]), 0.5)
        np.testing.assert_allclose(sigma[0], 2.0 / (1.0 + math.exp(-8.0)), rtol=1e-14)
        np.testing.assert_allclose(sigma[1], 2.0 / (1.0 + math.exp(8.0)), rtol=1e-14)
        assert abs(sigma[0] - 1.9993292997390673) < 1e-12

    def test_shift_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            # dyadic payoffs and shifts make g + c exact, so equality is bitwise
            g = rng.integers(-64, 64, size=5) / 16.0
            c = float(rng.integers(-640, 640)) / 16.0
            np.testing.assert_array_equal(
                softmax_strategy(g, 0.7), softmax_strategy(g + c, 0.7)
            )
        for _ in range(50):
            g = rng.normal(size=5)
            c = rng.normal() * 10
            np.testing.assert_allclose(
                softmax_strategy(g, 0.7), softmax_strategy(g + c, 0.7), rtol=1e-12
            )

    def test_overflow_safety(self):
        sigma = softmax_strategy(np.array([4000.0, -4000.0]), 1.0)
        assert np.all(np.isfinite(sigma))
        assert abs(sigma.mean() - 1.0) < 1e-12

    def test_bounds_from_payoff_sup(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            k = int(rng.integers(2, 6))
            m = rng.uniform(0.1, 3.0)
            eps = rng.uniform(0.2, 2.0)
            g = rng.uniform(-m, m, k)
            sigma = softmax_strategy(g, eps)
            lo, hi = math.exp(-2 * m / eps), math.exp(2 * m / eps)
            assert np.all(sigma >= lo - 1e-15) and np.all(sigma <= hi + 1e-12)

    def test_sampled_lipschitz_two_strategies(self):
        # |softmax(g) - softmax(g')| <= (2/eps) max|g-g'|, provable for K=2
        rng = np.random.default_rng(5)
        for _ in range(500):
            eps = rng.uniform(0.1, 2.0)
            g = rng.normal(0, 3, 2)
            gp = g + rng.normal(0, 1, 2)
            gap = np.max(np.abs(softmax_strategy(g, eps) - softmax_strategy(gp, eps)))
            assert gap <= 1.01 * (2.0 / eps) * np.max(np.abs(g - gp))

    def test_rejects_bad_input(self):
        with pytest.raises(StrategyDomainError):
            softmax_strategy(np.array([1.0, np.nan]), 1.0)
        with pytest.raises(StrategyDomainError):
            softmax_strategy(np.array([1.0, 2.0]), 0.0)


class TestStrategyVelocity:
    def test_uniform_symmetric_is_zero(self):
        sp = space_1d()
        assert strategy_velocity(np.array([0.3]), uniform_density(2), sp) == 0.0

    def test_softmax_velocity_closed_form(self):
        sp = space_1d()
        sigma = softmax_strategy(np.array([2.0, -2.0]), 0.5)
        v = strategy_velocity(np.array([2.0]), sigma, sp)
        np.testing.assert_allclose(v, [-math.tanh(4.0)], rtol=1e-13)

    def test_dirac_recovers_pure_velocity(self):
        sp = space_1d((-1.0, 0.0, 1.0))
        sigma = np.array([0.0, 0.0, 3.0])
        np.testing.assert_allclose(strategy_velocity(np.zeros(1), sigma, sp), [1.0])

    def test_speed_bound(self):
        rng = np.random.default_rng(7)
        sp = StrategySpace(rng.normal(size=(5, 2)))
        for _ in range(100):
            v = strategy_velocity(np.zeros(2), random_density(rng, 5), sp)
            assert np.linalg.norm(v) <= sp.e_max + 1e-12

    def test_dimension_mismatch_rejected(self):
        sp = StrategySpace(np.array([[1.0], [-1.0]]), e_map=lambda x, u: np.ones((3, 1)))
        with pytest.raises(StrategyDomainError):
            strategy_velocity(np.zeros(1), uniform_density(2), sp)


class TestReplicatorDrift:
    def test_constant_payoff_vanishes(self):
        sigma = np.array([0.5, 0.7, 1.8])
        np.testing.assert_allclose(
            replicator_drift_undisclosed(sigma, np.full(3, 2.5)), np.zeros(3), atol=1e-15
        )

    def test_uniform_two_point_hand_value(self):
        drift = replicator_drift_undisclosed(uniform_density(2), np.array([1.0, -1.0]))
        np.testing.assert_allclose(drift, [1.0, -1.0])

    def test_conservation(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            k = int(rng.integers(2, 7))
            drift = replicator_drift_undisclosed(random_density(rng, k), rng.normal(size=k))
            assert abs(drift.mean()) < 1e-14

    def test_full_reduces_to_undisclosed_when_opponent_independent(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            k = int(rng.integers(2, 5))
            sigma = random_density(rng, k)
            other = random_density(rng, k)
            h = rng.normal(size=k)
            full = replicator_drift_full(sigma, other, np.tile(h[:, None], (1, k)))
            np.testing.assert_allclose(
                full, replicator_drift_undisclosed(sigma, h), atol=1e-13
            )

    def test_full_opponent_constant_in_own_strategy_vanishes(self):
        rng = np.random.default_rng(29)
        sigma = random_density(rng, 3)
        other = random_density(rng, 3)
        A = np.tile(rng.normal(size=3)[None, :], (3, 1))  # independent of own strategy
        np.testing.assert_allclose(
            replicator_drift_full(sigma, other, A), np.zeros(3), atol=1e-14
        )

    def test_full_against_nested_loop_oracle(self):
        rng = np.random.default_rng(31)
        k = 3
        sigma = random_density(rng, k)
        other = random_density(rng, k)
        A = rng.normal(size=(k, k))
        expected = np.empty(k)
        for i in range(k):
            inner = sum(A[i, kp] * other[kp] for kp in range(k)) / k
            mean = sum(
                A[l, kp] * other[kp] * sigma[l] for l in range(k) for kp in range(k)
            ) / k**2
            expected[i] = (inner - mean) * sigma[i]
        np.testing.assert_allclose(replicator_drift_full(sigma, other, A), expected, atol=1e-13)


class TestEntropyDrift:
    def test_uniform_vanishes(self):
        np.testing.assert_allclose(entropy_drift(uniform_density(4), 2.0), np.zeros(4))

    def test_two_point_hand_value(self):
        # density (0.5, 1.5), eps=1: mean(sigma log sigma) = 0.130812035941137
        drift = entropy_drift(np.array([0.5, 1.5]), 1.0)
        np.testing.assert_allclose(drift, [0.41197960825054115, -0.41197960825054115],
                                   rtol=1e-12)

    def test_linear_in_eps(self):
        sigma = np.array([0.2, 0.8, 2.0])
        np.testing.assert_allclose(entropy_drift(sigma, 3.0), 3.0 * entropy_drift(sigma, 1.0))

    def test_conservation(self):
        rng = np.random.default_rng(37)
        for _ in range(200):
            drift = entropy_drift(random_density(rng, int(rng.integers(2, 7))), 1.3)
            assert abs(drift.mean()) < 1e-14

    def test_rejects_nonpositive_density(self):
        with pytest.raises(StrategyDomainError):
            entropy_drift(np.array([0.0, 2.0]), 1.0)


class TestKLDivergence:
    def test_identity_is_zero(self):
        sigma = np.array([0.3, 1.7])
        assert kl_divergence(sigma, sigma) == 0.0

    def test_hand_value(self):
        assert abs(kl_divergence(np.array([0.5, 1.5]), np.ones(2)) - 0.13081203594113697) < 1e-15

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(41)
        for _ in range(300):
            k = int(rng.integers(2, 6))
            p, q = random_density(rng, k), random_density(rng, k)
            val = kl_divergence(p, q)
            assert val >= 0.0
            if not np.allclose(p, q):
                assert val > 0.0

    def test_pinsker_inequality(self):
        rng = np.random.default_rng(43)
        for _ in range(1000):
            k = int(rng.integers(2, 6))
            p, q = random_density(rng, k), random_density(rng, k)
            l1 = np.mean(np.abs(p - q))
            assert kl_divergence(p, q) >= 0.5 * l1**2 - 1e-15

    def test_infinite_branch(self):
        assert kl_divergence(np.array([2.0, 0.0]), np.array([0.0, 2.0])) == math.inf

    def test_zero_mass_in_p_is_fine(self):
        assert kl_divergence(np.array([0.0, 2.0]), np.array([2.0, 0.0])) == math.inf
        val = kl_divergence(np.array([0.0, 2.0]), np.array([1.0, 1.0]))
        assert val == pytest.approx(math.log(2.0))


class TestHellingerTangent:
    def test_equal_tangents_zero(self):
        assert hellinger_tangent_distance(np.ones(3), np.ones(3), np.ones(3)) == 0.0

    def test_uniform_hand_value(self):
        val = hellinger_tangent_distance(np.ones(2), np.array([1.0, -1.0]), np.zeros(2))
        assert val == pytest.approx(0.5, abs=1e-15)

    def test_symmetry(self):
        rng = np.random.default_rng(47)
        for _ in range(50):
            sigma = random_density(rng, 4)
            a, b = rng.normal(size=4), rng.normal(size=4)
            assert hellinger_tangent_distance(sigma, a, b) == pytest.approx(
                hellinger_tangent_distance(sigma, b, a)
            )

    def test_rejects_zero_density(self):
        with pytest.raises(StrategyDomainError):
            hellinger_tangent_distance(np.array([0.0, 2.0]), np.ones(2), np.zeros(2))


class TestSpaceAndDensity:
    def test_space_requires_distinct_points(self):
        with pytest.raises(ValueError):
            StrategySpace(np.array([[1.0], [1.0]]))

    def test_check_density_normalization(self):
        with pytest.raises(StrategyDomainError):
            check_density(np.array([1.0, 1.1]))
        check_density(np.array([0.5, 1.5]))

    def test_box_bounds_contain_softmax_range(self):
        a, b = entropic_box_bounds(2.0, 1.0)
        assert a < math.exp(-4.0) < math.exp(4.0) < b

    def test_hull_margin_1d(self):
        sp = space_1d()
        assert sp.hull_margin(0.25) == pytest.approx(0.75)
        assert sp.hull_margin(1.5) < 0

    def test_hull_margin_2d(self):
        sp = StrategySpace(np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]))
        assert sp.hull_margin(np.zeros(2)) == pytest.approx(1.0)
        assert sp.hull_margin(np.array([2.0, 0.0])) < 0
