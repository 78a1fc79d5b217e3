import math

import numpy as np
import pytest

from evogame import forward
from evogame.forward import (
    SimConfig,
    SimulationError,
    corrupt_strategies_by_resampling,
    fast_reaction_state,
    fast_reaction_trajectory,
    run_simulation,
    step_fast_reaction,
    step_full_entropic,
    step_newtonian,
    step_undisclosed,
    undisclosed_trajectory,
)
from evogame.metrics import norm_n
from evogame.payoff import Axis, Grid, SplitPayoff, make_builtin_payoff, newton_force
from evogame.strategy import kl_divergence, softmax_strategy, space_1d

ORIGIN = make_builtin_payoff("origin_repulsion_1d")


def zero_payoff(space):
    j1 = Grid.zeros([Axis(-5.0, 5.0, 2)], (space.n_strategies,))
    j2 = Grid.zeros([Axis(-5.0, 5.0, 2)], (space.n_strategies,))
    return SplitPayoff(space, j1, j2)


class TestFullEntropicStep:
    def test_unregularized_replicator_overshoots_origin(self):
        # single agent pulled to the origin: without entropy the strategy
        # saturates and the agent shoots far past before recovering
        pos, sig = np.array([[2.0]]), np.ones((1, 2))
        xs = [2.0]
        for s in range(600):
            pos, sig = step_full_entropic(pos, sig, ORIGIN, ORIGIN.space, 1.0, 0.0, 0.02, s)
            xs.append(pos[0, 0])
        xs = np.array(xs)
        assert xs.min() < -0.5
        assert xs[xs.argmin():].max() > 0.0  # comes back after the overshoot

    def test_entropic_fast_strategies_remove_overshoot(self):
        pos, sig = np.array([[2.0]]), np.ones((1, 2))
        xs = [2.0]
        for s in range(600):
            pos, sig = step_full_entropic(pos, sig, ORIGIN, ORIGIN.space, 10.0, 0.5, 0.02, s)
            xs.append(pos[0, 0])
        xs = np.array(xs)
        assert xs.min() > -0.05
        above = xs[:-1] > 0.05
        assert np.all(np.diff(xs)[above] <= 0.0)  # monotone until the origin band
        assert abs(xs[-1]) < 0.05

    def test_zero_payoff_zero_entropy_keeps_strategies(self):
        space = space_1d((-1.0, 0.5))
        pay = zero_payoff(space)
        sig0 = np.tile([[0.5, 1.5]], (3, 1))
        pos, sig = np.zeros((3, 1)), sig0.copy()
        for s in range(20):
            pos, sig = step_full_entropic(pos, sig, pay, space, 1.0, 0.0, 0.02, s)
        np.testing.assert_allclose(sig, sig0, atol=1e-14)
        expected_v = (0.5 * -1.0 + 1.5 * 0.5) / 2
        np.testing.assert_allclose(pos[:, 0], 20 * 0.02 * expected_v, atol=1e-12)

    def test_positivity_failure_reports_agent(self):
        # the disfavoured strategy carries almost no mass: a huge step kills it
        pos, sig = np.array([[2.0]]), np.array([[2.0 - 1e-9, 1e-9]])
        with pytest.raises(SimulationError, match="agent 0"):
            step_full_entropic(pos, sig, ORIGIN, ORIGIN.space, 500.0, 0.0, 0.5, 7)


class TestUndisclosedStep:
    def test_matches_full_step_for_opponent_independent_payoff(self):
        rng = np.random.default_rng(0)
        pos = rng.uniform(-1, 1, (5, 1))
        sig = np.abs(rng.normal(1, 0.3, (5, 2)))
        sig /= sig.mean(axis=1, keepdims=True)
        a = step_full_entropic(pos, sig, ORIGIN, ORIGIN.space, 1.3, 0.7, 0.02, 0)
        b = step_undisclosed(pos, sig, ORIGIN, ORIGIN.space, 1.3, 0.7, 0.02, 0)
        np.testing.assert_allclose(a[0], b[0], atol=1e-13)
        np.testing.assert_allclose(a[1], b[1], atol=1e-13)

    def test_strategy_relaxes_toward_softmax_state(self):
        # single agent: relative entropy to the steady state decreases
        pos, sig = np.array([[2.0]]), np.ones((1, 2))
        kls = []
        for s in range(100):
            target = softmax_strategy(ORIGIN.mean_payoff(pos)[0], 1.0)
            kls.append(kl_divergence(sig[0], target))
            pos, sig = step_undisclosed(pos, sig, ORIGIN, ORIGIN.space, 0.5, 1.0, 0.02, s)
        assert all(b < a for a, b in zip(kls, kls[1:]))
        assert kls[-1] < 0.05 * kls[0]

    def test_lambda_zero_freezes_strategies(self):
        rng = np.random.default_rng(1)
        pos = rng.uniform(-1, 1, (4, 1))
        sig0 = np.abs(rng.normal(1, 0.4, (4, 2)))
        sig0 /= sig0.mean(axis=1, keepdims=True)
        _, sig = step_undisclosed(pos, sig0.copy(), ORIGIN, ORIGIN.space, 0.0, 1.0, 0.02, 0)
        np.testing.assert_array_equal(sig, sig0)

    def test_mass_conserved_every_step(self):
        rng = np.random.default_rng(2)
        pos = rng.uniform(-1, 1, (6, 1))
        sig = np.ones((6, 2))
        for s in range(200):
            pos, sig = step_undisclosed(pos, sig, ORIGIN, ORIGIN.space, 1.0, 1.0, 0.02, s)
            assert np.abs(sig.mean(axis=1) - 1.0).max() <= 1e-12
            assert sig.min() > 0


class TestFastReaction:
    def test_single_agent_closed_form_velocity(self):
        sigma, vel = fast_reaction_state(np.array([[2.0]]), ORIGIN, ORIGIN.space, 0.5)
        np.testing.assert_allclose(vel[0, 0], -math.tanh(4.0), rtol=1e-12)

    def test_zero_payoff_symmetric_strategies_rest(self):
        space = space_1d()
        pay = zero_payoff(space)
        pos = np.array([[0.4], [-1.1]])
        new_pos, sigma, vel = step_fast_reaction(pos, pay, space, 1.0, 0.02)
        np.testing.assert_array_equal(vel, np.zeros((2, 1)))
        np.testing.assert_array_equal(new_pos, pos)
        np.testing.assert_allclose(sigma, np.ones((2, 2)))

    def test_speed_bound(self):
        rng = np.random.default_rng(3)
        pos = rng.uniform(-2, 2, (6, 1))
        traj = fast_reaction_trajectory(pos, ORIGIN, ORIGIN.space, 0.3, 0.02, 50)
        steps = np.diff(traj, axis=0) / 0.02
        assert np.max(np.abs(steps)) <= ORIGIN.space.e_max + 1e-12

    def test_stability_estimate(self):
        # two nearby starts separate at most exponentially at the sampled rate
        rng = np.random.default_rng(4)
        x0 = rng.uniform(-1, 1, (6, 1))
        delta0 = 1e-3
        x1 = x0 + delta0 * rng.standard_normal(x0.shape)
        d0 = norm_n(x0, x1)
        a = fast_reaction_trajectory(x0, ORIGIN, ORIGIN.space, 1.0, 0.02, 50)
        b = fast_reaction_trajectory(x1, ORIGIN, ORIGIN.space, 1.0, 0.02, 50)
        from evogame.inference import sampled_velocity_lipschitz

        lip = sampled_velocity_lipschitz(ORIGIN, ORIGIN.space, 1.0, a, n_probes=100, seed=0)
        for s in range(51):
            assert norm_n(a[s], b[s]) <= d0 * math.exp(lip * s * 0.02) + 1e-12


class TestNewtonian:
    def test_single_agent_velocity(self):
        pos = step_newtonian(np.array([[2.0]]), newton_force, 1.0)
        np.testing.assert_allclose(pos, [[0.0]])  # velocity f(2,2) = -2

    def test_zero_force_is_static(self):
        pos = np.array([[1.0], [-2.0]])
        out = step_newtonian(pos, lambda x, xp: np.zeros_like(x), 0.05)
        np.testing.assert_array_equal(out, pos)

    def test_odd_force_preserves_symmetry(self):
        pos = np.array([[0.8], [-0.8]])
        for _ in range(200):
            pos = step_newtonian(pos, newton_force, 0.02)
            np.testing.assert_allclose(pos[0], -pos[1], atol=1e-14)


class TestRunSimulation:
    def protocol_config(self, **kw):
        base = dict(
            model="fast_reaction", n_agents=8, dt=0.02, steps=10, subsample=2,
            realizations=100, seed=7, eps=1.0,
            init={"kind": "uniform_box", "low": [-1.0], "high": [1.0]},
        )
        base.update(kw)
        return SimConfig(**base)

    def test_observation_protocol_counts(self):
        data = run_simulation(self.protocol_config(), ORIGIN)
        assert len(data.snapshots) == 500  # 5 per realization, t=0 included
        run = data.realization(0)
        np.testing.assert_allclose([s.t for s in run], [0.0, 0.04, 0.08, 0.12, 0.16])

    def test_zero_steps_records_initial_state(self):
        data = run_simulation(self.protocol_config(steps=0, realizations=3), ORIGIN)
        assert len(data.snapshots) == 3
        assert all(s.t == 0.0 for s in data.snapshots)

    def test_dense_sampling_is_superset(self):
        coarse = run_simulation(self.protocol_config(realizations=2), ORIGIN)
        fine = run_simulation(self.protocol_config(realizations=2, subsample=1), ORIGIN)
        fine_by_key = {(s.realization, round(s.t, 12)): s for s in fine.snapshots}
        for snap in coarse.snapshots:
            match = fine_by_key[(snap.realization, round(snap.t, 12))]
            np.testing.assert_array_equal(snap.x, match.x)
            np.testing.assert_array_equal(snap.sigma, match.sigma)

    def test_same_seed_bit_identical_file(self, tmp_path):
        cfg = self.protocol_config(realizations=5)
        p1, p2 = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
        run_simulation(cfg, ORIGIN).save(p1)
        run_simulation(cfg, ORIGIN).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_worker_count_does_not_change_results(self, tmp_path):
        cfg = self.protocol_config(realizations=4)
        serial = run_simulation(cfg, ORIGIN, threads=1)
        parallel = run_simulation(cfg, ORIGIN, threads=2)
        p1, p2 = tmp_path / "s.ndjson", tmp_path / "p.ndjson"
        serial.save(p1)
        parallel.save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_recorded_velocities_consistent_with_strategies(self):
        data = run_simulation(self.protocol_config(realizations=3), ORIGIN)
        assert data.validate() <= 1e-10

    def test_undisclosed_simulation_records_strategies(self):
        cfg = self.protocol_config(model="undisclosed", realizations=2, lam=2.0)
        data = run_simulation(cfg, ORIGIN)
        assert data.has_strategies
        assert data.validate() <= 1e-10

    def test_integrator_error_reports_realization(self):
        cfg = self.protocol_config(model="undisclosed", realizations=1, lam=1e8)
        with pytest.raises(SimulationError, match="realization 0"):
            run_simulation(cfg, ORIGIN)


class TestCorruption:
    def make_data(self, realizations=20):
        cfg = SimConfig(
            model="fast_reaction", n_agents=8, dt=0.02, steps=10, subsample=2,
            realizations=realizations, seed=7, eps=1.0,
            init={"kind": "uniform_box", "low": [-1.0], "high": [1.0]},
        )
        return run_simulation(cfg, ORIGIN)

    def test_consistency_preserved(self):
        data = self.make_data(5)
        corrupted = corrupt_strategies_by_resampling(data, 20, seed=1)
        assert corrupted.validate() <= 1e-10

    def test_dirac_strategies_unchanged(self):
        from evogame.dataset import Snapshot, TrajectoryDataset

        data = self.make_data(1)
        dirac = np.tile([[2.0, 0.0]], (8, 1))
        snap = data.snapshots[0]
        ds = TrajectoryDataset(
            dict(data.meta),
            [Snapshot(0, 0.0, snap.x, snap.x * 0.0 - 1.0, dirac)],
        )
        out = corrupt_strategies_by_resampling(ds, 20, seed=2)
        np.testing.assert_array_equal(out.snapshots[0].sigma, dirac)

    def test_many_draws_recover_strategy(self):
        # law of large numbers: the mean corrupted strategy approaches the original
        from evogame.dataset import Snapshot, TrajectoryDataset

        sigma = np.array([[0.5, 1.5]])
        base = TrajectoryDataset(
            {"strategy_points": [[-1.0], [1.0]], "dt": 0.02},
            [Snapshot(0, 0.0, np.zeros((1, 1)), np.array([[0.5]]), sigma)],
        )
        draws = 400
        reps = 1000
        total = np.zeros(2)
        for s in range(reps):
            out = corrupt_strategies_by_resampling(base, draws, seed=s)
            total += out.snapshots[0].sigma[0]
        mean = total / reps
        # binomial standard error of the empirical density entry
        p = 0.25  # probability of drawing the first strategy
        se = 2.0 * math.sqrt(p * (1 - p) / draws) / math.sqrt(reps)
        assert abs(mean[0] - 0.5) <= 3.0 * se

    def test_velocity_corruption_std(self):
        data = self.make_data(100)
        corrupted = corrupt_strategies_by_resampling(data, 20, seed=99)
        dv = np.concatenate(
            [c.v - s.v for c, s in zip(corrupted.snapshots, data.snapshots)]
        )
        assert 0.15 <= float(np.std(dv)) <= 0.25

    def test_requires_strategies(self):
        cfg = SimConfig(
            model="newtonian", n_agents=4, dt=0.02, steps=4, realizations=1, seed=0,
            init={"kind": "uniform_box", "low": [-1.0], "high": [1.0]},
        )
        data = run_simulation(cfg, newton_force)
        with pytest.raises(ValueError):
            corrupt_strategies_by_resampling(data, 20, seed=0)
