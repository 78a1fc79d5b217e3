"""Forward integrators for the five interaction models and dataset generation.

All models are advanced by explicit Euler steps.  Strategy-carrying models
renormalize densities after every step (the analytic drifts conserve the
reference-measure mean, so this only removes rounding drift) and abort when a
density leaves the positive cone, which signals a too-large time step.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import pedestrian as ped
from .dataset import Snapshot, TrajectoryDataset
from .payoff import pair_matrix_from_undisclosed
from .strategy import StrategySpace, softmax_strategy


class SimulationError(RuntimeError):
    """Integrator failure, annotated with the offending agent / step / realization."""


MODELS = ("full_entropic", "undisclosed", "fast_reaction", "newtonian", "pedestrian",
          "pedestrian_game")


@dataclass
class SimConfig:
    model: str
    n_agents: int
    dt: float
    steps: int
    subsample: int = 2
    realizations: int = 1
    seed: int = 0
    eps: float = 1.0
    lam: float = 1.0
    record_strategies: bool = True
    init: dict = field(default_factory=dict)
    pedestrian: ped.PedestrianParams = field(default_factory=ped.PedestrianParams)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.subsample < 1 or self.steps < 0 or self.realizations < 1:
            raise ValueError("subsample >= 1, steps >= 0 and realizations >= 1 required")
        if self.model in ("full_entropic", "undisclosed") and self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.model != "newtonian" and self.eps < 0:
            raise ValueError("eps must be nonnegative")

    def snapshot_steps(self) -> list[int]:
        """Recorded step indices: every subsample-th step starting at t=0."""
        if self.steps == 0:
            return [0]
        return list(range(0, self.steps, self.subsample))


# ---------------------------------------------------------------------------
# single Euler steps (pure array functions)
# ---------------------------------------------------------------------------


def ensemble_velocities(positions, strategies, space: StrategySpace) -> np.ndarray:
    """Instantaneous velocities (1/K) sum_k e(x_i,u_k) sigma_{i,k} for the ensemble."""
    if space.e_map is None:
        return strategies @ space.points / space.n_strategies
    return np.stack(
        [strategies[i] @ space.velocities(positions[i]) / space.n_strategies
         for i in range(positions.shape[0])]
    )


def _renormalize(strategies, step: int):
    bad = np.nonzero(strategies.min(axis=1) <= 0.0)[0]
    if bad.size:
        raise SimulationError(
            f"strategy of agent {int(bad[0])} left the positive cone at step {step}; "
            "reduce dt or lambda"
        )
    return strategies / strategies.mean(axis=1, keepdims=True)


def replicator_ensemble_drift(strategies, mean_payoffs) -> np.ndarray:
    """Vectorized undisclosed replicator drift for all agents at once."""
    inner = np.mean(mean_payoffs * strategies, axis=1, keepdims=True)
    return (mean_payoffs - inner) * strategies


def entropy_ensemble_drift(strategies, eps: float) -> np.ndarray:
    logs = np.log(strategies)
    inner = np.mean(logs * strategies, axis=1, keepdims=True)
    return eps * (inner - logs) * strategies


def step_full_entropic(positions, strategies, payoff, space, lam, eps, dt, step=0):
    """One Euler step of the entropic dynamics with fully disclosed strategies."""
    if hasattr(payoff, "pair_payoff_matrix"):
        pair = payoff.pair_payoff_matrix(positions)
    else:
        pair = pair_matrix_from_undisclosed(payoff, positions)
    # mean over opponents of the disclosed payoff, eta-averaged over their strategies
    g = np.einsum("ijkl,jl->ik", pair, strategies) / (strategies.shape[1] * positions.shape[0])
    drift = replicator_ensemble_drift(strategies, g)
    if eps > 0.0:
        drift = drift + entropy_ensemble_drift(strategies, eps)
    new_pos = positions + dt * ensemble_velocities(positions, strategies, space)
    new_sig = _renormalize(strategies + dt * lam * drift, step)
    return new_pos, new_sig


def step_undisclosed(positions, strategies, payoff, space, lam, eps, dt, step=0):
    """One Euler step of the entropic dynamics when only positions are observed."""
    g = payoff.mean_payoff(positions)
    drift = replicator_ensemble_drift(strategies, g)
    if eps > 0.0:
        drift = drift + entropy_ensemble_drift(strategies, eps)
    new_pos = positions + dt * ensemble_velocities(positions, strategies, space)
    new_sig = _renormalize(strategies + dt * lam * drift, step)
    return new_pos, new_sig


def fast_reaction_state(positions, payoff, space, eps):
    """Steady-state strategies and velocities for fixed positions."""
    sigma = softmax_strategy(payoff.mean_payoff(positions), eps)
    return sigma, ensemble_velocities(positions, sigma, space)


def step_fast_reaction(positions, payoff, space, eps, dt):
    """Euler step of the quasi-static spatial ODE; returns the pre-step state too."""
    sigma, vel = fast_reaction_state(positions, payoff, space, eps)
    return positions + dt * vel, sigma, vel


def fast_reaction_trajectory(x0, payoff, space, eps, dt, steps):
    """Positions of the quasi-static model at every step, shape (steps+1, N, d)."""
    out = np.empty((steps + 1,) + np.shape(x0))
    out[0] = x0
    for s in range(steps):
        out[s + 1] = step_fast_reaction(out[s], payoff, space, eps, dt)[0]
    return out


def undisclosed_trajectory(x0, sigma0, payoff, space, lam, eps, dt, steps):
    """Positions and strategies of the undisclosed model at every step."""
    pos = np.empty((steps + 1,) + np.shape(x0))
    sig = np.empty((steps + 1,) + np.shape(sigma0))
    pos[0], sig[0] = x0, sigma0
    for s in range(steps):
        pos[s + 1], sig[s + 1] = step_undisclosed(
            pos[s], sig[s], payoff, space, lam, eps, dt, s
        )
    return pos, sig


def newtonian_trajectory(x0, force, dt, steps):
    out = np.empty((steps + 1,) + np.shape(x0))
    out[0] = x0
    for s in range(steps):
        out[s + 1] = step_newtonian(out[s], force, dt)
    return out


def newtonian_velocities(positions, force) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    xi = np.repeat(pos, n, axis=0)
    xj = np.tile(pos, (n, 1))
    return force(xi, xj).reshape(n, n, -1).mean(axis=1)


def pedestrian_game_rates(positions, theta, theta_bar, model, eps) -> np.ndarray:
    """Steady-state heading rates (1/K) sum_k u_k sigma_k under a heading-frame payoff."""
    sigma = softmax_strategy(model.mean_payoff(positions, theta, theta_bar), eps)
    return sigma @ model.space.points.ravel() / model.space.n_strategies


def step_pedestrian_game(positions, theta, theta_bar, model, eps, dt):
    """Euler step of the unit-speed walker dynamics driven by a fitted payoff."""
    from .payoff import wrap_angle

    rates = pedestrian_game_rates(positions, theta, theta_bar, model, eps)
    velocities = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return positions + dt * velocities, wrap_angle(theta + dt * rates)


def step_newtonian(positions, force, dt):
    return positions + dt * newtonian_velocities(positions, force)


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------


def sample_initial(config: SimConfig, r: int, rng: np.random.Generator):
    """Initial state of realization r: positions plus model-specific extras."""
    init = config.init
    kind = init.get("kind", "uniform_box")
    if kind == "explicit":
        pos = np.asarray(init["positions"], dtype=float)
        pos = pos[r % pos.shape[0]] if pos.ndim == 3 else pos
        return np.array(pos, dtype=float), None, None
    if kind == "uniform_box":
        low = np.asarray(init.get("low", [-1.0]), dtype=float)
        high = np.asarray(init.get("high", [1.0]), dtype=float)
        pos = rng.uniform(low, high, size=(config.n_agents, low.size))
        return pos, None, None
    if kind == "pedestrian_groups":
        return ped.sample_groups(init, config.realizations, r, rng)
    if kind == "explicit_pedestrian":
        pos = np.asarray(init["positions"], dtype=float)
        theta = np.asarray(init["theta"], dtype=float)
        theta_bar = np.asarray(init["theta_bar"], dtype=float)
        if pos.ndim == 3:
            idx = r % pos.shape[0]
            return pos[idx].copy(), theta[idx].copy(), theta_bar[idx].copy()
        return pos.copy(), theta.copy(), theta_bar.copy()
    raise ValueError(f"unknown initial sampler {kind!r}")


def initial_strategies(config: SimConfig, init: dict, n_strategies: int) -> np.ndarray:
    sigma0 = init.get("sigma0")
    if sigma0 is None:
        return np.ones((config.n_agents, n_strategies))
    sigma0 = np.asarray(sigma0, dtype=float)
    return np.tile(sigma0, (config.n_agents, 1)) if sigma0.ndim == 1 else sigma0.copy()


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------


def _run_realization(config: SimConfig, payoff, space, r: int) -> list[Snapshot]:
    rng = np.random.default_rng([config.seed, r])
    positions, theta, theta_bar = sample_initial(config, r, rng)
    record_at = set(config.snapshot_steps())
    last = max(record_at)
    snaps: list[Snapshot] = []
    model = config.model

    if model in ("pedestrian", "pedestrian_game"):
        for s in range(last + 1):
            if s in record_at:
                v = np.stack([np.cos(theta), np.sin(theta)], axis=1)
                snaps.append(Snapshot(r, s * config.dt, positions.copy(), v,
                                      None, theta.copy(), theta_bar.copy()))
            if model == "pedestrian":
                positions, theta = ped.step_pedestrian(
                    positions, theta, theta_bar, config.pedestrian, config.dt
                )
            else:
                positions, theta = step_pedestrian_game(
                    positions, theta, theta_bar, payoff, config.eps, config.dt
                )
        return snaps

    if model == "newtonian":
        for s in range(last + 1):
            if s in record_at:
                snaps.append(Snapshot(r, s * config.dt, positions.copy(),
                                      newtonian_velocities(positions, payoff)))
            positions = step_newtonian(positions, payoff, config.dt)
        return snaps

    if model == "fast_reaction":
        for s in range(last + 1):
            sigma, vel = fast_reaction_state(positions, payoff, space, config.eps)
            if s in record_at:
                snaps.append(Snapshot(r, s * config.dt, positions.copy(), vel,
                                      sigma if config.record_strategies else None))
            positions = positions + config.dt * vel
        return snaps

    strategies = initial_strategies(config, config.init, space.n_strategies)
    stepper = step_full_entropic if model == "full_entropic" else step_undisclosed
    for s in range(last + 1):
        if s in record_at:
            vel = ensemble_velocities(positions, strategies, space)
            snaps.append(Snapshot(r, s * config.dt, positions.copy(), vel,
                                  strategies.copy() if config.record_strategies else None))
        try:
            positions, strategies = stepper(
                positions, strategies, payoff, space, config.lam, config.eps, config.dt, s
            )
        except SimulationError as exc:
            raise SimulationError(f"realization {r}: {exc}") from exc
    return snaps


def _worker(args):
    return _run_realization(*args)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("EVOGAME_THREADS", "0"))
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, threads)


def run_simulation(config: SimConfig, payoff=None, space: StrategySpace | None = None,
                   threads: int = 1) -> TrajectoryDataset:
    """Simulate all realizations of a model and collect a trajectory dataset.

    ``payoff`` is a payoff model for the game dynamics, a pairwise force
    callable for the newtonian model, and ignored for the pedestrian model.
    Every realization draws its own deterministic stream from (seed, index),
    so datasets are reproducible bit-for-bit for a fixed resolved config,
    independent of the worker count.
    """
    if space is None and config.model in ("full_entropic", "undisclosed", "fast_reaction"):
        space = payoff.space
    meta = {
        "model": config.model,
        "n_agents": config.n_agents,
        "dt": config.dt,
        "steps": config.steps,
        "subsample": config.subsample,
        "realizations": config.realizations,
        "seed": config.seed,
        "eps": config.eps,
        "lam": config.lam,
        "init": config.init,
    }
    if space is not None:
        meta["strategy_points"] = space.points
        meta["e_map"] = "identity"
        meta["e_max"] = space.e_max
    if config.model == "pedestrian":
        meta["pedestrian"] = vars(config.pedestrian).copy()
    if config.model in ("pedestrian", "pedestrian_game"):
        meta["strategy_points"] = None

    workers = resolve_threads(threads)
    jobs = [(config, payoff, space, r) for r in range(config.realizations)]
    if workers > 1 and config.realizations > 1:
        with ProcessPoolExecutor(max_workers=min(workers, config.realizations)) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        results = [_run_realization(*job) for job in jobs]

    snapshots = [snap for run in results for snap in run]
    return TrajectoryDataset(meta, snapshots)


def corrupt_strategies_by_resampling(dataset: TrajectoryDataset, draws: int,
                                     seed: int) -> TrajectoryDataset:
    """Replace each recorded strategy by the empirical density of i.i.d. draws.

    Velocities are recomputed from the corrupted strategies so the dataset's
    strategy/velocity consistency is preserved.
    """
    if not dataset.has_strategies:
        raise ValueError("dataset carries no strategies to corrupt")
    if draws < 1:
        raise ValueError("draws must be a positive integer")
    space = dataset.strategy_space()
    k = space.n_strategies
    rng = np.random.default_rng([seed])
    snapshots = []
    for snap in dataset.snapshots:
        probs = snap.sigma / k
        counts = np.stack([rng.multinomial(draws, p) for p in probs])
        sigma = counts * (k / draws)
        v = ensemble_velocities(snap.x, sigma, space)
        snapshots.append(Snapshot(snap.realization, snap.t, snap.x.copy(), v, sigma))
    meta = dict(dataset.meta)
    meta["corruption"] = {"draws": draws, "seed": seed}
    return TrajectoryDataset(meta, snapshots)
