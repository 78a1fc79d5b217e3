"""Payoff inference: variational mismatch energies, gradients and minimization.

All grid payoffs are linear in their coefficients, so every energy is assembled
once into a sparse design matrix mapping coefficients to per-observation payoff
rows; objective and gradient evaluations are then sparse matrix products plus a
softmax, which keeps the quasi-Newton loop fast.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import xlogy

from .dataset import TrajectoryDataset
from .forward import fast_reaction_state
from .metrics import norm_n
from .optim import MinimizeResult, lbfgs
from .payoff import (
    Axis,
    FullPairPayoff,
    Grid,
    PedestrianPayoff,
    SplitPayoff,
    gauge_normalize_full_pair,
    wrap_angle,
)
from .strategy import StrategySpace, softmax_strategy

FUNCTIONALS = ("sigma", "velocity", "differential", "pedestrian_velocity")

PEDESTRIAN_J2_BOX = ((-0.15, 1.5), (-0.6, 0.6))


class HullError(ValueError):
    """An observed velocity cannot be represented by any mixed strategy."""


@dataclass
class InferenceProblem:
    dataset: TrajectoryDataset
    model: object
    functional: str
    lambda1: float = 1e-6
    lambda2: float = 1e-6
    eps: float = 1.0
    max_iterations: int = 500
    tolerance: float = 1e-6
    memory: int = 10

    def __post_init__(self):
        if self.functional not in FUNCTIONALS:
            raise ValueError(f"unknown functional {self.functional!r}")
        if self.functional in ("sigma", "differential") and not self.dataset.has_strategies:
            raise ValueError(f"the {self.functional} functional needs observed strategies")
        if self.functional == "pedestrian_velocity" and not self.dataset.has_headings:
            raise ValueError("the pedestrian functional needs heading observations")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularization weights must be nonnegative")


@dataclass
class InferenceReport:
    status: str
    iterations: int
    objective_trace: list[float]
    final_data_term: float
    grad_norm: float
    wall_ms: float
    coefficients: np.ndarray = field(repr=False)
    model: object = field(repr=False, default=None)

    def to_json_obj(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "objective_trace": list(self.objective_trace),
            "final_data_term": self.final_data_term,
            "grad_norm": self.grad_norm,
            "wall_ms": self.wall_ms,
        }


# ---------------------------------------------------------------------------
# design assembly
# ---------------------------------------------------------------------------


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.data = [], [], []

    def add(self, row_ids, node_idx, weights, offset, n_slots):
        """Spread grid weights over rows: one column per (node, strategy slot)."""
        b, p = node_idx.shape
        k = np.arange(n_slots)
        rows = (row_ids[:, None, None] * n_slots + k[None, None, :]).repeat(p, axis=1)
        cols = offset + node_idx[:, :, None] * n_slots + k[None, None, :]
        data = np.repeat(weights[:, :, None], n_slots, axis=2)
        self.rows.append(rows.ravel())
        self.cols.append(cols.ravel())
        self.data.append(data.ravel())

    def matrix(self, shape) -> sp.csr_matrix:
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        data = np.concatenate(self.data)
        return sp.coo_matrix((data, (rows, cols)), shape=shape).tocsr()


@dataclass
class _Design:
    """Sparse map from flat coefficients to per-(observation, strategy) payoffs."""

    weights: sp.csr_matrix           # (M*K, C)
    n_rows: int                      # M
    n_strategies: int                # K
    sigma_obs: Optional[np.ndarray] = None   # (M, K)
    v_obs: Optional[np.ndarray] = None       # (M, d)
    e_table: Optional[np.ndarray] = None     # (K, d)

    def payoff_rows(self, coeffs) -> np.ndarray:
        return (self.weights @ coeffs).reshape(self.n_rows, self.n_strategies)

    def gradient_from_rows(self, grad_rows) -> np.ndarray:
        return self.weights.T @ grad_rows.ravel()


def assemble_split_design(dataset: TrajectoryDataset, model: SplitPayoff) -> _Design:
    """Design matrix for the steady-state energies with the split-payoff ansatz."""
    k = model.space.n_strategies
    c1 = model.j1.n_coefficients
    trip = _Triplets()
    sigma_rows, v_rows = [], []
    base = 0
    for snap in dataset.snapshots:
        n = snap.x.shape[0]
        rows = base + np.arange(n)
        nodes1, w1 = model.j1.interpolation_weights(snap.x)
        trip.add(rows, nodes1, w1, 0, k)
        deltas = (snap.x[None, :, :] - snap.x[:, None, :]).reshape(n * n, -1)
        nodes2, w2 = model.j2.interpolation_weights(deltas)
        trip.add(np.repeat(rows, n), nodes2, w2 / n, c1, k)
        if snap.sigma is not None:
            sigma_rows.append(snap.sigma)
        v_rows.append(snap.v)
        base += n
    total = c1 + model.j2.n_coefficients
    return _Design(
        trip.matrix((base * k, total)),
        base,
        k,
        np.concatenate(sigma_rows) if sigma_rows else None,
        np.concatenate(v_rows),
        model.space.points,
    )


def assemble_pedestrian_design(dataset: TrajectoryDataset, model: PedestrianPayoff) -> _Design:
    """Design matrix for the heading-rate energy; one row per snapshot pair and agent.

    The payoff is evaluated at the later snapshot of each consecutive pair and
    compared against the backward finite difference of the headings.
    """
    k = model.space.n_strategies
    c1 = model.j1.n_coefficients
    trip = _Triplets()
    rate_rows = []
    base = 0
    for run in dataset.realizations():
        for prev, snap in zip(run, run[1:]):
            n = snap.x.shape[0]
            rows = base + np.arange(n)
            own = wrap_angle(snap.theta - snap.theta_bar)[:, None]
            nodes1, w1 = model.j1.interpolation_weights(own)
            trip.add(rows, nodes1, w1, 0, k)
            xi = np.repeat(snap.x, n, axis=0)
            xj = np.tile(snap.x, (n, 1))
            ti = np.repeat(snap.theta, n)
            tj = np.tile(snap.theta, n)
            queries = model.relative_queries(xi, ti, xj, tj)
            nodes2, w2 = model.j2.interpolation_weights(queries)
            trip.add(np.repeat(rows, n), nodes2, w2 / n, c1, k)
            rate = wrap_angle(snap.theta - prev.theta) / (snap.t - prev.t)
            rate_rows.append(rate[:, None])
            base += n
    if base == 0:
        raise ValueError("the pedestrian functional needs at least one snapshot pair")
    total = c1 + model.j2.n_coefficients
    return _Design(
        trip.matrix((base * k, total)),
        base,
        k,
        None,
        np.concatenate(rate_rows),
        model.space.points,
    )


@dataclass
class _DifferentialDesign:
    """Affine map coefficients -> replicator drift rows, plus fixed entropy part."""

    drift: sp.csr_matrix             # (M*K, C)
    entropy_part: np.ndarray         # (M, K)
    target: np.ndarray               # (M, K) observed strategy derivatives
    base_sigma: np.ndarray           # (M, K)
    n_rows: int
    n_strategies: int


def assemble_differential_design(dataset: TrajectoryDataset, model: FullPairPayoff,
                                 eps: float) -> _DifferentialDesign:
    """Drift design for the strategy-derivative energy with an unstructured pair payoff.

    Strategy derivatives are forward finite differences of consecutive stored
    snapshots; pairs spanning realization boundaries never arise because the
    assembly walks one realization at a time.
    """
    from .strategy import entropy_drift

    k = model.space.n_strategies
    trip = _Triplets()
    targets, bases, entropies = [], [], []
    base = 0
    kk = np.arange(k)
    for run in dataset.realizations():
        for snap, nxt in zip(run, run[1:]):
            n = snap.x.shape[0]
            sig = snap.sigma
            queries = np.concatenate(
                [np.repeat(snap.x, n, axis=0), np.tile(snap.x, (n, 1))], axis=1
            )
            nodes, wts = model.grid.interpolation_weights(queries)
            nodes = nodes.reshape(n, n, -1)
            wts = wts.reshape(n, n, -1) / n
            rows = base + np.arange(n)
            p = nodes.shape[2]

            # term [ (1/K) sum_k' J(x_i,u_k,x_j,u_k') sigma_j[k'] ] sigma_i[k]
            data = (wts[:, :, :, None, None]
                    * sig[:, None, None, :, None]
                    * sig[None, :, None, None, :] / k)
            row_ids = np.broadcast_to(
                (rows[:, None, None, None, None] * k + kk[None, None, None, :, None]),
                data.shape,
            )
            col_ids = np.broadcast_to(
                (nodes[:, :, :, None, None] * k * k
                 + kk[None, None, None, :, None] * k
                 + kk[None, None, None, None, :]),
                data.shape,
            )
            trip.rows.append(row_ids.ravel())
            trip.cols.append(col_ids.ravel())
            trip.data.append(data.ravel())

            # term -[ (1/K^2) sum_{l,k'} J(x_i,u_l,x_j,u_k') sigma_i[l] sigma_j[k'] ] sigma_i[k]
            data2 = -(wts[:, :, :, None, None, None]
                      * sig[:, None, None, :, None, None]
                      * sig[:, None, None, None, :, None]
                      * sig[None, :, None, None, None, :] / (k * k))
            row_ids2 = np.broadcast_to(
                (rows[:, None, None, None, None, None] * k
                 + kk[None, None, None, :, None, None]),
                data2.shape,
            )
            col_ids2 = np.broadcast_to(
                (nodes[:, :, :, None, None, None] * k * k
                 + kk[None, None, None, None, :, None] * k
                 + kk[None, None, None, None, None, :]),
                data2.shape,
            )
            trip.rows.append(row_ids2.ravel())
            trip.cols.append(col_ids2.ravel())
            trip.data.append(data2.ravel())

            targets.append((nxt.sigma - sig) / (nxt.t - snap.t))
            bases.append(sig)
            entropies.append(np.stack([entropy_drift(s, eps) for s in sig]))
            base += n
    if base == 0:
        raise ValueError("the differential functional needs consecutive snapshots")
    drift = trip.matrix((base * k, model.grid.n_coefficients))
    return _DifferentialDesign(
        drift, np.concatenate(entropies), np.concatenate(targets),
        np.concatenate(bases), base, k,
    )


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------


def _penalties(problem: InferenceProblem, coeffs):
    """Gradient penalties of all grids, weighted; returns (value, gradient)."""
    grids = problem.model.grids
    lams = [problem.lambda1, problem.lambda2][: len(grids)]
    sizes = [g.n_coefficients for g in grids]
    parts = np.split(coeffs, np.cumsum(sizes)[:-1])
    value = 0.0
    grads = []
    for grid, lam, part in zip(grids, lams, parts):
        if lam == 0.0:
            grads.append(np.zeros_like(part))
            continue
        pv, pg = grid.with_values(part).gradient_penalty()
        value += lam * pv
        grads.append(lam * pg.ravel())
    return value, np.concatenate(grads)


def _sigma_data_term(design: _Design, coeffs, eps):
    g = design.payoff_rows(coeffs)
    q = softmax_strategy(g, eps)
    p = design.sigma_obs
    value = float(np.mean(xlogy(p, p / q), axis=1).sum() / design.n_rows)
    grad_rows = (q - p) / (eps * design.n_strategies * design.n_rows)
    return value, design.gradient_from_rows(grad_rows)


def _velocity_data_term(design: _Design, coeffs, eps):
    g = design.payoff_rows(coeffs)
    q = softmax_strategy(g, eps)
    v_model = q @ design.e_table / design.n_strategies
    resid = v_model - design.v_obs
    value = float(np.sum(resid * resid) / design.n_rows)
    inner = resid @ design.e_table.T - np.sum(resid * v_model, axis=1, keepdims=True)
    grad_rows = 2.0 * q * inner / (eps * design.n_strategies * design.n_rows)
    return value, design.gradient_from_rows(grad_rows)


def _differential_data_term(design: _DifferentialDesign, coeffs):
    drift = (design.drift @ coeffs).reshape(design.n_rows, design.n_strategies)
    resid = design.target - drift - design.entropy_part
    wgt = 1.0 / (4.0 * design.n_strategies * design.n_rows * design.base_sigma)
    value = float(np.sum(wgt * resid * resid))
    grad = -2.0 * design.drift.T @ (wgt * resid).ravel()
    return value, grad


def build_objective(problem: InferenceProblem):
    """Returns (objective(coeffs) -> (value, grad), data_term(coeffs) -> (value, grad))."""
    if problem.functional == "sigma":
        design = assemble_split_design(problem.dataset, problem.model)
        data = lambda c: _sigma_data_term(design, c, problem.eps)
    elif problem.functional == "velocity":
        design = assemble_split_design(problem.dataset, problem.model)
        data = lambda c: _velocity_data_term(design, c, problem.eps)
    elif problem.functional == "pedestrian_velocity":
        design = assemble_pedestrian_design(problem.dataset, problem.model)
        data = lambda c: _velocity_data_term(design, c, problem.eps)
    else:
        design = assemble_differential_design(problem.dataset, problem.model, problem.eps)
        data = lambda c: _differential_data_term(design, c)

    def objective(c):
        dv, dg = data(c)
        pv, pg = _penalties(problem, c)
        return dv + pv, dg + pg

    return objective, data


def energy_sigma(problem: InferenceProblem):
    """Steady-state strategy mismatch (mean relative entropy) and its gradient."""
    design = assemble_split_design(problem.dataset, problem.model)
    from .payoff import model_coefficients

    return _sigma_data_term(design, model_coefficients(problem.model), problem.eps)


def energy_velocity(problem: InferenceProblem):
    """Mean squared mismatch of observed and steady-state velocities, with gradient."""
    design = assemble_split_design(problem.dataset, problem.model)
    from .payoff import model_coefficients

    return _velocity_data_term(design, model_coefficients(problem.model), problem.eps)


def energy_differential(problem: InferenceProblem):
    """Mean squared tangent-metric mismatch of strategy derivatives, with gradient."""
    design = assemble_differential_design(problem.dataset, problem.model, problem.eps)
    from .payoff import model_coefficients

    return _differential_data_term(design, model_coefficients(problem.model))


def energy_pedestrian(problem: InferenceProblem):
    """Mean squared mismatch of heading rates against finite differences, with gradient."""
    design = assemble_pedestrian_design(problem.dataset, problem.model)
    from .payoff import model_coefficients

    return _velocity_data_term(design, model_coefficients(problem.model), problem.eps)


def minimize(problem: InferenceProblem) -> InferenceReport:
    """Quasi-Newton minimization of the regularized energy from the model's coefficients."""
    from .payoff import model_coefficients, set_model_coefficients

    objective, data = build_objective(problem)
    start = time.perf_counter()
    result: MinimizeResult = lbfgs(
        objective,
        model_coefficients(problem.model),
        max_iterations=problem.max_iterations,
        tol=problem.tolerance,
        memory=problem.memory,
    )
    wall_ms = 1000.0 * (time.perf_counter() - start)
    fitted = set_model_coefficients(problem.model, result.x)
    return InferenceReport(
        status=result.status,
        iterations=result.iterations,
        objective_trace=result.trace,
        final_data_term=float(data(result.x)[0]),
        grad_norm=result.grad_norm,
        wall_ms=wall_ms,
        coefficients=result.x,
        model=fitted,
    )


# ---------------------------------------------------------------------------
# strategy reconstruction from velocities
# ---------------------------------------------------------------------------

HULL_MARGIN_WARN = 1e-9
MOMENT_TOL = 1e-10


def reconstruct_strategy_from_velocity(v, space: StrategySpace, eps: float,
                                       max_iterations: int = 200) -> np.ndarray:
    """Mixed strategy of the form A exp(-|u-w|^2/eps) whose mean velocity equals v.

    The shift w solves the moment condition by damped Newton steps on the
    exponential-family mean map (with a bisection fallback on the line); v must
    lie strictly inside the convex hull of the pure strategies.
    """
    if space.e_map is not None:
        raise ValueError("strategy reconstruction assumes the identity dictionary e(x,u)=u")
    pts = space.points
    v = np.atleast_1d(np.asarray(v, dtype=float)).astype(float)
    if v.shape != (pts.shape[1],):
        raise ValueError(f"velocity dimension {v.shape} does not match strategies {pts.shape}")
    margin = space.hull_margin(v)
    if margin <= 0:
        raise HullError(f"velocity {v} lies outside the convex hull of the strategy set")
    if margin < HULL_MARGIN_WARN:
        warnings.warn(
            f"velocity {v} is within {margin:.2e} of the strategy hull boundary; "
            "the reconstruction is ill-conditioned",
            RuntimeWarning,
        )

    def mean_and_cov(w):
        z = -np.sum((pts - w) ** 2, axis=1) / eps
        z -= z.max()
        prob = np.exp(z)
        prob /= prob.sum()
        mean = prob @ pts
        centered = pts - mean
        cov = (prob[:, None] * centered).T @ centered
        return prob, mean, cov

    w = v.copy()
    prob, mean, cov = mean_and_cov(w)
    for _ in range(max_iterations):
        resid = mean - v
        err = float(np.linalg.norm(resid))
        if err <= MOMENT_TOL:
            break
        jac = 2.0 / eps * cov
        try:
            delta = np.linalg.solve(jac, -resid)
        except np.linalg.LinAlgError:
            delta = -np.linalg.lstsq(jac, resid, rcond=None)[0]
        step = 1.0
        for _ in range(50):
            prob_new, mean_new, cov_new = mean_and_cov(w + step * delta)
            if np.linalg.norm(mean_new - v) < err:
                w = w + step * delta
                prob, mean, cov = prob_new, mean_new, cov_new
                break
            step *= 0.5
        else:
            if pts.shape[1] == 1:
                w = np.array([_bisect_shift(pts[:, 0], float(v[0]), eps)])
                prob, mean, cov = mean_and_cov(w)
                break
            raise RuntimeError("strategy reconstruction failed to converge")
    if float(np.linalg.norm(mean - v)) > MOMENT_TOL:
        raise RuntimeError(
            f"strategy reconstruction stalled at residual {np.linalg.norm(mean - v):.2e}"
        )
    return prob * pts.shape[0]


def _bisect_shift(points, v, eps, tol=1e-14):
    def mean(w):
        z = -((points - w) ** 2) / eps
        z -= z.max()
        p = np.exp(z)
        return float(p @ points / p.sum())

    lo, hi = points.min(), points.max()
    span = hi - lo
    lo -= span
    hi += span
    while mean(lo) > v:
        lo -= span
    while mean(hi) < v:
        hi += span
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean(mid) < v:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def attach_reconstructed_strategies(dataset: TrajectoryDataset, space: StrategySpace,
                                    eps: float) -> TrajectoryDataset:
    """Dataset copy with strategies reconstructed from the recorded velocities."""
    from .dataset import Snapshot

    failures = []
    snapshots = []
    for idx, snap in enumerate(dataset.snapshots):
        sigma = np.empty((snap.x.shape[0], space.n_strategies))
        for i in range(snap.x.shape[0]):
            try:
                sigma[i] = reconstruct_strategy_from_velocity(snap.v[i], space, eps)
            except HullError:
                failures.append((idx, i))
                sigma[i] = np.nan
        snapshots.append(Snapshot(snap.realization, snap.t, snap.x.copy(),
                                  snap.v.copy(), sigma))
    if failures:
        raise HullError(
            f"{len(failures)} velocities lie outside the strategy hull "
            f"(snapshot, agent): {failures[:10]}"
        )
    meta = dict(dataset.meta)
    meta["strategy_points"] = space.points
    meta["e_map"] = "identity"
    meta["e_max"] = space.e_max
    meta["reconstructed_strategies"] = {"eps": eps}
    return TrajectoryDataset(meta, snapshots)


# ---------------------------------------------------------------------------
# trajectory error bound
# ---------------------------------------------------------------------------


def sampled_velocity_lipschitz(model, space, eps, positions_pool, n_probes=200,
                               safety=1.1, seed=0) -> float:
    """Sampled Lipschitz constant of the steady-state velocity map, with safety factor."""
    rng = np.random.default_rng([seed])
    pool = np.asarray(positions_pool, dtype=float)
    scale = 0.1 * max(float(pool.max() - pool.min()), 1e-6)
    worst = 0.0
    for _ in range(n_probes):
        base = pool[rng.integers(pool.shape[0])]
        x1 = base + rng.uniform(-scale, scale, base.shape)
        x2 = base + rng.uniform(-scale, scale, base.shape)
        gap = norm_n(x1, x2)
        if gap < 1e-12:
            continue
        _, v1 = fast_reaction_state(x1, model, space, eps)
        _, v2 = fast_reaction_state(x2, model, space, eps)
        worst = max(worst, norm_n(v1, v2) / gap)
    return safety * worst


def trajectory_error_bound_check(dataset: TrajectoryDataset, model, eps: float,
                                 n_probes=200, safety=1.1, seed=0) -> dict:
    """Re-simulate the fitted model from shared starts and check the error bound.

    The reported bound is T e^{LT} sqrt(E) with E the velocity mismatch energy
    of the fitted model on the dataset and L the sampled Lipschitz constant of
    its velocity field.
    """
    space = model.space
    problem = InferenceProblem(dataset, model, "velocity", 0.0, 0.0, eps)
    energy = energy_velocity(problem)[0]
    dt = float(dataset.meta["dt"])

    horizon = max(snap.t for snap in dataset.snapshots)
    pool = np.stack([snap.x for snap in dataset.snapshots])
    lipschitz = sampled_velocity_lipschitz(model, space, eps, pool, n_probes, safety, seed)
    bound = horizon * math.exp(lipschitz * horizon) * math.sqrt(energy)

    gaps = []
    holds = True
    for run in dataset.realizations():
        x = run[0].x.copy()
        t = run[0].t
        worst = 0.0
        for snap in run:
            while t < snap.t - 0.5 * dt:
                x = x + dt * fast_reaction_state(x, model, space, eps)[1]
                t += dt
            gap = norm_n(snap.x, x)
            worst = max(worst, gap)
            if gap > bound + 1e-12:
                holds = False
        gaps.append(worst)
    return {
        "energy": energy,
        "lipschitz": lipschitz,
        "bound": bound,
        "horizon": horizon,
        "max_gap_per_realization": gaps,
        "holds": holds,
    }


# ---------------------------------------------------------------------------
# grid construction from data
# ---------------------------------------------------------------------------


def _data_box(arrays, min_width=1e-3):
    stacked = np.concatenate([np.atleast_2d(a) for a in arrays])
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    narrow = hi - lo < min_width
    lo = np.where(narrow, lo - 0.5 * min_width, lo)
    hi = np.where(narrow, hi + 0.5 * min_width, hi)
    return lo, hi


def split_model_from_dataset(dataset: TrajectoryDataset, space: StrategySpace | None = None,
                             j1_nodes: int = 30, j2_nodes: int | None = None) -> SplitPayoff:
    """Zero-initialized split payoff over the smallest boxes containing the data.

    Defaults: 30 nodes per self-interaction axis; the pairwise term spans twice
    the range, with 59 nodes in one dimension (matching spacing) and 42 beyond.
    """
    space = space or dataset.strategy_space()
    d = dataset.snapshots[0].x.shape[1]
    if j2_nodes is None:
        j2_nodes = 59 if d == 1 else 42
    lo1, hi1 = _data_box([snap.x for snap in dataset.snapshots])
    deltas = []
    for snap in dataset.snapshots:
        deltas.append((snap.x[None, :, :] - snap.x[:, None, :]).reshape(-1, d))
    lo2, hi2 = _data_box(deltas)
    j1 = Grid.zeros([Axis(lo1[a], hi1[a], j1_nodes) for a in range(d)], (space.n_strategies,))
    j2 = Grid.zeros([Axis(lo2[a], hi2[a], j2_nodes) for a in range(d)], (space.n_strategies,))
    return SplitPayoff(space, j1, j2)


def full_pair_model_from_dataset(dataset: TrajectoryDataset, space: StrategySpace | None = None,
                                 nodes: int = 30) -> FullPairPayoff:
    """Zero-initialized unstructured pair payoff over (x, x') data boxes."""
    space = space or dataset.strategy_space()
    d = dataset.snapshots[0].x.shape[1]
    lo, hi = _data_box([snap.x for snap in dataset.snapshots])
    axes = [Axis(lo[a % d], hi[a % d], nodes) for a in range(2 * d)]
    k = space.n_strategies
    return FullPairPayoff(space, Grid.zeros(axes, (k, k)))


def pedestrian_model_from_dataset(dataset: TrajectoryDataset, space: StrategySpace,
                                  j1_nodes: int = 30, j2_nodes: int = 20,
                                  j2_box=PEDESTRIAN_J2_BOX) -> PedestrianPayoff:
    """Zero-initialized heading-frame payoff with the standard vision-cone box."""
    j1 = Grid.zeros([Axis(-np.pi, np.pi, j1_nodes, periodic=True)], (space.n_strategies,))
    (x_lo, x_hi), (y_lo, y_hi) = j2_box
    axes = [
        Axis(x_lo, x_hi, j2_nodes),
        Axis(y_lo, y_hi, j2_nodes),
        Axis(-np.pi, np.pi, j2_nodes, periodic=True),
    ]
    j2 = Grid.zeros(axes, (space.n_strategies,), zero_outside=True)
    return PedestrianPayoff(space, j1, j2)
