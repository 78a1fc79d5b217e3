"""Strategy-space primitives: softmax steady states, replicator and entropy drifts.

A mixed strategy over a finite set of K pure strategies is stored as a density
with respect to the uniform reference measure: a length-K vector of nonnegative
reals whose mean is 1.  All reference-measure integrals therefore appear as
plain means over the strategy axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

NORMALIZATION_TOL = 1e-12


class StrategyDomainError(ValueError):
    """Raised when an operation is evaluated outside its mathematical domain."""


def _as_density(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 1:
        raise StrategyDomainError(f"density must be a 1-d vector, got shape {sigma.shape}")
    return sigma


@dataclass(frozen=True)
class StrategySpace:
    """Finite pure-strategy set with uniform reference weights.

    ``points`` has shape (K, m).  ``e_map`` turns (position, pure strategies)
    into physical velocities; ``None`` means the identity dictionary e(x,u)=u,
    in which case the velocity dimension equals m.  ``e_max`` is the declared
    bound on ``|e(x,u)|``.
    """

    points: np.ndarray
    e_map: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )
    e_max: float = 0.0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 1 and pts.shape[1] > 1 and np.asarray(self.points).ndim == 1:
            pts = pts.T
        object.__setattr__(self, "points", pts)
        if self.n_strategies < 2:
            raise ValueError("a strategy space needs at least two pure strategies")
        if len(np.unique(pts, axis=0)) != self.n_strategies:
            raise ValueError("pure strategies must be distinct")
        if self.e_max == 0.0:
            object.__setattr__(self, "e_max", float(np.max(np.linalg.norm(pts, axis=1))))

    @property
    def n_strategies(self) -> int:
        return self.points.shape[0]

    @property
    def eta_weight(self) -> float:
        return 1.0 / self.n_strategies

    def velocities(self, x) -> np.ndarray:
        """e(x, u_k) for every pure strategy, shape (K, d)."""
        if self.e_map is None:
            return self.points
        out = np.asarray(self.e_map(np.asarray(x, dtype=float), self.points), dtype=float)
        if out.shape != (self.n_strategies, out.shape[-1]):
            raise StrategyDomainError("e_map must return one velocity per pure strategy")
        return out

    def hull_margin(self, v) -> float:
        """Signed distance from v to the boundary of conv(U); positive inside."""
        v = np.atleast_1d(np.asarray(v, dtype=float))
        pts = self.points
        if pts.shape[1] == 1:
            lo, hi = float(pts.min()), float(pts.max())
            return float(min(v[0] - lo, hi - v[0]))
        from scipy.spatial import ConvexHull

        hull = ConvexHull(pts)
        # qhull facet equations are normalized: n.x + b <= 0 inside
        return float(-np.max(hull.equations[:, :-1] @ v + hull.equations[:, -1]))


def uniform_density(n_strategies: int) -> np.ndarray:
    return np.ones(n_strategies)


def check_density(sigma, a: float | None = None, b: float | None = None) -> np.ndarray:
    """Validate normalization (mean 1) and optional box bounds of a density."""
    sigma = _as_density(sigma)
    if not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
        raise StrategyDomainError("density entries must be finite and nonnegative")
    if abs(sigma.mean() - 1.0) > NORMALIZATION_TOL:
        raise StrategyDomainError(f"density mean {sigma.mean()!r} is not 1 within {NORMALIZATION_TOL}")
    if a is not None and sigma.min() < a:
        raise StrategyDomainError(f"density entry {sigma.min()!r} below lower bound {a}")
    if b is not None and sigma.max() > b:
        raise StrategyDomainError(f"density entry {sigma.max()!r} above upper bound {b}")
    return sigma


def entropic_box_bounds(payoff_sup: float, eps: float) -> tuple[float, float]:
    """Heuristic [a, b] box for densities driven by an entropic game with |J| <= payoff_sup.

    Softmax steady states always lie in [exp(-2M/eps), exp(2M/eps)]; the box adds
    a factor-10 slack on both sides.  Diagnostic only, never enforced in dynamics.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    core = math.exp(2.0 * payoff_sup / eps)
    return 0.1 / core, 10.0 * core


def softmax_strategy(payoff_values, eps: float) -> np.ndarray:
    """Gibbs steady-state density exp(g/eps) normalized to mean 1.

    Stabilized by max subtraction so that |g|/eps far beyond the exp overflow
    range stays finite.  Supports batched input: the strategy axis is the last.
    """
    if eps <= 0:
        raise StrategyDomainError("eps must be positive")
    g = np.asarray(payoff_values, dtype=float)
    if not np.all(np.isfinite(g)):
        raise StrategyDomainError("payoff values must be finite")
    z = g - g.max(axis=-1, keepdims=True)
    w = np.exp(z / eps)
    return w / w.mean(axis=-1, keepdims=True)


def strategy_velocity(x, sigma, space: StrategySpace) -> np.ndarray:
    """Velocity (1/K) sum_k e(x,u_k) sigma_k induced by a mixed strategy."""
    sigma = _as_density(sigma)
    ev = space.velocities(x)
    if sigma.shape[0] != ev.shape[0]:
        raise StrategyDomainError("density length does not match the strategy space")
    return sigma @ ev / sigma.shape[0]


def replicator_drift_undisclosed(sigma, payoff_values) -> np.ndarray:
    """Replicator drift [g_k - (1/K) sum_l g_l sigma_l] sigma_k for averaged payoffs g."""
    sigma = _as_density(sigma)
    g = np.asarray(payoff_values, dtype=float)
    if not np.all(np.isfinite(g)):
        raise StrategyDomainError("payoff values must be finite")
    return (g - np.mean(g * sigma)) * sigma


def replicator_drift_full(sigma, other_sigma, payoff_matrix) -> np.ndarray:
    """Replicator drift against another agent's mixed strategy.

    ``payoff_matrix[k, k']`` is the benefit of my pure strategy u_k when the
    other agent plays u_{k'}.  Inner averages over the opponent strategy reduce
    the drift to the undisclosed form whenever the matrix is constant in k'.
    """
    sigma = _as_density(sigma)
    other = _as_density(other_sigma)
    A = np.asarray(payoff_matrix, dtype=float)
    if A.shape != (sigma.shape[0], other.shape[0]):
        raise StrategyDomainError(f"payoff matrix shape {A.shape} does not match strategies")
    g = A @ other / other.shape[0]
    return replicator_drift_undisclosed(sigma, g)


def entropy_drift(sigma, eps: float) -> np.ndarray:
    """Entropy-regularization drift eps [-log sigma_k + (1/K) sum_l log(sigma_l) sigma_l] sigma_k."""
    sigma = _as_density(sigma)
    if np.any(sigma <= 0):
        raise StrategyDomainError("entropy drift requires strictly positive densities")
    log_sigma = np.log(sigma)
    return eps * (np.mean(log_sigma * sigma) - log_sigma) * sigma


def kl_divergence(p, q) -> float:
    """Relative entropy (1/K) sum_k log(p_k/q_k) p_k of densities p, q.

    Entries with p_k = 0 contribute nothing; any p_k > 0 sitting on q_k = 0
    yields the +inf branch of the definition.
    """
    p = _as_density(p)
    q = _as_density(q)
    if p.shape != q.shape:
        raise StrategyDomainError("densities must share the strategy space")
    if np.any(q < 0) or np.any(p < 0):
        raise StrategyDomainError("densities must be nonnegative")
    positive = p > 0
    if np.any(q[positive] == 0):
        return math.inf
    terms = np.zeros_like(p)
    terms[positive] = p[positive] * (np.log(p[positive]) - np.log(q[positive]))
    return float(np.mean(terms))


def hellinger_tangent_distance(sigma, dmu, dnu) -> float:
    """Hellinger-type metric on strategy perturbations at base density sigma."""
    sigma = _as_density(sigma)
    if np.any(sigma <= 0):
        raise StrategyDomainError("the tangent metric requires a strictly positive base density")
    dmu = np.asarray(dmu, dtype=float)
    dnu = np.asarray(dnu, dtype=float)
    diff = dmu - dnu
    return float(math.sqrt(0.25 * np.mean(diff * diff / sigma)))


def space_1d(points=(-1.0, 1.0)) -> StrategySpace:
    """Scalar strategy space with the identity dictionary e(x,u)=u."""
    return StrategySpace(np.asarray(points, dtype=float).reshape(-1, 1))


def space_2d_diagonal() -> StrategySpace:
    """The four diagonal unit-box velocities (+-1, +-1)."""
    return StrategySpace(np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]))
