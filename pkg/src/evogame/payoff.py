"""Payoff representations: finite-element coefficient grids and closed-form benchmarks.

Grid payoffs store one coefficient per (node, pure strategy) and evaluate by
multilinear interpolation; queries outside a grid box are clamped to the
boundary unless the grid is marked ``zero_outside`` (vision-cone convention).
Angular axes are periodic.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .serialize import dumps_canonical
from .strategy import StrategySpace, space_1d, space_2d_diagonal

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap angles into (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    wrapped = theta - TWO_PI * np.floor((theta + np.pi) / TWO_PI)
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def rotation(theta) -> np.ndarray:
    """Rotation matrices by ``theta``; batched input yields shape (..., 2, 2)."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack(
        [np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2
    )


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    nodes: int
    periodic: bool = False

    def __post_init__(self):
        if self.nodes < 2:
            raise ValueError("an axis needs at least two nodes")
        if not self.hi > self.lo:
            raise ValueError("axis bounds must be strictly increasing")

    @property
    def spacing(self) -> float:
        span = self.hi - self.lo
        return span / self.nodes if self.periodic else span / (self.nodes - 1)

    def coordinates(self) -> np.ndarray:
        if self.periodic:
            return self.lo + self.spacing * np.arange(self.nodes)
        return np.linspace(self.lo, self.hi, self.nodes)

    def locate(self, q: np.ndarray):
        """Lower node index, fractional offset and in-range mask for queries."""
        q = np.asarray(q, dtype=float)
        if self.periodic:
            u = np.mod(q - self.lo, self.hi - self.lo) / self.spacing
            i0 = np.minimum(np.floor(u).astype(int), self.nodes - 1)
            return i0, u - i0, np.ones(q.shape, dtype=bool)
        inside = (q >= self.lo) & (q <= self.hi)
        u = (np.clip(q, self.lo, self.hi) - self.lo) / self.spacing
        i0 = np.minimum(np.floor(u).astype(int), self.nodes - 2)
        return i0, u - i0, inside

    def neighbour(self, i0: np.ndarray) -> np.ndarray:
        return (i0 + 1) % self.nodes if self.periodic else i0 + 1


@dataclass
class Grid:
    """Regular coefficient grid over a hyper-rectangle.

    ``values`` has shape (*nodes_per_axis, *value_shape) where the trailing
    value axes index pure strategies (one axis, or two for pair payoffs).
    """

    axes: tuple[Axis, ...]
    values: np.ndarray
    zero_outside: bool = False

    def __post_init__(self):
        self.axes = tuple(self.axes)
        self.values = np.asarray(self.values, dtype=float)
        expected = tuple(ax.nodes for ax in self.axes)
        if self.values.shape[: len(expected)] != expected:
            raise ValueError(
                f"coefficient tensor shape {self.values.shape} does not match nodes {expected}"
            )

    @classmethod
    def zeros(cls, axes: Sequence[Axis], value_shape: Sequence[int], zero_outside=False) -> "Grid":
        shape = tuple(ax.nodes for ax in axes) + tuple(value_shape)
        return cls(tuple(axes), np.zeros(shape), zero_outside)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def node_shape(self) -> tuple[int, ...]:
        return tuple(ax.nodes for ax in self.axes)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def value_shape(self) -> tuple[int, ...]:
        return self.values.shape[self.dim:]

    @property
    def n_coefficients(self) -> int:
        return self.values.size

    def _corners(self, queries: np.ndarray):
        """Corner node multi-indices and weights for a batch of query points."""
        q = np.atleast_2d(np.asarray(queries, dtype=float))
        if q.shape[1] != self.dim:
            raise ValueError(f"queries must have {self.dim} coordinates, got {q.shape[1]}")
        located = [ax.locate(q[:, a]) for a, ax in enumerate(self.axes)]
        inside = np.logical_and.reduce([loc[2] for loc in located])
        corners = []
        for bits in itertools.product((0, 1), repeat=self.dim):
            w = np.ones(q.shape[0])
            idx = []
            for a, bit in enumerate(bits):
                i0, frac, _ = located[a]
                w = w * (frac if bit else 1.0 - frac)
                idx.append(self.axes[a].neighbour(i0) if bit else i0)
            corners.append((tuple(idx), w))
        return corners, inside

    def interpolate(self, queries) -> np.ndarray:
        """Multilinear interpolation; returns shape (M, *value_shape)."""
        corners, inside = self._corners(queries)
        pad = (1,) * len(self.value_shape)
        out = np.zeros((len(inside),) + self.value_shape)
        for idx, w in corners:
            out += w.reshape(-1, *pad) * self.values[idx]
        if self.zero_outside:
            out[~inside] = 0.0
        return out

    def interpolation_weights(self, queries):
        """Flat node indices and weights reproducing :meth:`interpolate` as a dot product.

        Returns ``(node_indices, weights)`` of shape (M, 2^dim); weights of
        out-of-box queries are zero when the grid is ``zero_outside``, otherwise
        they encode the clamped boundary value.  Per query the weights sum to 1
        (or 0 when masked).
        """
        corners, inside = self._corners(queries)
        idx_cols, w_cols = [], []
        for idx, w in corners:
            idx_cols.append(np.ravel_multi_index(idx, self.node_shape))
            w_cols.append(w)
        nodes = np.stack(idx_cols, axis=1)
        weights = np.stack(w_cols, axis=1)
        if self.zero_outside:
            weights = weights * inside[:, None]
        return nodes, weights

    def gradient_penalty(self):
        """Squared L2 norm of the coefficient gradient and its analytic gradient.

        Each axis-adjacent node pair contributes (difference/spacing)^2 times the
        cell measure (product of all axis spacings); periodic axes include the
        wrap-around pair.
        """
        cell = float(np.prod([ax.spacing for ax in self.axes]))
        value = 0.0
        grad = np.zeros_like(self.values)
        for a, ax in enumerate(self.axes):
            if ax.periodic:
                diff = np.roll(self.values, -1, axis=a) - self.values
            else:
                diff = np.diff(self.values, axis=a)
            scale = cell / ax.spacing**2
            value += scale * float(np.sum(diff * diff))
            if ax.periodic:
                grad += 2.0 * scale * (np.roll(diff, 1, axis=a) - diff)
            else:
                lo = [slice(None)] * self.values.ndim
                hi = [slice(None)] * self.values.ndim
                lo[a] = slice(0, -1)
                hi[a] = slice(1, None)
                grad[tuple(hi)] += 2.0 * scale * diff
                grad[tuple(lo)] -= 2.0 * scale * diff
        return value, grad

    def with_values(self, values: np.ndarray) -> "Grid":
        return Grid(self.axes, np.asarray(values, dtype=float).reshape(self.values.shape),
                    self.zero_outside)


def gradient_penalty(grid: Grid):
    """Module-level alias for :meth:`Grid.gradient_penalty`."""
    return grid.gradient_penalty()


# ---------------------------------------------------------------------------
# grid-backed payoff models
# ---------------------------------------------------------------------------


@dataclass
class SplitPayoff:
    """Payoff J(x,u,x') = J1(x,u) + J2(x'-x,u): self-drive plus pairwise interaction."""

    space: StrategySpace
    j1: Grid
    j2: Grid

    variant = "split"

    @property
    def grids(self) -> tuple[Grid, ...]:
        return (self.j1, self.j2)

    def payoff_values(self, x, xp) -> np.ndarray:
        """J(x_m, u_k, x'_m) for index-aligned batches; shape (M, K)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        return self.j1.interpolate(x) + self.j2.interpolate(xp - x)

    def evaluate(self, x, k: int, xp) -> float:
        return float(self.payoff_values(np.atleast_2d(x), np.atleast_2d(xp))[0, k])

    def mean_payoff(self, positions) -> np.ndarray:
        """g[i,k] = (1/N) sum_j J(x_i,u_k,x_j); the sum includes j = i."""
        pos = np.asarray(positions, dtype=float)
        n = pos.shape[0]
        deltas = (pos[None, :, :] - pos[:, None, :]).reshape(n * n, -1)
        pair = self.j2.interpolate(deltas).reshape(n, n, -1)
        return self.j1.interpolate(pos) + pair.mean(axis=1)

    def coefficient_weights(self, x, xp):
        """Interpolation weights of both terms against the flat coefficient vector."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        n1, w1 = self.j1.interpolation_weights(x)
        n2, w2 = self.j2.interpolation_weights(xp - x)
        return [(n1, w1, 0), (n2, w2, self.j1.n_coefficients)]


@dataclass
class FullPairPayoff:
    """Unstructured pair payoff J(x,u,x',u') on a grid over (x, x')."""

    space: StrategySpace
    grid: Grid

    variant = "full_pair"

    @property
    def grids(self) -> tuple[Grid, ...]:
        return (self.grid,)

    def pair_payoff_values(self, x, xp) -> np.ndarray:
        """J(x_m, u_k, x'_m, u_k') for aligned batches; shape (M, K, K)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        return self.grid.interpolate(np.concatenate([x, xp], axis=1))

    def pair_payoff_matrix(self, positions) -> np.ndarray:
        pos = np.asarray(positions, dtype=float)
        n = pos.shape[0]
        xi = np.repeat(pos, n, axis=0)
        xj = np.tile(pos, (n, 1))
        k = self.space.n_strategies
        return self.pair_payoff_values(xi, xj).reshape(n, n, k, k)


@dataclass
class PedestrianPayoff:
    """Heading-frame payoff J = J1(theta - theta_bar, u) + J2(R_{-theta}(x'-x), theta'-theta, u).

    J1 is periodic in the wrapped angle mismatch; J2 lives on a box in the
    rotated relative frame and is exactly zero outside it (unseen agents).
    """

    space: StrategySpace
    j1: Grid
    j2: Grid

    variant = "pedestrian"

    @property
    def grids(self) -> tuple[Grid, ...]:
        return (self.j1, self.j2)

    @staticmethod
    def relative_queries(x, theta, xp, theta_p) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        theta_p = np.atleast_1d(np.asarray(theta_p, dtype=float))
        rel = np.einsum("mij,mj->mi", rotation(-theta), xp - x)
        return np.concatenate([rel, wrap_angle(theta_p - theta)[:, None]], axis=1)

    def payoff_values(self, state, state_p) -> np.ndarray:
        """Aligned batches of states (x, theta, theta_bar); shape (M, K)."""
        x, theta, theta_bar = state
        xp, theta_p, _ = state_p
        own = wrap_angle(np.atleast_1d(theta) - np.atleast_1d(theta_bar))[:, None]
        return self.j1.interpolate(own) + self.j2.interpolate(
            self.relative_queries(x, theta, xp, theta_p)
        )

    def evaluate(self, state, k: int, state_p) -> float:
        x, th, thb = (np.atleast_2d(state[0]), np.atleast_1d(state[1]), np.atleast_1d(state[2]))
        xp, thp, thbp = (np.atleast_2d(state_p[0]), np.atleast_1d(state_p[1]), np.atleast_1d(state_p[2]))
        return float(self.payoff_values((x, th, thb), (xp, thp, thbp))[0, k])

    def mean_payoff(self, positions, theta, theta_bar) -> np.ndarray:
        """g[i,k] averaged over all other agents (self included, as in the ensemble sums)."""
        pos = np.asarray(positions, dtype=float)
        theta = np.asarray(theta, dtype=float)
        n = pos.shape[0]
        xi = np.repeat(pos, n, axis=0)
        xj = np.tile(pos, (n, 1))
        ti = np.repeat(theta, n)
        tj = np.tile(theta, n)
        pair = self.j2.interpolate(self.relative_queries(xi, ti, xj, tj)).reshape(n, n, -1)
        own = wrap_angle(theta - np.asarray(theta_bar, dtype=float))[:, None]
        return self.j1.interpolate(own) + pair.mean(axis=1)


GridPayoff = SplitPayoff | FullPairPayoff | PedestrianPayoff


def model_coefficients(model: GridPayoff) -> np.ndarray:
    """Flat coefficient vector (grids concatenated, strategy index fastest)."""
    return np.concatenate([g.values.ravel() for g in model.grids])


def set_model_coefficients(model: GridPayoff, coeffs: np.ndarray) -> GridPayoff:
    """Return a copy of the model carrying the given flat coefficient vector."""
    coeffs = np.asarray(coeffs, dtype=float)
    sizes = [g.n_coefficients for g in model.grids]
    if coeffs.size != sum(sizes):
        raise ValueError(f"expected {sum(sizes)} coefficients, got {coeffs.size}")
    parts = np.split(coeffs, np.cumsum(sizes)[:-1])
    grids = [g.with_values(p) for g, p in zip(model.grids, parts)]
    if isinstance(model, SplitPayoff):
        return replace(model, j1=grids[0], j2=grids[1])
    if isinstance(model, PedestrianPayoff):
        return replace(model, j1=grids[0], j2=grids[1])
    return replace(model, grid=grids[0])


def payoff_coefficient_gradient(model: SplitPayoff, x, k: int, xp):
    """Sparse coefficient weights so that eval = sum(weight * coefficient).

    Returns a list of ``(flat_coefficient_index, weight)`` pairs, at most 2^dim
    per grid term, nonnegative, summing to one per term.
    """
    out = []
    kk = model.space.n_strategies
    for nodes, weights, offset in model.coefficient_weights(np.atleast_2d(x), np.atleast_2d(xp)):
        for node, w in zip(nodes[0], weights[0]):
            if w != 0.0:
                out.append((int(offset + node * kk + k), float(w)))
    return out


def gauge_normalize_full_pair(model: FullPairPayoff) -> FullPairPayoff:
    """Fix the additive gauge so J(x,+1,x',-1) = J(x,-1,x',+1) = 0.

    Only the two-strategy scalar set U = {-1,+1} carries this convention; the
    subtracted fields depend on (x, x', u') only, so dynamics are unchanged.
    """
    pts = model.space.points.ravel()
    if model.space.n_strategies != 2 or set(np.sign(pts)) != {-1.0, 1.0}:
        raise ValueError("gauge normalization is defined for the two-strategy set {-1,+1}")
    k_minus, k_plus = int(np.argmin(pts)), int(np.argmax(pts))
    values = model.grid.values.copy()
    # subtract g(x,x',u') == J(x, +1, x', -1) from the u'=-1 slice, and likewise for +1
    values[..., :, k_minus] -= values[..., k_plus, k_minus][..., None]
    values[..., :, k_plus] -= values[..., k_minus, k_plus][..., None]
    return replace(model, grid=model.grid.with_values(values))


# ---------------------------------------------------------------------------
# closed-form benchmark payoffs
# ---------------------------------------------------------------------------


def newton_force(x, xp) -> np.ndarray:
    """Attraction to the origin with close-range pairwise repulsion."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    delta = xp - x
    dist = np.linalg.norm(delta, axis=-1, keepdims=True)
    return -x - np.tanh(5.0 * delta) / (1.0 + dist) ** 2


def _origin_repulsion(x, points, xp):
    delta = xp - x
    bump = np.maximum(1.0 - np.sum(delta * delta, axis=-1), 0.0) ** 2
    return -(x @ points.T) - (np.tanh(5.0 * delta) @ points.T) * bump[:, None]


def _newton_embed(x, points, xp):
    f = newton_force(x, xp)
    diff = points[None, :, :] - f[:, None, :]
    return -np.sum(diff * diff, axis=-1)


def _nearest_neighbour(x, points, xp, reach=2.0, width=0.5):
    def bump(w):
        return np.maximum(1.0 - np.sum(w * w, axis=-1) / width**2, 0.0) ** 2

    delta = xp - x
    dist = np.linalg.norm(delta, axis=-1)
    safe = np.where(dist > 0, dist, 1.0)
    direction = delta / safe[:, None]
    toward = bump(points[None, :, :] - direction[:, None, :])
    toward = np.where(dist[:, None] > 0, toward, 0.0)
    return (reach - dist)[:, None] * toward - reach * bump(points)[None, :]


_UNDISCLOSED_BUILTINS = {
    "origin_repulsion_1d": (_origin_repulsion, space_1d),
    "origin_repulsion_2d": (_origin_repulsion, space_2d_diagonal),
    "newton_embed": (_newton_embed, space_1d),
    "nearest_neighbour": (_nearest_neighbour, space_2d_diagonal),
}


@dataclass(frozen=True)
class BuiltinPayoff:
    """Closed-form undisclosed payoff used for ground-truth data generation."""

    name: str
    space: StrategySpace

    variant = "builtin"

    def payoff_values(self, x, xp) -> np.ndarray:
        fn = _UNDISCLOSED_BUILTINS[self.name][0]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        return fn(x, self.space.points, xp)

    def evaluate(self, x, k: int, xp) -> float:
        return float(self.payoff_values(np.atleast_2d(x), np.atleast_2d(xp))[0, k])

    def mean_payoff(self, positions) -> np.ndarray:
        pos = np.asarray(positions, dtype=float)
        n = pos.shape[0]
        xi = np.repeat(pos, n, axis=0)
        xj = np.tile(pos, (n, 1))
        return self.payoff_values(xi, xj).reshape(n, n, -1).mean(axis=1)


@dataclass(frozen=True)
class FullPairDemoPayoff:
    """Two-strategy pair payoff -(u+u')((u+1)x^5 + (u-1)(x+x')^3)/2 on the line."""

    space: StrategySpace

    name = "full_pair_demo"
    variant = "builtin_full_pair"

    def pair_payoff_values(self, x, xp) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))[:, 0]
        xp = np.atleast_2d(np.asarray(xp, dtype=float))[:, 0]
        u = self.space.points.ravel()
        uu = u[:, None]
        up = u[None, :]
        core = (uu + 1.0) * x[:, None, None] ** 5 + (uu - 1.0) * (x + xp)[:, None, None] ** 3
        return -0.5 * (uu + up) * core

    def pair_payoff_matrix(self, positions) -> np.ndarray:
        pos = np.asarray(positions, dtype=float)
        n = pos.shape[0]
        xi = np.repeat(pos, n, axis=0)
        xj = np.tile(pos, (n, 1))
        k = self.space.n_strategies
        return self.pair_payoff_values(xi, xj).reshape(n, n, k, k)


def make_builtin_payoff(name: str):
    """Closed-form payoff by name, with its conventional strategy space attached."""
    if name in _UNDISCLOSED_BUILTINS:
        _, make_space = _UNDISCLOSED_BUILTINS[name]
        return BuiltinPayoff(name, make_space())
    if name == "full_pair_demo":
        return FullPairDemoPayoff(space_1d())
    raise ValueError(f"unknown builtin payoff {name!r}")


def pair_matrix_from_undisclosed(model, positions) -> np.ndarray:
    """Lift an undisclosed payoff to the (N,N,K,K) pair tensor (constant in u')."""
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    xi = np.repeat(pos, n, axis=0)
    xj = np.tile(pos, (n, 1))
    vals = model.payoff_values(xi, xj).reshape(n, n, -1)
    k = vals.shape[-1]
    return np.repeat(vals[:, :, :, None], k, axis=3)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _axis_to_json(ax: Axis) -> dict:
    return {"lo": ax.lo, "hi": ax.hi, "nodes": ax.nodes, "periodic": ax.periodic}


def _grid_to_json(grid: Grid, name: str) -> dict:
    return {
        "name": name,
        "axes": [_axis_to_json(ax) for ax in grid.axes],
        "value_shape": list(grid.value_shape),
        "zero_outside": grid.zero_outside,
        "coefficients": grid.values.ravel().tolist(),
    }


def _grid_from_json(doc: dict) -> Grid:
    axes = tuple(Axis(a["lo"], a["hi"], a["nodes"], a["periodic"]) for a in doc["axes"])
    shape = tuple(a.nodes for a in axes) + tuple(doc["value_shape"])
    values = np.asarray(doc["coefficients"], dtype=float).reshape(shape)
    return Grid(axes, values, doc["zero_outside"])


def payoff_to_json(model) -> str:
    """Canonical JSON document for a grid payoff (17 significant digit floats)."""
    doc = {
        "variant": model.variant,
        "strategy_points": model.space.points.tolist(),
        "grids": [],
    }
    if isinstance(model, SplitPayoff) or isinstance(model, PedestrianPayoff):
        doc["grids"] = [_grid_to_json(model.j1, "j1"), _grid_to_json(model.j2, "j2")]
    elif isinstance(model, FullPairPayoff):
        doc["grids"] = [_grid_to_json(model.grid, "pair")]
    else:
        raise ValueError(f"cannot serialize payoff variant {model.variant!r}")
    return dumps_canonical(doc)


def payoff_from_json(text: str):
    doc = json.loads(text)
    space = StrategySpace(np.asarray(doc["strategy_points"], dtype=float))
    grids = [_grid_from_json(g) for g in doc["grids"]]
    variant = doc["variant"]
    if variant == "split":
        return SplitPayoff(space, grids[0], grids[1])
    if variant == "pedestrian":
        return PedestrianPayoff(space, grids[0], grids[1])
    if variant == "full_pair":
        return FullPairPayoff(space, grids[0])
    raise ValueError(f"unknown payoff variant {variant!r}")


def save_payoff(model, path) -> None:
    with open(path, "w") as fh:
        fh.write(payoff_to_json(model))
        fh.write("\n")


def load_payoff(path):
    with open(path) as fh:
        return payoff_from_json(fh.read())
