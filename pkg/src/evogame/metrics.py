"""Ensemble distances and rate diagnostics used by the validation suites."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.stats import wasserstein_distance

ASSIGNMENT_LIMIT = 1024


def norm_n(a, b) -> float:
    """Scaled ensemble norm (1/N) sum_i |a_i - b_i| over index-aligned clouds."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"clouds must be index-aligned, got {a.shape} vs {b.shape}")
    return float(np.mean(np.linalg.norm(a - b, axis=-1)))


def wasserstein1_empirical(a, b) -> float:
    """Exact W1 between uniform empirical measures.

    In one dimension any sizes are admitted (quantile coupling); in higher
    dimension both clouds must have equal size and the metric is computed by an
    exact minimum-cost assignment, capped at {limit} points.  For larger clouds
    project to one-dimensional marginals instead.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("clouds must be (N, d) arrays of equal dimension")
    if a.shape[1] == 1:
        return float(wasserstein_distance(a[:, 0], b[:, 0]))
    if a.shape[0] != b.shape[0]:
        raise ValueError("equal cloud sizes required beyond one dimension")
    if a.shape[0] > ASSIGNMENT_LIMIT:
        raise ValueError(
            f"assignment-based W1 is capped at {ASSIGNMENT_LIMIT} points; "
            "use 1-d projections for larger clouds"
        )
    cost = cdist(a, b)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


wasserstein1_empirical.__doc__ = wasserstein1_empirical.__doc__.format(limit=ASSIGNMENT_LIMIT)


def fit_rate(xs, errs) -> float:
    """Least-squares slope of log(err) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if xs.size < 3:
        raise ValueError("rate fitting needs at least three points")
    if np.any(xs <= 0) or np.any(errs <= 0):
        raise ValueError("rate fitting needs strictly positive values")
    slope, _ = np.polyfit(np.log(xs), np.log(errs), 1)
    return float(slope)
