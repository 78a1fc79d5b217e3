"""Anticipatory pedestrian model: unit-speed walkers steering by a collision potential.

Each walker i carries a heading theta_i and a fixed desired heading
theta_bar_i.  The heading relaxes along the negative circular gradient of a
potential combining the desired-direction penalty with an anticipated
close-encounter penalty over all visible walkers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .payoff import wrap_angle

VISION_COS = np.cos(7.0 * np.pi / 12.0)
PARALLEL_TOL = 1e-12
GRAD_STEP = 1e-4


@dataclass
class PedestrianParams:
    k1: float = 1.0     # weight of the desired-direction penalty
    k2: float = 1.0     # weight of the anticipated-encounter penalty
    radius: float = 0.3  # penalized closest-encounter distance
    horizon: float = 1.0  # penalized distance-to-encounter


def quadratic_penalty(x, a: float):
    """(x/a - 1)^2 for x <= a, zero beyond."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= a, (x / a - 1.0) ** 2, 0.0)


def pedestrian_quantities(x_i, v, x_j, v_j):
    """Distance-to-encounter D, encounter miss distance C and visibility S for one pair.

    Pairs moving with (numerically) identical velocities have no defined
    encounter; they are reported invisible (S = 0, D = C = nan).
    """
    x_i = np.asarray(x_i, dtype=float)
    v = np.asarray(v, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    dx = x_j - x_i
    dv = v_j - v
    rel = float(dv @ dv)
    if rel < PARALLEL_TOL**2:
        return float("nan"), float("nan"), 0.0
    along = float(dx @ dv)
    d = -along / rel * float(np.linalg.norm(v))
    c = float(np.sqrt(max(float(dx @ dx) - along**2 / rel, 0.0)))
    cone = float(dx @ v) / (float(np.linalg.norm(dx)) * float(np.linalg.norm(v)))
    s = 1.0 if (cone > VISION_COS and d > 0.0) else 0.0
    return d, c, s


def _potential(positions, velocities, probe_v, theta_bar, params: PedestrianParams):
    """Potential of every agent when it probes velocity probe_v[i], others unchanged."""
    n = positions.shape[0]
    dx = positions[None, :, :] - positions[:, None, :]          # x_j - x_i
    dv = velocities[None, :, :] - probe_v[:, None, :]           # v_j - probe_i
    rel = np.einsum("ijc,ijc->ij", dv, dv)
    ok = rel >= PARALLEL_TOL**2
    rel_safe = np.where(ok, rel, 1.0)
    along = np.einsum("ijc,ijc->ij", dx, dv)
    speed = np.linalg.norm(probe_v, axis=1)
    d = -along / rel_safe * speed[:, None]
    c = np.sqrt(np.maximum(np.einsum("ijc,ijc->ij", dx, dx) - along**2 / rel_safe, 0.0))
    dist = np.linalg.norm(dx, axis=2)
    np.fill_diagonal(dist, 1.0)
    cone = np.einsum("ijc,ic->ij", dx, probe_v) / (dist * speed[:, None])
    s = ok & (cone > VISION_COS) & (d > 0.0)
    np.fill_diagonal(s, False)

    pair = np.where(s, quadratic_penalty(c, params.radius) * quadratic_penalty(d, params.horizon), 0.0)
    visible = s.sum(axis=1)
    interaction = np.where(visible > 0, pair.sum(axis=1) / np.maximum(visible, 1), 0.0)

    vbar = np.stack([np.cos(theta_bar), np.sin(theta_bar)], axis=1)
    drive = np.einsum("ic,ic->i", probe_v - vbar, probe_v - vbar)
    return params.k1 * drive + params.k2 * interaction


def heading_gradient(positions, theta, theta_bar, params: PedestrianParams,
                     h: float = GRAD_STEP) -> np.ndarray:
    """Central finite difference of the sphere-restricted potential in the heading."""
    velocities = np.stack([np.cos(theta), np.sin(theta)], axis=1)

    def phi(angles):
        probe = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return _potential(positions, velocities, probe, theta_bar, params)

    return (phi(theta + h) - phi(theta - h)) / (2.0 * h)


def step_pedestrian(positions, theta, theta_bar, params: PedestrianParams, dt: float):
    """One Euler step: positions advance with unit speed, headings descend the potential."""
    if positions.shape[0] < 2:
        raise ValueError("the pedestrian model needs at least two agents")
    velocities = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    new_theta = wrap_angle(theta - dt * heading_gradient(positions, theta, theta_bar, params))
    return positions + dt * velocities, new_theta


def sample_groups(init: dict, realizations: int, r: int, rng: np.random.Generator):
    """Initial pedestrian state for realization r from a two-group style spec.

    A fixed leading share of realizations starts with headings slightly
    perturbed around the desired heading; the rest start with uniformly random
    headings so turning behaviour is observed at all mismatch angles.
    """
    positions, theta_bar = [], []
    for group in init["groups"]:
        low = np.asarray(group["low"], dtype=float)
        high = np.asarray(group["high"], dtype=float)
        count = int(group["count"])
        positions.append(rng.uniform(low, high, size=(count, 2)))
        theta_bar.append(np.full(count, float(group["theta_bar"])))
    positions = np.concatenate(positions)
    theta_bar = wrap_angle(np.concatenate(theta_bar))

    random_fraction = float(init.get("random_heading_fraction", 0.25))
    perturbation = float(init.get("heading_perturbation", 0.2))
    n_perturbed = round((1.0 - random_fraction) * realizations)
    if r < n_perturbed:
        theta = wrap_angle(theta_bar + rng.uniform(-perturbation, perturbation, theta_bar.shape))
    else:
        theta = rng.uniform(-np.pi, np.pi, theta_bar.shape)
    return positions, theta, theta_bar
