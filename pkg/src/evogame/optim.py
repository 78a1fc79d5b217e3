"""Limited-memory quasi-Newton minimizer with a strong-Wolfe line search.

The objective callable returns ``(value, gradient)``.  Iterates are accepted
only on sufficient decrease, so the recorded value trace is non-increasing;
termination is at gradient norm below ``tol * max(1, |value|)`` or after the
iteration cap; on a line-search failure the best iterate seen is returned with
a status flag.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

ARMIJO_C1 = 1e-4
WOLFE_C2 = 0.1


@dataclass
class MinimizeResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    status: str                       # converged | max_iterations | line_search_failed
    trace: list[float] = field(default_factory=list)
    wall_ms: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _line_search(fun, x, f0, g0, d, max_evals=30):
    """Strong-Wolfe search along d; returns (alpha, f, g, evals) or None."""
    slope0 = float(g0 @ d)
    if slope0 >= 0:
        return None

    def probe(alpha):
        f, g = fun(x + alpha * d)
        return float(f), g, float(g @ d)

    def zoom(lo, f_lo, s_lo, hi, f_hi, evals):
        for _ in range(max_evals - evals):
            # quadratic interpolation with bisection fallback
            denom = 2.0 * (f_hi - f_lo - s_lo * (hi - lo))
            alpha = lo + (hi - lo) * 0.5 if denom == 0 else lo - s_lo * (hi - lo) ** 2 / denom
            span = abs(hi - lo)
            if not (min(lo, hi) + 0.05 * span < alpha < max(lo, hi) - 0.05 * span):
                alpha = 0.5 * (lo + hi)
            f, g, s = probe(alpha)
            evals += 1
            if f > f0 + ARMIJO_C1 * alpha * slope0 or f >= f_lo:
                hi, f_hi = alpha, f
            else:
                if abs(s) <= -WOLFE_C2 * slope0:
                    return alpha, f, g, evals
                if s * (hi - lo) >= 0:
                    hi, f_hi = lo, f_lo
                lo, f_lo, s_lo = alpha, f, s
            if span < 1e-16:
                break
        return None

    alpha_prev, f_prev, s_prev = 0.0, f0, slope0
    alpha = 1.0
    evals = 0
    while evals < max_evals:
        f, g, s = probe(alpha)
        evals += 1
        if f > f0 + ARMIJO_C1 * alpha * slope0 or (evals > 1 and f >= f_prev):
            return zoom(alpha_prev, f_prev, s_prev, alpha, f, evals)
        if abs(s) <= -WOLFE_C2 * slope0:
            return alpha, f, g, evals
        if s >= 0:
            return zoom(alpha, f, s, alpha_prev, f_prev, evals)
        alpha_prev, f_prev, s_prev = alpha, f, s
        alpha *= 2.5
    return None


def lbfgs(fun, x0, max_iterations: int = 500, tol: float = 1e-6,
          memory: int = 10) -> MinimizeResult:
    """Minimize fun(x) -> (value, grad) from x0 by two-loop L-BFGS recursion."""
    start = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun(x)
    f = float(f)
    g = np.asarray(g, dtype=float)
    trace = [f]
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho: list[float] = []
    status = "max_iterations"
    iterations = 0

    def done(value, grad):
        return float(np.linalg.norm(grad)) <= tol * max(1.0, abs(value))

    if done(f, g):
        status = "converged"
    else:
        for iterations in range(1, max_iterations + 1):
            q = g.copy()
            alphas = []
            for s, y, r in zip(reversed(s_hist), reversed(y_hist), reversed(rho)):
                a = r * float(s @ q)
                alphas.append(a)
                q -= a * y
            if y_hist:
                gamma = float(s_hist[-1] @ y_hist[-1]) / float(y_hist[-1] @ y_hist[-1])
                q *= gamma
            else:
                q /= max(float(np.linalg.norm(g)), 1.0)
            for (s, y, r), a in zip(zip(s_hist, y_hist, rho), reversed(alphas)):
                q += (a - r * float(y @ q)) * s
            d = -q

            hit = _line_search(fun, x, f, g, d)
            if hit is None:
                status = "line_search_failed"
                break
            alpha, f_new, g_new, _ = hit
            s = alpha * d
            y = g_new - g
            sy = float(s @ y)
            if sy > 1e-16 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
                s_hist.append(s)
                y_hist.append(y)
                rho.append(1.0 / sy)
                if len(s_hist) > memory:
                    s_hist.pop(0)
                    y_hist.pop(0)
                    rho.pop(0)
            x = x + s
            f, g = float(f_new), g_new
            trace.append(f)
            if done(f, g):
                status = "converged"
                break

    wall_ms = 1000.0 * (time.perf_counter() - start)
    return MinimizeResult(x, f, float(np.linalg.norm(g)), iterations, status, trace, wall_ms)
