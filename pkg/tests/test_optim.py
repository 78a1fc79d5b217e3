import numpy as np
import pytest

from evogame.optim import lbfgs


def quadratic(A, b):
    def fun(x):
        return 0.5 * float(x @ (A @ x)) - float(b @ x) + 0.5 * float(b @ b), A @ x - b

    return fun


class TestLbfgs:
    def test_quadratic_converges_fast(self):
        # strictly convex quadratic: exact minimizer within dimension+5 iterations
        n = 10
        rng = np.random.default_rng(0)
        diag = np.linspace(1.0, 5.0, n)
        A = np.diag(diag)
        b = rng.normal(size=n)
        expected = b / diag
        result = lbfgs(quadratic(A, b), np.zeros(n), memory=n, tol=1e-12)
        assert result.converged
        assert result.iterations <= n + 5
        np.testing.assert_allclose(result.x, expected, atol=1e-8)

    def test_zero_gradient_start(self):
        fun = quadratic(np.eye(3), np.zeros(3))
        result = lbfgs(fun, np.zeros(3))
        assert result.converged
        assert result.iterations == 0

    def test_trace_is_monotone(self):
        rng = np.random.default_rng(1)
        n = 20
        M = rng.normal(size=(n, n))
        A = M @ M.T + np.eye(n)
        fun = quadratic(A, rng.normal(size=n))
        result = lbfgs(fun, rng.normal(size=n), memory=8)
        assert all(b <= a + 1e-14 for a, b in zip(result.trace, result.trace[1:]))
        assert result.converged

    def test_rosenbrock(self):
        def fun(z):
            x, y = z
            f = (1 - x) ** 2 + 100 * (y - x**2) ** 2
            g = np.array([-2 * (1 - x) - 400 * x * (y - x**2), 200 * (y - x**2)])
            return f, g

        result = lbfgs(fun, np.array([-1.2, 1.0]), max_iterations=200)
        assert result.converged
        np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-6)

    def test_iteration_cap_respected(self):
        rng = np.random.default_rng(2)
        n = 40
        M = rng.normal(size=(n, n))
        fun = quadratic(M @ M.T + 0.01 * np.eye(n), rng.normal(size=n))
        result = lbfgs(fun, rng.normal(size=n), max_iterations=3)
        assert result.iterations <= 3
        assert result.status in ("max_iterations", "converged")

    def test_best_iterate_kept_on_line_search_failure(self):
        # |x| is non-smooth at the optimum: the search eventually stalls there
        def fun(x):
            return float(np.abs(x[0])), np.array([np.sign(x[0]) if x[0] != 0 else 1.0])

        result = lbfgs(fun, np.array([1.0]), max_iterations=100)
        assert result.value <= 1.0
        assert result.status in ("line_search_failed", "max_iterations")
