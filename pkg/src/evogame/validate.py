"""Validation task suites: each task returns pass/fail rows for the diagnostics table.

Rows are dicts with keys (task, metric, value, threshold, pass); thresholds are
stated as the comparison actually performed, so a row is reproducible from the
table alone.
"""

from __future__ import annotations

import numpy as np

from . import forward, inference, metrics, payoff as payoff_mod, strategy

TASKS = (
    "lambda-convergence",
    "eps-newton",
    "meanfield",
    "gradcheck",
    "convexity",
    "trajectory-bound",
    "pinsker",
)


def _row(task, metric, value, threshold, ok):
    return {"task": task, "metric": metric, "value": float(value),
            "threshold": threshold, "pass": bool(ok)}


def _origin_dataset(seed, n_agents=8, realizations=20, steps=10, subsample=2,
                    dt=0.02, eps=1.0, model="fast_reaction"):
    config = forward.SimConfig(
        model=model, n_agents=n_agents, dt=dt, steps=steps, subsample=subsample,
        realizations=realizations, seed=seed, eps=eps,
        init={"kind": "uniform_box", "low": [-1.0], "high": [1.0]},
    )
    return forward.run_simulation(config, payoff_mod.make_builtin_payoff("origin_repulsion_1d"))


def lambda_convergence(seed=0, lams=(1.0, 10.0, 100.0), horizon=0.5, dt=1e-3,
                       n_agents=8) -> list[dict]:
    """Gap to the quasi-static limit shrinks like a power of the strategy time-scale."""
    pay = payoff_mod.make_builtin_payoff("origin_repulsion_1d")
    space = pay.space
    rng = np.random.default_rng([seed])
    x0 = rng.uniform(-1.0, 1.0, size=(n_agents, 1))
    sigma0 = np.ones((n_agents, space.n_strategies))
    steps = int(round(horizon / dt))
    reference = forward.fast_reaction_trajectory(x0, pay, space, 1.0, dt, steps)[-1]
    errs = []
    for lam in lams:
        pos, _ = forward.undisclosed_trajectory(x0, sigma0, pay, space, lam, 1.0, dt, steps)
        errs.append(metrics.norm_n(pos[-1], reference))
    rows = []
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    rows.append(_row("lambda-convergence", "strictly_decreasing", float(decreasing), "== 1", decreasing))
    slope = metrics.fit_rate(lams, errs)
    rows.append(_row("lambda-convergence", "loglog_slope", slope, "<= -0.4", slope <= -0.4))
    for lam, err in zip(lams, errs):
        rows.append(_row("lambda-convergence", f"gap_lambda_{lam:g}", err, "reported", True))
    return rows


def eps_newton(seed=0, eps_values=(0.5, 0.1, 0.01), horizon=2.0, dt=0.02,
               n_agents=4) -> list[dict]:
    """A quadratic-penalty embedding of a pairwise force model sharpens as eps shrinks."""
    rng = np.random.default_rng([seed])
    x0 = rng.uniform(-1.0, 1.0, size=(n_agents, 1))
    steps = int(round(horizon / dt))
    newton = forward.newtonian_trajectory(x0, payoff_mod.newton_force, dt, steps)
    # the admissible-velocity range is kept snug around the force range so the
    # entropic spread is the dominant (and eps-controlled) embedding error
    space = strategy.space_1d(np.linspace(-2.0, 2.0, 161))
    embed = payoff_mod.BuiltinPayoff("newton_embed", space)
    gaps = []
    for eps in eps_values:
        game = forward.fast_reaction_trajectory(x0, embed, space, eps, dt, steps)
        gaps.append(max(metrics.norm_n(a, b) for a, b in zip(newton, game)))
    rows = []
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    rows.append(_row("eps-newton", "strictly_decreasing", float(decreasing), "== 1", decreasing))
    rows.append(_row("eps-newton", "gap_eps_0.01", gaps[-1], "<= 0.05", gaps[-1] <= 0.05))
    for eps, gap in zip(eps_values, gaps):
        rows.append(_row("eps-newton", f"gap_eps_{eps:g}", gap, "reported", True))
    return rows


def meanfield(seed=0, sizes=(8, 32, 128, 512), horizon=0.5, dt=0.02,
              n_seeds=20) -> list[dict]:
    """Empirical ensembles approach a consistent limit as the agent count grows."""
    pay = payoff_mod.make_builtin_payoff("origin_repulsion_1d")
    space = pay.space
    steps = int(round(horizon / dt))
    reference_n = sizes[-1]
    mean_gaps = np.zeros(len(sizes) - 1)
    for s in range(n_seeds):
        finals = {}
        for n in sizes:
            rng = np.random.default_rng([seed, s, n])
            x0 = rng.uniform(-1.0, 1.0, size=(n, 1))
            finals[n] = forward.fast_reaction_trajectory(x0, pay, space, 1.0, dt, steps)[-1]
        for idx, n in enumerate(sizes[:-1]):
            mean_gaps[idx] += metrics.wasserstein1_empirical(finals[n], finals[reference_n])
    mean_gaps /= n_seeds
    rows = []
    decreasing = all(b < a for a, b in zip(mean_gaps, mean_gaps[1:]))
    rows.append(_row("meanfield", "w1_monotone_decreasing", float(decreasing), "== 1", decreasing))
    for n, gap in zip(sizes[:-1], mean_gaps):
        rows.append(_row("meanfield", f"w1_n_{n}", gap, "reported", True))
    return rows


def _directional_check(value_grad, coeffs, rng, n_directions, h=1e-5):
    _, grad = value_grad(coeffs)
    worst = 0.0
    for _ in range(n_directions):
        d = rng.standard_normal(coeffs.shape)
        d /= np.linalg.norm(d)
        f_plus = value_grad(coeffs + h * d)[0]
        f_minus = value_grad(coeffs - h * d)[0]
        numeric = (f_plus - f_minus) / (2.0 * h)
        analytic = float(grad @ d)
        scale = max(abs(numeric), abs(analytic), 1e-10)
        worst = max(worst, abs(numeric - analytic) / scale)
    return worst


def gradcheck(seed=0, n_directions=20) -> list[dict]:
    """All analytic coefficient gradients match central finite differences."""
    rng = np.random.default_rng([seed])
    rows = []

    data = _origin_dataset(seed, realizations=4)
    model = inference.split_model_from_dataset(data, j1_nodes=7, j2_nodes=9)
    coeffs = 0.5 * rng.standard_normal(payoff_mod.model_coefficients(model).size)
    for functional in ("sigma", "velocity"):
        problem = inference.InferenceProblem(data, model, functional, 1e-5, 1e-5, 1.0)
        _, term = inference.build_objective(problem)
        worst = _directional_check(term, coeffs, rng, n_directions)
        rows.append(_row("gradcheck", f"{functional}_rel_error", worst, "<= 1e-5", worst <= 1e-5))

    full = payoff_mod.make_builtin_payoff("full_pair_demo")
    config = forward.SimConfig(
        model="full_entropic", n_agents=4, dt=0.02, steps=6, subsample=1,
        realizations=3, seed=seed, eps=1.0, lam=1.0,
        init={"kind": "uniform_box", "low": [-1.0], "high": [1.0]},
    )
    fdata = forward.run_simulation(config, full, space=full.space)
    fmodel = inference.full_pair_model_from_dataset(fdata, full.space, nodes=6)
    fcoeffs = 0.5 * rng.standard_normal(payoff_mod.model_coefficients(fmodel).size)
    problem = inference.InferenceProblem(fdata, fmodel, "differential", 1e-5, 0.0, 1.0)
    _, term = inference.build_objective(problem)
    worst = _directional_check(term, fcoeffs, rng, n_directions)
    rows.append(_row("gradcheck", "differential_rel_error", worst, "<= 1e-5", worst <= 1e-5))

    pconfig = forward.SimConfig(
        model="pedestrian", n_agents=4, dt=0.005, steps=40, subsample=10,
        realizations=3, seed=seed,
        init={
            "kind": "pedestrian_groups",
            "groups": [
                {"count": 2, "low": [0.0, 0.0], "high": [0.5, 0.5], "theta_bar": 0.0},
                {"count": 2, "low": [1.0, 0.0], "high": [1.5, 0.5], "theta_bar": np.pi},
            ],
        },
    )
    pdata = forward.run_simulation(pconfig)
    pspace = strategy.space_1d((-2.0, 2.0))
    pmodel = inference.pedestrian_model_from_dataset(pdata, pspace, j1_nodes=8, j2_nodes=5)
    pcoeffs = 0.5 * rng.standard_normal(payoff_mod.model_coefficients(pmodel).size)
    problem = inference.InferenceProblem(pdata, pmodel, "pedestrian_velocity", 1e-5, 1e-5, 1.0)
    _, term = inference.build_objective(problem)
    worst = _directional_check(term, pcoeffs, rng, n_directions)
    rows.append(_row("gradcheck", "pedestrian_rel_error", worst, "<= 1e-5", worst <= 1e-5))
    return rows


def convexity(seed=0, n_segments=100) -> list[dict]:
    """Midpoint convexity of the strategy-mismatch energy along random segments."""
    rng = np.random.default_rng([seed])
    data = _origin_dataset(seed, realizations=4)
    model = inference.split_model_from_dataset(data, j1_nodes=7, j2_nodes=9)
    problem = inference.InferenceProblem(data, model, "sigma", 0.0, 0.0, 1.0)
    _, term = inference.build_objective(problem)
    size = payoff_mod.model_coefficients(model).size
    worst = -np.inf
    for _ in range(n_segments):
        a = rng.standard_normal(size)
        b = rng.standard_normal(size)
        mid = term(0.5 * (a + b))[0]
        chord = 0.5 * (term(a)[0] + term(b)[0])
        worst = max(worst, mid - chord)
    return [_row("convexity", "midpoint_violation", worst, "<= 1e-10", worst <= 1e-10)]


def trajectory_bound(seed=0, n_perturbations=20, noise=0.1) -> list[dict]:
    """The re-simulation error bound holds across randomly perturbed payoffs."""
    rng = np.random.default_rng([seed])
    data = _origin_dataset(seed, realizations=5)
    base = inference.split_model_from_dataset(data)
    problem = inference.InferenceProblem(data, base, "sigma", 1e-6, 1e-6, 1.0)
    fitted = inference.minimize(problem).model
    coeffs = payoff_mod.model_coefficients(fitted)
    all_hold = True
    worst_margin = np.inf
    for trial in range(n_perturbations):
        perturbed = payoff_mod.set_model_coefficients(
            fitted, coeffs + rng.uniform(-noise, noise, coeffs.shape)
        )
        report = inference.trajectory_error_bound_check(data, perturbed, 1.0, seed=trial)
        all_hold = all_hold and report["holds"]
        gap = max(report["max_gap_per_realization"])
        worst_margin = min(worst_margin, report["bound"] - gap)
    rows = [_row("trajectory-bound", "bound_holds_all", float(all_hold), "== 1", all_hold)]
    rows.append(_row("trajectory-bound", "worst_margin", worst_margin, ">= 0", worst_margin >= 0))
    return rows


def pinsker(seed=0, n_pairs=50) -> list[dict]:
    """Velocity mismatch is controlled by the strategy mismatch: E_v <= 2 e_max^2 E_sigma."""
    rng = np.random.default_rng([seed])
    worst = -np.inf
    for trial in range(n_pairs):
        data = _origin_dataset(int(rng.integers(2**31)), realizations=2, steps=4)
        model = inference.split_model_from_dataset(data, j1_nodes=5, j2_nodes=7)
        coeffs = rng.standard_normal(payoff_mod.model_coefficients(model).size)
        model = payoff_mod.set_model_coefficients(model, coeffs)
        problem = inference.InferenceProblem(data, model, "sigma", 0.0, 0.0, 1.0)
        e_sigma = inference.energy_sigma(problem)[0]
        e_vel = inference.energy_velocity(problem)[0]
        e_max = data.strategy_space().e_max
        worst = max(worst, e_vel - 2.0 * e_max**2 * e_sigma)
    return [_row("pinsker", "chain_violation", worst, "<= 0", worst <= 0.0)]


def run_task(task: str, seed: int = 0) -> list[dict]:
    runners = {
        "lambda-convergence": lambda_convergence,
        "eps-newton": eps_newton,
        "meanfield": meanfield,
        "gradcheck": gradcheck,
        "convexity": convexity,
        "trajectory-bound": trajectory_bound,
        "pinsker": pinsker,
    }
    if task not in runners:
        raise ValueError(f"unknown validation task {task!r}; expected one of {TASKS}")
    return runners[task](seed=seed)
