"""Command-line interface: simulate | infer | reconstruct | rollout | validate.

Each run takes an optional JSON config document; explicit flags override config
fields and the fully resolved configuration is echoed next to the output file
so every artifact records the defaults that produced it.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import validate as validation
from .dataset import TrajectoryDataset
from .forward import SimConfig, resolve_threads, run_simulation
from .inference import (
    HullError,
    InferenceProblem,
    attach_reconstructed_strategies,
    full_pair_model_from_dataset,
    gauge_normalize_full_pair,
    minimize,
    pedestrian_model_from_dataset,
    split_model_from_dataset,
)
from .payoff import load_payoff, make_builtin_payoff, save_payoff
from .serialize import dumps_canonical
from .strategy import StrategySpace

EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_INTEGRATOR = 3
EXIT_OPTIMIZER = 4
EXIT_HULL = 5

DEFAULT_PEDESTRIAN_INIT = {
    "kind": "pedestrian_groups",
    "groups": [
        {"count": 3, "low": [0.0, 0.0], "high": [0.5, 0.5], "theta_bar": 0.0},
        {"count": 3, "low": [1.0, 0.0], "high": [1.5, 0.5], "theta_bar": np.pi},
    ],
    "random_heading_fraction": 0.25,
    "heading_perturbation": 0.2,
}


class ConfigError(ValueError):
    pass


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _merge(config: dict, args: argparse.Namespace, keys: dict) -> dict:
    """Start from defaults, apply config fields, then explicit CLI flags."""
    resolved = dict(keys)
    for key in keys:
        if key in config and config[key] is not None:
            resolved[key] = config[key]
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
    return resolved


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def _parse_points(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    return np.asarray([[float(tok) for tok in row.split(",")] for row in rows])


def _echo_config(out_path: str, resolved: dict) -> None:
    with open(f"{out_path}.config.json", "w") as fh:
        fh.write(dumps_canonical(resolved))
        fh.write("\n")


def _payoff_from_spec(spec: str):
    if spec.startswith("builtin:"):
        return make_builtin_payoff(spec.split(":", 1)[1])
    return load_payoff(spec)


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    resolved = _merge(config, args, {
        "model": None, "payoff": None, "n": 8, "realizations": 1, "dt": None,
        "steps": 10, "subsample": 2, "seed": 0, "eps": 1.0, "lam": 1.0,
        "init_low": None, "init_high": None, "out": "dataset.ndjson",
        "record_strategies": True, "threads": None,
    })
    if "init" in config:
        resolved["init"] = config["init"]
    if "pedestrian" in config:
        resolved["pedestrian"] = config["pedestrian"]

    model = (resolved["model"] or "").replace("-", "_")
    if model not in ("full_entropic", "undisclosed", "fast_reaction", "newtonian", "pedestrian"):
        raise ConfigError(f"--model is required and must name a known model, got {resolved['model']!r}")
    resolved["model"] = model
    if resolved["dt"] is None:
        resolved["dt"] = 0.005 if model == "pedestrian" else 0.02

    payoff = None
    space = None
    if model == "pedestrian":
        resolved.setdefault("init", DEFAULT_PEDESTRIAN_INIT)
    elif model == "newtonian":
        from .payoff import newton_force

        payoff = newton_force
    else:
        if not resolved["payoff"]:
            raise ConfigError("--payoff is required for game models")
        payoff = _payoff_from_spec(resolved["payoff"])
        space = payoff.space
    if "init" not in resolved or resolved["init"] is None:
        d = space.points.shape[1] if space is not None else 1
        low = resolved["init_low"] or [-1.0] * d
        high = resolved["init_high"] or [1.0] * d
        resolved["init"] = {"kind": "uniform_box", "low": low, "high": high}

    from .pedestrian import PedestrianParams

    ped_params = PedestrianParams(**resolved.get("pedestrian", {}))
    sim = SimConfig(
        model=model, n_agents=int(resolved["n"]), dt=float(resolved["dt"]),
        steps=int(resolved["steps"]), subsample=int(resolved["subsample"]),
        realizations=int(resolved["realizations"]), seed=int(resolved["seed"]),
        eps=float(resolved["eps"]), lam=float(resolved["lam"]),
        record_strategies=bool(resolved["record_strategies"]),
        init=resolved["init"], pedestrian=ped_params,
    )
    dataset = run_simulation(sim, payoff, space=space,
                             threads=resolve_threads(resolved["threads"]))
    dataset.save(resolved["out"])
    resolved["pedestrian"] = vars(ped_params)
    _echo_config(resolved["out"], resolved)

    speeds = [float(np.max(np.linalg.norm(s.v, axis=1))) for s in dataset.snapshots]
    bound = space.e_max if space is not None else float("inf")
    print(f"wrote {resolved['out']}: {dataset.n_realizations} realizations, "
          f"{len(dataset.snapshots)} snapshots, "
          f"{len(dataset.snapshots) * sim.n_agents} configurations")
    print(f"speed check: max |v| = {max(speeds):.6g}"
          + (f" <= e_max = {bound:.6g}" if np.isfinite(bound) else ""))
    return 0


def cmd_infer(args) -> int:
    config = _load_config(args.config)
    resolved = _merge(config, args, {
        "data": None, "functional": "sigma", "out": "payoff.json", "report": None,
        "lambda1": 1e-6, "lambda2": 1e-6, "eps": 1.0, "j1_nodes": 30, "j2_nodes": None,
        "max_iter": 500, "tol": 1e-6, "memory": 10, "points": None,
    })
    if not resolved["data"]:
        raise ConfigError("--data is required")
    dataset = TrajectoryDataset.load(resolved["data"])
    functional = resolved["functional"].replace("-", "_")

    space = None
    if resolved["points"] is not None:
        pts = resolved["points"]
        space = StrategySpace(_parse_points(pts) if isinstance(pts, str) else np.asarray(pts))

    if functional == "pedestrian_velocity":
        space = space or StrategySpace(np.array([[-2.0], [2.0]]))
        model = pedestrian_model_from_dataset(
            dataset, space, int(resolved["j1_nodes"]),
            int(resolved["j2_nodes"] or 20),
        )
    elif functional == "differential":
        model = full_pair_model_from_dataset(dataset, space, nodes=int(resolved["j1_nodes"]))
    else:
        j2 = resolved["j2_nodes"]
        model = split_model_from_dataset(dataset, space, int(resolved["j1_nodes"]),
                                         int(j2) if j2 else None)

    problem = InferenceProblem(
        dataset, model, functional,
        lambda1=float(resolved["lambda1"]), lambda2=float(resolved["lambda2"]),
        eps=float(resolved["eps"]), max_iterations=int(resolved["max_iter"]),
        tolerance=float(resolved["tol"]), memory=int(resolved["memory"]),
    )
    report = minimize(problem)
    fitted = report.model
    if functional == "differential":
        fitted = gauge_normalize_full_pair(fitted)
    save_payoff(fitted, resolved["out"])
    _echo_config(resolved["out"], resolved)
    report_path = resolved["report"] or f"{resolved['out']}.report.json"
    with open(report_path, "w") as fh:
        fh.write(dumps_canonical(report.to_json_obj()))
        fh.write("\n")
    print(f"wrote {resolved['out']}: status={report.status}, iterations={report.iterations}, "
          f"data term={report.final_data_term:.6e}, grad norm={report.grad_norm:.3e}")
    if report.status == "line_search_failed":
        print("optimizer stopped on a failed line search; best iterate retained",
              file=sys.stderr)
        return EXIT_OPTIMIZER
    return 0


def cmd_reconstruct(args) -> int:
    config = _load_config(args.config)
    resolved = _merge(config, args, {
        "data": None, "out": "reconstructed.ndjson", "points": "-1,1", "eps": 1.0,
    })
    if not resolved["data"]:
        raise ConfigError("--data is required")
    dataset = TrajectoryDataset.load(resolved["data"])
    pts = resolved["points"]
    space = StrategySpace(_parse_points(pts) if isinstance(pts, str) else np.asarray(pts))
    try:
        out = attach_reconstructed_strategies(dataset, space, float(resolved["eps"]))
    except HullError as exc:
        print(f"reconstruction failed: {exc}", file=sys.stderr)
        return EXIT_HULL
    residual = out.validate()
    out.save(resolved["out"])
    _echo_config(resolved["out"], resolved)
    print(f"wrote {resolved['out']}: worst velocity residual {residual:.3e}")
    return 0


def cmd_rollout(args) -> int:
    config = _load_config(args.config)
    resolved = _merge(config, args, {
        "payoff": None, "initials": None, "out": "rollout.ndjson", "dt": None,
        "steps": 10, "subsample": 2, "seed": 0, "eps": 1.0, "threads": None,
        "realizations": None,
    })
    if not resolved["payoff"]:
        raise ConfigError("--payoff is required")
    if not resolved["initials"]:
        raise ConfigError("--initials (a dataset file) is required")
    payoff = _payoff_from_spec(resolved["payoff"])
    source = TrajectoryDataset.load(resolved["initials"])

    if resolved["dt"] is None:
        resolved["dt"] = float(source.meta.get("dt", 0.02))
    limit = int(resolved["realizations"]) if resolved["realizations"] else None

    if getattr(payoff, "variant", None) == "pedestrian":
        runs = list(source.realizations())[:limit]
        init = {
            "kind": "explicit_pedestrian",
            "positions": np.stack([run[0].x for run in runs]),
            "theta": np.stack([run[0].theta for run in runs]),
            "theta_bar": np.stack([run[0].theta_bar for run in runs]),
        }
        sim = SimConfig(
            model="pedestrian_game", n_agents=runs[0][0].x.shape[0],
            dt=float(resolved["dt"]), steps=int(resolved["steps"]),
            subsample=int(resolved["subsample"]), realizations=len(runs),
            seed=int(resolved["seed"]), eps=float(resolved["eps"]), init=init,
        )
        dataset = run_simulation(sim, payoff, threads=resolve_threads(resolved["threads"]))
        dataset.save(resolved["out"])
        _echo_config(resolved["out"], resolved)
        print(f"wrote {resolved['out']}: {dataset.n_realizations} realizations, "
              f"{len(dataset.snapshots)} snapshots")
        return 0

    initials = source.initial_positions()[:limit]
    sim = SimConfig(
        model="fast_reaction", n_agents=initials.shape[1], dt=float(resolved["dt"]),
        steps=int(resolved["steps"]), subsample=int(resolved["subsample"]),
        realizations=initials.shape[0], seed=int(resolved["seed"]),
        eps=float(resolved["eps"]),
        init={"kind": "explicit", "positions": initials},
    )
    dataset = run_simulation(sim, payoff, threads=resolve_threads(resolved["threads"]))
    dataset.save(resolved["out"])
    _echo_config(resolved["out"], resolved)
    print(f"wrote {resolved['out']}: {dataset.n_realizations} realizations, "
          f"{len(dataset.snapshots)} snapshots")
    return 0


def cmd_validate(args) -> int:
    config = _load_config(args.config)
    resolved = _merge(config, args, {"task": None, "out": "validation.csv", "seed": 0})
    if not resolved["task"]:
        raise ConfigError("--task is required")
    rows = validation.run_task(resolved["task"], seed=int(resolved["seed"]))
    with open(resolved["out"], "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["task", "metric", "value", "threshold", "pass"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    _echo_config(resolved["out"], resolved)
    failures = [row for row in rows if not row["pass"]]
    for row in rows:
        print(f"{row['task']},{row['metric']},{row['value']:.6g},{row['threshold']},{row['pass']}")
    if failures:
        print(f"{len(failures)} validation rows failed", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evogame",
                                     description="entropic game simulation and payoff inference")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a trajectory dataset")
    sim.add_argument("--config")
    sim.add_argument("--out")
    sim.add_argument("--model")
    sim.add_argument("--payoff", help="builtin:NAME or a payoff JSON file")
    sim.add_argument("--n", type=int)
    sim.add_argument("--realizations", type=int)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--steps", type=int)
    sim.add_argument("--subsample", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--eps", type=float)
    sim.add_argument("--lam", "--lambda", dest="lam", type=float)
    sim.add_argument("--init-low", dest="init_low", type=_parse_floats)
    sim.add_argument("--init-high", dest="init_high", type=_parse_floats)
    sim.add_argument("--threads", type=int)
    sim.set_defaults(func=cmd_simulate, record_strategies=None)

    inf = sub.add_parser("infer", help="fit a payoff to a dataset")
    inf.add_argument("--config")
    inf.add_argument("--data")
    inf.add_argument("--out")
    inf.add_argument("--report")
    inf.add_argument("--functional",
                     choices=["sigma", "velocity", "differential", "pedestrian-velocity",
                              "pedestrian_velocity"])
    inf.add_argument("--lambda1", type=float)
    inf.add_argument("--lambda2", type=float)
    inf.add_argument("--eps", type=float)
    inf.add_argument("--j1-nodes", dest="j1_nodes", type=int)
    inf.add_argument("--j2-nodes", dest="j2_nodes", type=int)
    inf.add_argument("--max-iter", dest="max_iter", type=int)
    inf.add_argument("--tol", type=float)
    inf.add_argument("--memory", type=int)
    inf.add_argument("--points", help="strategy points, e.g. '-1,1' or '1,1;-1,1'")
    inf.set_defaults(func=cmd_infer)

    rec = sub.add_parser("reconstruct", help="attach mixed strategies to velocities")
    rec.add_argument("--config")
    rec.add_argument("--data")
    rec.add_argument("--out")
    rec.add_argument("--points")
    rec.add_argument("--eps", type=float)
    rec.set_defaults(func=cmd_reconstruct)

    roll = sub.add_parser("rollout", help="simulate a fitted payoff from stored initials")
    roll.add_argument("--config")
    roll.add_argument("--payoff")
    roll.add_argument("--initials")
    roll.add_argument("--out")
    roll.add_argument("--dt", type=float)
    roll.add_argument("--steps", type=int)
    roll.add_argument("--subsample", type=int)
    roll.add_argument("--seed", type=int)
    roll.add_argument("--eps", type=float)
    roll.add_argument("--realizations", type=int)
    roll.add_argument("--threads", type=int)
    roll.set_defaults(func=cmd_rollout)

    val = sub.add_parser("validate", help="run a diagnostic suite and write a CSV table")
    val.add_argument("--config")
    val.add_argument("--task", choices=list(validation.TASKS))
    val.add_argument("--out")
    val.add_argument("--seed", type=int)
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"integrator error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR


if __name__ == "__main__":
    sys.exit(main())
