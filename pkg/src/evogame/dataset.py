"""Trajectory datasets: time-stamped ensemble snapshots with NDJSON persistence.

File layout: first line is the metadata object, every further line is one
snapshot ``{"r": realization, "t": time, "x": [[..]], "v": [[..]], ...}`` with
optional ``sigma`` (mixed strategies) and ``theta``/``theta_bar`` (pedestrian
headings).  Floats carry 17 significant digits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .serialize import dumps_canonical
from .strategy import StrategySpace, check_density, strategy_velocity

CONSISTENCY_TOL = 1e-10


@dataclass
class Snapshot:
    realization: int
    t: float
    x: np.ndarray                      # (N, d)
    v: np.ndarray                      # (N, d)
    sigma: Optional[np.ndarray] = None  # (N, K)
    theta: Optional[np.ndarray] = None  # (N,)
    theta_bar: Optional[np.ndarray] = None

    def to_json_obj(self) -> dict:
        doc = {"r": self.realization, "t": self.t, "x": self.x, "v": self.v}
        if self.sigma is not None:
            doc["sigma"] = self.sigma
        if self.theta is not None:
            doc["theta"] = self.theta
            doc["theta_bar"] = self.theta_bar
        return doc

    @classmethod
    def from_json_obj(cls, doc: dict) -> "Snapshot":
        def arr(key):
            return np.asarray(doc[key], dtype=float) if key in doc else None

        return cls(int(doc["r"]), float(doc["t"]), arr("x"), arr("v"),
                   arr("sigma"), arr("theta"), arr("theta_bar"))


@dataclass
class TrajectoryDataset:
    meta: dict
    snapshots: list[Snapshot] = field(default_factory=list)

    @property
    def has_strategies(self) -> bool:
        return bool(self.snapshots) and self.snapshots[0].sigma is not None

    @property
    def has_headings(self) -> bool:
        return bool(self.snapshots) and self.snapshots[0].theta is not None

    @property
    def n_realizations(self) -> int:
        return len({s.realization for s in self.snapshots})

    def realization(self, r: int) -> list[Snapshot]:
        out = [s for s in self.snapshots if s.realization == r]
        out.sort(key=lambda s: s.t)
        return out

    def realizations(self) -> Iterator[list[Snapshot]]:
        for r in sorted({s.realization for s in self.snapshots}):
            yield self.realization(r)

    def initial_positions(self) -> np.ndarray:
        """(R, N, d) array of the first recorded configuration per realization."""
        return np.stack([run[0].x for run in self.realizations()])

    def strategy_space(self) -> StrategySpace:
        points = self.meta.get("strategy_points")
        if points is None:
            raise ValueError("this dataset does not record a strategy space")
        return StrategySpace(np.asarray(points, dtype=float))

    def validate(self) -> float:
        """Check snapshot ordering, density normalization and velocity consistency.

        Returns the worst velocity residual against the recorded strategies.
        """
        worst = 0.0
        space = self.strategy_space() if self.meta.get("strategy_points") is not None else None
        for run in self.realizations():
            times = [s.t for s in run]
            if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
                raise ValueError("snapshot times must be strictly increasing")
            for snap in run:
                if snap.sigma is None or space is None:
                    continue
                for i in range(snap.x.shape[0]):
                    check_density(snap.sigma[i])
                    resid = np.linalg.norm(
                        snap.v[i] - strategy_velocity(snap.x[i], snap.sigma[i], space)
                    )
                    worst = max(worst, float(resid))
        if worst > CONSISTENCY_TOL:
            raise ValueError(
                f"recorded velocities deviate from strategy-implied velocities by {worst:.3e}"
            )
        return worst

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(dumps_canonical(self.meta))
            fh.write("\n")
            for snap in self.snapshots:
                fh.write(dumps_canonical(snap.to_json_obj()))
                fh.write("\n")

    @classmethod
    def load(cls, path) -> "TrajectoryDataset":
        with open(path) as fh:
            lines = [line for line in fh.read().splitlines() if line.strip()]
        if not lines:
            raise ValueError(f"dataset file {path!r} is empty")
        meta = json.loads(lines[0])
        snapshots = [Snapshot.from_json_obj(json.loads(line)) for line in lines[1:]]
        return cls(meta, snapshots)
