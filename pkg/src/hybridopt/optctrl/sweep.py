"""Value-function sweeps over initial state, horizon and perturbation size."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..hysys import SolverConfig
from ..models import BallParams, ThermoParams
from .ball import OptimizerConfig, solve_ball
from .mayer import OptimalSolution
from .thermostat import solve_thermostat


@dataclass(frozen=True)
class SweepPoint:
    xi: tuple[float, ...]
    T: float
    J: int
    delta: float = 0.0


@dataclass
class SweepRow:
    point: SweepPoint
    h: float
    decisions: np.ndarray
    error: str | None = None
    solution: OptimalSolution | None = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.h)


@dataclass
class BallFamily:
    params: BallParams
    V: object = None
    L_D: object = None
    X: object = None
    opt: OptimizerConfig = field(default_factory=OptimizerConfig)
    rho: object = None

    def solve(self, xi, T, J, delta=0.0, cfg=None):
        return solve_ball(self.params, xi, T, J, X=self.X, V=self.V, L_D=self.L_D, cfg=cfg,
                          opt=self.opt, delta=delta, rho=self.rho)


@dataclass
class ThermostatFamily:
    params: ThermoParams
    opt: OptimizerConfig = field(default_factory=OptimizerConfig)

    def solve(self, xi, T, J, delta=0.0, cfg=None):
        if delta:
            raise NotImplementedError("perturbed thermostat sweeps are not supported")
        return solve_thermostat(self.params, xi, T, J, cfg=cfg, opt=self.opt)


def _row(family, pt: SweepPoint, cfg, keep):
    try:
        sol = family.solve(pt.xi, pt.T, pt.J, delta=pt.delta, cfg=cfg)
    except Exception as exc:  # recorded per row, the sweep carries on
        return SweepRow(pt, math.inf, np.zeros(0), f"{type(exc).__name__}: {exc}")
    return SweepRow(pt, sol.cost, sol.decisions, None, sol if keep else None)


def value_sweep(family, grid, cfg: SolverConfig | None = None, threads: int = 1,
                keep_solutions: bool = False) -> list[SweepRow]:
    """Solve at every grid point; rows come back in grid order."""
    pts = [p if isinstance(p, SweepPoint) else SweepPoint(tuple(map(float, p[0])), float(p[1]),
                                                           int(p[2]), float(p[3]) if len(p) > 3 else 0.0)
           for p in grid]
    if not pts:
        raise ValueError("sweep grid is empty")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda p: _row(family, p, cfg, keep_solutions), pts))
    return [_row(family, p, cfg, keep_solutions) for p in pts]


def sweep_to_csv(rows: list[SweepRow]) -> str:
    n = max(len(r.point.xi) for r in rows)
    jmax = max([r.point.J for r in rows] + [0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"xi_{i + 1}" for i in range(n)] + ["T", "J", "delta", "feasible", "h"]
               + [f"d_{i + 1}" for i in range(jmax)])
    for r in rows:
        d = [repr(float(v)) for v in r.decisions] if r.feasible else []
        d += [""] * (jmax - len(d))
        w.writerow([repr(float(v)) for v in r.point.xi]
                   + [repr(r.point.T), r.point.J, repr(r.point.delta), int(r.feasible),
                      repr(float(r.h)) if r.feasible else "inf"] + d)
    return buf.getvalue()
