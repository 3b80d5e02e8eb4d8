"""Optimal heater switching times for the thermostat.

Flows are closed form, ``z(t) = a + (z_j - a) exp(-(t - t_j))`` with
``a = z_o + z_delta * q``, so a schedule's cost only needs quadrature of the
band cost along exponentials.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .. import kernels
from ..hysys import JumpCommand, SolverConfig, simulate
from ..models import ThermoParams, thermo_band_cost, thermostat_switch_cost, thermostat_system
from .ball import OptimizerConfig, _lex_better
from .mayer import Infeasible, InvalidInitialMode, MayerProblem, OptimalSolution
from .nelder_mead import nelder_mead


def thermostat_problem(params: ThermoParams, xi, T, J, band_tol: float = 1e-9) -> MayerProblem:
    lo, hi = params.z_min, params.z_max

    def L_C(x):
        x = np.asarray(x, dtype=float)
        cost = kernels.band_cost(x[..., 0], lo, hi)
        return float(cost) if x.ndim == 1 else cost

    return MayerProblem(
        sys=thermostat_system(params), x0=xi, T=T, J=J,
        stage_flow=L_C,
        stage_jump=lambda x, p: thermostat_switch_cost(params, x[1]),
        terminal=L_C,
        terminal_set=lambda x: bool(lo - band_tol <= x[0] <= hi + band_tol),
        stage_flow_kernel=(thermo_band_cost, np.array([lo, hi])),
        batched_flow_cost=True,
    )


def schedule_cost(params: ThermoParams, xi, T, times, dt: float = 1e-3) -> float:
    """Cost of switching at the sorted ``times``; ``inf`` if ``z(T)`` misses the band."""
    p = params
    cost, _ = kernels.thermo_cost(np.asarray(times, dtype=float), float(xi[0]), float(xi[1]),
                                  float(T), p.z_o, p.z_delta, p.z_min, p.z_max, p.c_on, p.c_off, dt)
    return float(cost)


def simplex_grid(T: float, J: int, points: int) -> np.ndarray:
    """Sorted rows of the uniform ``points^J`` grid on ``[0, T]^J``, deduplicated."""
    axis = np.linspace(0.0, T, points)
    rows = np.sort(np.array(list(itertools.product(axis, repeat=J))).reshape(-1, J), axis=1)
    return np.unique(rows, axis=0)


def solve_thermostat(params: ThermoParams, xi, T, J, cfg: SolverConfig | None = None,
                     opt: OptimizerConfig | None = None) -> OptimalSolution:
    """Minimize over switch times ``0 <= t_1 <= ... <= t_J <= T``."""
    cfg = cfg or SolverConfig()
    opt = opt or OptimizerConfig()
    xi = np.array(xi, dtype=float)
    if xi[1] not in (0.0, 1.0):
        raise InvalidInitialMode(f"heater mode must be 0 or 1, got {xi[1]}")
    T = float(T)

    def f(times):
        return schedule_cost(params, xi, T, np.sort(np.clip(times, 0.0, T)), opt.simpson_dt)

    if J == 0:
        best, h, trace = np.zeros(0), f(np.zeros(0)), []
    else:
        grid = simplex_grid(T, J, opt.grid_points)
        costs = np.array([f(row) for row in grid])
        k = int(np.argmin(costs))
        best, h = grid[k], float(costs[k])
        trace = [(0, h)]
        if math.isfinite(h) and T > 0:
            res = nelder_mead(f, best, T / max(opt.grid_points - 1, 1), tol=opt.nm_tol,
                              max_iter=opt.max_iter)
            x = np.sort(np.clip(res.x, 0.0, T))
            trace = res.trace
            if _lex_better(x, res.fx, best, h):
                best, h = x, res.fx
    if not math.isfinite(h):
        raise Infeasible(f"no {J}-switch schedule ends inside [{params.z_min}, {params.z_max}]")
    arc, status = simulate(thermostat_system(params), xi, [JumpCommand.at(t) for t in best],
                           (T, J), cfg)
    return OptimalSolution(arc=arc, decisions=np.asarray(best, dtype=float), cost=h,
                           optimizer_trace=trace, status=status)
