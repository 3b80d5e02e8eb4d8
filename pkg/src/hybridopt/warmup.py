"""Compile every jitted kernel the built-in plants use.

Kernels that take jitted functions as arguments cannot be loaded from numba's
disk cache, so each process pays their compilation on first use. Calling
:func:`warmup` once up front moves that cost out of timed regions.
"""

from __future__ import annotations

import time

import numpy as np

from ._accel import USE_NUMBA
from .closeness import is_close
from .hysys import JumpCommand, SolverConfig, augment_mayer, rho_perturb, simulate
from .models import BallParams, ThermoParams, ball_system
from .optctrl import ball_problem, eval_cost, schedule_cost, solve_ball, thermostat_problem


def warmup() -> float:
    """Run tiny instances of each compiled path; returns the seconds spent."""
    t0 = time.perf_counter()
    if not USE_NUMBA:
        return 0.0
    cfg = SolverConfig(h=0.05)
    ball, thermo = BallParams(), ThermoParams()

    prob = ball_problem(ball, (1.0, 0.0), 1.0, 1)
    cmds = [JumpCommand.forced(3.0)]
    arc, _ = simulate(prob.sys, prob.x0, cmds, (1.0, 1), cfg)
    simulate(augment_mayer(prob), np.append(prob.x0, 0.0), cmds, (1.0, 1), cfg)
    eval_cost(prob, arc, [3.0])
    is_close(arc, arc, 1.0, 0.1)
    simulate(rho_perturb(ball_system(ball), 0.1, 1.0), prob.x0, cmds, (1.0, 1), cfg)
    solve_ball(ball, (1.0, 0.0), 1.0, 1)

    prob = thermostat_problem(thermo, (20.0, 0.0), 1.0, 1)
    cmds = [JumpCommand.at(0.5)]
    arc, _ = simulate(prob.sys, prob.x0, cmds, (1.0, 1), cfg)
    simulate(augment_mayer(prob), np.append(prob.x0, 0.0), cmds, (1.0, 1), cfg)
    eval_cost(prob, arc, [None])
    schedule_cost(thermo, (20.0, 0.0), 1.0, [0.5])
    return time.perf_counter() - t0
