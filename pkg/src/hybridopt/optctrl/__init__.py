"""Hybrid optimal control: cost functional, example solvers and sweeps."""

from .ball import (OptimizerConfig, ball_feasible_window, ball_jump_times, ball_problem,
                   solve_ball, solve_ball_perturbed)
from .mayer import (HorizonMismatch, Infeasible, InfeasibleTerminal, InvalidInitialMode,
                    MayerProblem, NegativeHeight, OptimalSolution, SolverError, eval_cost)
from .nelder_mead import nelder_mead
from .sweep import BallFamily, SweepPoint, SweepRow, ThermostatFamily, sweep_to_csv, value_sweep
from .thermostat import schedule_cost, solve_thermostat, thermostat_problem

__all__ = [
    "BallFamily", "HorizonMismatch", "Infeasible", "InfeasibleTerminal", "InvalidInitialMode",
    "MayerProblem", "NegativeHeight", "OptimalSolution", "OptimizerConfig", "SolverError",
    "SweepPoint", "SweepRow", "ThermostatFamily", "ball_feasible_window", "ball_jump_times",
    "ball_problem", "eval_cost", "nelder_mead", "schedule_cost", "solve_ball",
    "solve_ball_perturbed", "solve_thermostat", "sweep_to_csv", "thermostat_problem",
    "value_sweep",
]
