"""Sampled reachable sets and containment under perturbation.

A reachable set here is a finite point cloud: one terminal state per decision
tuple whose simulated solution attains the hybrid time ``(T, J)`` exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .hysys import (HybridSystem, InvalidInitialCondition, JumpCommand, PerturbedParam,
                    SimulationError, SolverConfig, Trigger, simulate)


class EmptySample(ValueError):
    pass


@dataclass
class ReachSample:
    terminal_states: np.ndarray
    decisions: list[tuple]
    T: float | list[float] = 0.0
    J: int = 0
    # decision tuples whose solution missed (T, J); kept for the CSV
    missed: list[tuple] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return len(self.decisions) > 0

    @property
    def n(self) -> int:
        return self.terminal_states.shape[1]


@dataclass
class ContainmentReport:
    distances: np.ndarray
    slack: float
    passed: bool
    max_distance: float = field(init=False)

    def __post_init__(self):
        self.max_distance = float(self.distances.max()) if self.distances.size else 0.0


def _hashable(param):
    if isinstance(param, PerturbedParam):
        def vec(w):
            return None if w is None else tuple(float(v) for v in np.ravel(w))
        return (float(param.p), vec(param.w_in), vec(param.w_out))
    return param


def _key(cmds) -> tuple:
    out = []
    for c in cmds:
        if c.trigger is Trigger.AT:
            out.append((c.time, _hashable(c.param)))
        else:
            out.append(_hashable(c.param))
    return tuple(out)


def _commands(entry, mode: str):
    entry = list(entry)
    if entry and isinstance(entry[0], JumpCommand):
        return entry
    if mode == "forced":
        return [JumpCommand.forced(p) for p in entry]
    if mode == "at":
        return [JumpCommand.at(t) for t in entry]
    raise ValueError(f"unknown command mode {mode!r}")


def _sort_key(item):
    """Order decisions numerically; perturbed parameters sort by their repr."""
    def norm(v):
        if isinstance(v, (int, float, np.floating)):
            return (0, float(v), "")
        if isinstance(v, tuple):
            return (1, 0.0, repr(tuple(norm(u) for u in v)))
        return (2, 0.0, repr(v))
    return tuple(norm(v) for v in item[0])


def reach_sample(sys: HybridSystem, x0, T, J, param_grid, cfg: SolverConfig | None = None,
                 mode: str = "forced") -> ReachSample:
    """Terminal states at ``(T, J)`` over a grid of decision tuples.

    ``mode="forced"`` reads each entry as jump parameters applied on impact;
    ``mode="at"`` reads it as jump times. Entries may also be lists of
    :class:`JumpCommand` directly.
    """
    cfg = cfg or SolverConfig()
    x0 = np.array(x0, dtype=float)
    if not (sys.flow_set(x0) or sys.jump_set(x0)):
        raise InvalidInitialCondition(f"x0 = {x0} is in neither C nor D")
    found, missed = [], []
    grid = [()] if J == 0 and not len(param_grid) else param_grid
    for entry in grid:
        cmds = _commands(entry, mode)
        try:
            arc, status = simulate(sys, x0, cmds, (T, J), cfg)
        except SimulationError:
            missed.append(_key(cmds))
            continue
        if status.reached:
            found.append((_key(cmds), arc.final_state()))
        else:
            missed.append(_key(cmds))
    # identical decision tuples give identical states; keep the first
    uniq = {}
    for k, x in found:
        uniq.setdefault(k, x)
    items = sorted(uniq.items(), key=_sort_key)
    states = np.array([x for _, x in items]).reshape(-1, sys.n)
    missed = [k for k, _ in sorted(((k, None) for k in set(missed) - set(uniq)), key=_sort_key)]
    return ReachSample(states, [k for k, _ in items], float(T), int(J), missed)


def reach_interval(sys: HybridSystem, x0, T_lo, T_hi, J, param_grid, time_grid,
                   cfg: SolverConfig | None = None, mode: str = "forced") -> ReachSample:
    """Union of :func:`reach_sample` over ``time_grid`` restricted to ``[T_lo, T_hi]``."""
    if T_lo > T_hi:
        raise ValueError("need T_lo <= T_hi")
    times = sorted({float(t) for t in time_grid if T_lo <= t <= T_hi} or {float(T_lo)})
    states, decisions, missed = [], [], []
    for t in times:
        r = reach_sample(sys, x0, t, J, param_grid, cfg, mode)
        states.append(r.terminal_states)
        decisions.extend((t,) + d for d in r.decisions)
        missed.extend((t,) + d for d in r.missed)
    return ReachSample(np.vstack(states), decisions, times, int(J), missed)


def containment_check(nominal: ReachSample, perturbed: ReachSample, slack: float) -> ContainmentReport:
    """Distance from every nominal point to the nearest perturbed point."""
    if not nominal.feasible or not perturbed.feasible:
        raise EmptySample("containment needs two nonempty samples")
    if nominal.n != perturbed.n:
        raise ValueError("samples live in different dimensions")
    a, b = nominal.terminal_states, perturbed.terminal_states
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)).min(axis=1)
    return ContainmentReport(d, float(slack), bool(np.all(d <= slack)))


def reach_to_csv(sample: ReachSample, J: int | None = None) -> str:
    J = sample.J if J is None else J
    width = max([len(d) for d in sample.decisions + sample.missed] + [J])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"decision_{i + 1}" for i in range(width)]
               + [f"x_{i + 1}" for i in range(sample.terminal_states.shape[1])] + ["attained"])
    for d, x in zip(sample.decisions, sample.terminal_states):
        cells = [repr(v) if isinstance(v, float) else str(v) for v in d]
        cells += [""] * (width - len(cells))
        w.writerow(cells + [repr(float(v)) for v in x] + [1])
    for d in sample.missed:
        cells = [repr(v) if isinstance(v, float) else str(v) for v in d]
        cells += [""] * (width - len(cells))
        w.writerow(cells + [""] * sample.terminal_states.shape[1] + [0])
    return buf.getvalue()

