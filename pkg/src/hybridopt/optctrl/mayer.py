"""Mayer-form problems and the cost functional of a solution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.integrate import simpson

from ..hysys import HybridSystem, SimStatus
from ..hytime import HybridArc


class SolverError(RuntimeError):
    pass


class Infeasible(SolverError):
    pass


class HorizonMismatch(ValueError):
    pass


class InfeasibleTerminal(ValueError):
    pass


class InvalidInitialMode(ValueError):
    pass


class NegativeHeight(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MayerProblem:
    """Fixed initial state, fixed hybrid horizon ``(T, J)``, terminal set ``X``.

    ``stage_flow_kernel`` optionally carries a jitted ``(lc(x, theta), theta)``
    twin of ``stage_flow`` so the augmented system can use the compiled flow.
    With ``batched_flow_cost`` set, ``stage_flow`` also accepts an ``(m, n)``
    array of states and returns ``m`` costs.
    """

    sys: HybridSystem
    x0: np.ndarray
    T: float
    J: int
    stage_flow: Callable[[np.ndarray], float]
    stage_jump: Callable[[np.ndarray, Any], float]
    terminal: Callable[[np.ndarray], float]
    terminal_set: Callable[[np.ndarray], bool] | None = None
    stage_flow_kernel: tuple[Callable, np.ndarray] | None = None
    batched_flow_cost: bool = False

    def __post_init__(self):
        if self.T < 0 or self.J < 0:
            raise ValueError("horizon must satisfy T >= 0, J >= 0")
        object.__setattr__(self, "x0", np.array(self.x0, dtype=float).reshape(-1))
        if self.x0.size != self.sys.n:
            raise ValueError("x0 dimension does not match the system")

    @property
    def horizon(self) -> tuple[float, int]:
        return (self.T, self.J)


@dataclass
class OptimalSolution:
    arc: HybridArc | None
    decisions: np.ndarray
    cost: float
    optimizer_trace: list[tuple[int, float]] = field(default_factory=list)
    status: SimStatus | None = None
    extra: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.cost)


def eval_cost(prob: MayerProblem, arc: HybridArc, decisions, time_tol: float = 1e-9) -> float:
    """Flow cost (Simpson per segment) + jump costs + terminal cost.

    ``decisions`` holds the jump parameter of each of the ``J`` jumps (``None``
    entries fall back to the system default). Arcs of the augmented system are
    accepted; only the first ``prob.sys.n`` coordinates are used.
    """
    if arc.J != prob.J or abs(arc.T - prob.T) > time_tol:
        raise HorizonMismatch(f"arc ends at ({arc.T}, {arc.J}), problem horizon {prob.horizon}")
    n = prob.sys.n
    params = list(decisions) if decisions is not None else [None] * prob.J
    if len(params) != prob.J:
        raise ValueError(f"need {prob.J} jump parameters, got {len(params)}")
    total = 0.0
    for ts, xs in arc.segments:
        if ts.size >= 2:
            if prob.batched_flow_cost:
                vals = np.asarray(prob.stage_flow(xs[:, :n]), dtype=float).reshape(-1)
            else:
                vals = np.array([prob.stage_flow(x[:n]) for x in xs])
            total += float(simpson(vals, x=ts))
    for x, p in zip(arc.pre_jump_states(), params):
        total += float(prob.stage_jump(x[:n], prob.sys.default_param if p is None else p))
    xf = arc.final_state()[:n]
    if prob.terminal_set is not None and not prob.terminal_set(xf):
        raise InfeasibleTerminal(f"terminal state {xf} outside X")
    return total + float(prob.terminal(xf))
