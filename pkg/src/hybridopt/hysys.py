"""Hybrid system data and the flow/jump simulator.

A system is ``(C, F, D, G)`` with single-valued selections: ``F(x)`` on the
flow set and ``G(x, p)`` on the jump set, where the jump parameter ``p`` ranges
over a closed interval. Set-valued behaviour enters through the parameter and
through the command list handed to :func:`simulate`.
"""

from __future__ import annotations

import enum
import functools
import itertools
import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from . import kernels
from ._accel import USE_NUMBA, jit
from .hytime import HybridArc

log = logging.getLogger(__name__)


class SimulationError(ValueError):
    pass


class InvalidInitialCondition(SimulationError):
    pass


class CommandOutsideD(SimulationError):
    pass


class NotInJumpSet(SimulationError):
    pass


class ParamOutOfRange(SimulationError):
    pass


class InvalidDelta(ValueError):
    pass


class FlowKernel(NamedTuple):
    """Jitted twins of the flow map and flow set: ``f(x, theta)``, ``c(x, theta)``."""

    f: Callable
    c: Callable
    theta: np.ndarray


@dataclass(frozen=True, eq=False)
class HybridSystem:
    n: int
    flow_set: Callable[[np.ndarray], bool]
    flow_map: Callable[[np.ndarray], np.ndarray]
    jump_set: Callable[[np.ndarray], bool]
    jump_map: Callable[[np.ndarray, Any], np.ndarray]
    param_domain: tuple[float, float] = (0.0, 0.0)
    name: str = ""
    kernel: FlowKernel | None = None

    @property
    def default_param(self) -> float:
        return self.param_domain[0]

    def param_ok(self, param) -> bool:
        p = base_param(param)
        lo, hi = self.param_domain
        return lo - 1e-12 <= p <= hi + 1e-12


class PerturbedParam(NamedTuple):
    """Jump parameter for a rho-perturbed system.

    ``w_in`` and ``w_out`` are offsets in units of ``delta * rho`` (norm <= 1):
    the nominal jump map is applied at ``x + w_in`` and its output is shifted by
    ``w_out``. ``w_in=None`` picks the smallest sampled offset landing in ``D``.
    """

    p: float
    w_in: np.ndarray | None = None
    w_out: np.ndarray | None = None


def base_param(param):
    if param is None:
        return 0.0
    if isinstance(param, PerturbedParam):
        return param.p
    return float(param)


class Trigger(enum.Enum):
    FORCED = "forced"
    AT = "at"


@dataclass(frozen=True)
class JumpCommand:
    trigger: Trigger
    param: Any = None
    time: float | None = None

    @classmethod
    def forced(cls, param=None) -> "JumpCommand":
        return cls(Trigger.FORCED, param)

    @classmethod
    def at(cls, time: float, param=None) -> "JumpCommand":
        return cls(Trigger.AT, param, float(time))


class Priority(enum.Enum):
    FLOW = "flow"
    JUMP = "jump"


@dataclass(frozen=True)
class SolverConfig:
    h: float = 1e-3
    event_tol: float = 1e-10
    state_tol: float = 1e-7
    max_jumps: int = 1000
    escape_bound: float = 1e9
    priority: Priority = Priority.FLOW
    # an exit from C this close to the target time counts as reaching it;
    # bisection bias of up to event_tol per event accumulates across jumps
    horizon_tol: float = 1e-9

    def __post_init__(self):
        if not self.h > 0 or not self.event_tol > 0 or self.event_tol > self.h:
            raise ValueError("need h > 0 and 0 < event_tol <= h")
        if not 0 <= self.horizon_tol < self.h:
            raise ValueError("need 0 <= horizon_tol < h")


class Outcome(enum.Enum):
    HORIZON_REACHED = "HorizonReached"
    LEFT_C_UNION_D = "LeftCUnionD"
    ESCAPE_DETECTED = "EscapeDetected"
    MAX_JUMPS_HIT = "MaxJumpsHit"
    # ordinary time ran out with fewer than J jumps
    TIME_EXHAUSTED = "TimeExhausted"


@dataclass(frozen=True)
class SimStatus:
    outcome: Outcome
    final_time: tuple[float, int]

    @property
    def reached(self) -> bool:
        return self.outcome is Outcome.HORIZON_REACHED


def _as_state(x) -> np.ndarray:
    return np.array(x, dtype=float).reshape(-1)


def apply_jump(sys: HybridSystem, x, param=None) -> np.ndarray:
    x = _as_state(x)
    if not sys.jump_set(x):
        raise NotInJumpSet(f"{sys.name or 'system'}: state {x} is not in D")
    if param is None:
        param = sys.default_param
    if not sys.param_ok(param):
        raise ParamOutOfRange(f"parameter {base_param(param)} outside {sys.param_domain}")
    return _as_state(sys.jump_map(x, param))


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def _python_kernel(sys: HybridSystem, stop_in_d: bool):
    def f(x, theta):
        return _as_state(sys.flow_map(x))

    if stop_in_d:
        def c(x, theta):
            return bool(sys.flow_set(x)) and not sys.jump_set(x)
    else:
        def c(x, theta):
            return bool(sys.flow_set(x))
    return f, c, np.zeros(0)


class _Builder:
    def __init__(self, t0, x0):
        self.segments = []
        self.ts = [np.array([t0])]
        self.xs = [x0[None, :]]

    @property
    def t(self):
        return float(self.ts[-1][-1])

    @property
    def x(self):
        return self.xs[-1][-1]

    def extend(self, ts, xs):
        if ts.size:
            self.ts.append(ts)
            self.xs.append(xs)

    def snap_end(self, t):
        """Move the last sample's time to ``t`` (within event resolution)."""
        if sum(a.size for a in self.ts) == 1:
            # the only sample is the jump instant itself, keep it and add one
            self.extend(np.array([t]), self.x[None, :])
            return
        last = self.ts[-1].copy()
        last[-1] = t
        self.ts[-1] = last

    def jump(self, x_new):
        t = self.t
        self.segments.append((np.concatenate(self.ts), np.concatenate(self.xs)))
        self.ts = [np.array([t])]
        self.xs = [x_new[None, :]]

    def arc(self):
        segs = self.segments + [(np.concatenate(self.ts), np.concatenate(self.xs))]
        return HybridArc.from_segments(segs)


def simulate(sys: HybridSystem, x0, commands: Sequence[JumpCommand], horizon,
             cfg: SolverConfig | None = None) -> tuple[HybridArc, SimStatus]:
    """Compute one solution of ``sys`` from ``x0`` up to hybrid time ``horizon``.

    Commands are consumed one per jump, in order. ``At`` commands jump exactly
    at their time; ``Forced`` commands jump when the flow cannot continue and
    the state is in D. Without a pending command, C-and-D ties follow
    ``cfg.priority`` and jumps use the system's default parameter.
    """
    cfg = cfg or SolverConfig()
    T, J = float(horizon[0]), int(horizon[1])
    x0 = _as_state(x0)
    if x0.size != sys.n:
        raise ValueError(f"x0 has dimension {x0.size}, system has {sys.n}")
    if not (sys.flow_set(x0) or sys.jump_set(x0)):
        raise InvalidInitialCondition(f"x0 = {x0} is in neither C nor D")
    commands = list(commands)
    at_times = [c.time for c in commands if c.trigger is Trigger.AT]
    if any(b < a for a, b in zip(at_times, at_times[1:])):
        raise ValueError("At-command times must be nondecreasing")

    stop_in_d = cfg.priority is Priority.JUMP
    if sys.kernel is not None and USE_NUMBA and not stop_in_d:
        f, c, theta = sys.kernel
    else:
        f, c, theta = _python_kernel(sys, stop_in_d)

    b = _Builder(0.0, x0)
    j = 0
    k = 0

    def do_jump(param):
        nonlocal j
        if param is None:
            param = sys.default_param
        if not sys.param_ok(param):
            raise ParamOutOfRange(f"parameter {base_param(param)} outside {sys.param_domain}")
        x_new = _as_state(sys.jump_map(b.x, param))
        b.jump(x_new)
        j += 1

    def finish(outcome):
        return b.arc(), SimStatus(outcome, (b.t, j))

    while True:
        cmd = commands[k] if k < len(commands) else None
        if np.linalg.norm(b.x) > cfg.escape_bound:
            return finish(Outcome.ESCAPE_DETECTED)
        # jumps scheduled for the current instant come first
        if cmd is not None and cmd.trigger is Trigger.AT and cmd.time <= b.t:
            if j >= J or j >= cfg.max_jumps:
                if b.t >= T:
                    break
                return finish(Outcome.MAX_JUMPS_HIT)
            if not sys.jump_set(b.x):
                raise CommandOutsideD(f"At({cmd.time}) fires at {b.x}, which is not in D")
            do_jump(cmd.param)
            k += 1
            continue
        if cmd is None and stop_in_d and sys.jump_set(b.x) and j < J:
            if j >= cfg.max_jumps:
                return finish(Outcome.MAX_JUMPS_HIT)
            do_jump(None)
            continue
        if b.t >= T:
            break

        t_target = T
        if cmd is not None and cmd.trigger is Trigger.AT:
            t_target = min(T, cmd.time)
        x_start = b.x
        if sys.flow_set(x_start) and not (stop_in_d and sys.jump_set(x_start)):
            ts, xs, count, code, h_fail = kernels.rk4_flow(
                f, c, x_start, theta, b.t, t_target, cfg.h, cfg.escape_bound)
            b.extend(ts[1:count], xs[1:count])
            if code == kernels.FLOW_DONE:
                continue
            if code == kernels.FLOW_ESCAPE:
                return finish(Outcome.ESCAPE_DETECTED)
            # locate the exit from C inside the rejected step
            x_last, t_last = b.x, b.t
            lo, hi = 0.0, h_fail
            while hi - lo > cfg.event_tol:
                mid = 0.5 * (lo + hi)
                xm = kernels.rk4_step(f, x_last, theta, mid)
                if np.all(np.isfinite(xm)) and c(xm, theta):
                    lo = mid
                else:
                    hi = mid
            if lo > 0.0:
                b.extend(np.array([t_last + lo]), kernels.rk4_step(f, x_last, theta, lo)[None, :])
            if t_target - b.t <= max(cfg.event_tol, cfg.horizon_tol):
                b.snap_end(t_target)
                continue
        # flow cannot continue
        if b.t >= T and j == J:
            break
        if not sys.jump_set(b.x):
            return finish(Outcome.LEFT_C_UNION_D)
        if cmd is not None and cmd.trigger is Trigger.AT:
            return finish(Outcome.LEFT_C_UNION_D)
        if j >= J or j >= cfg.max_jumps:
            return finish(Outcome.MAX_JUMPS_HIT)
        do_jump(cmd.param if cmd is not None else None)
        if cmd is not None:
            k += 1

    if j == J:
        return finish(Outcome.HORIZON_REACHED)
    return finish(Outcome.TIME_EXHAUSTED)


# ---------------------------------------------------------------------------
# Mayer augmentation
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _augmented_kernel(f, c, lc, n, n_theta):
    @jit
    def af(x, theta):
        xs = x[:n]
        dx = f(xs, theta[:n_theta])
        out = np.empty(n + 1)
        for i in range(n):
            out[i] = dx[i]
        out[n] = lc(xs, theta[n_theta:])
        return out

    @jit
    def ac(x, theta):
        return c(x[:n], theta[:n_theta])

    return af, ac


def augment_mayer(prob) -> HybridSystem:
    """Append the running-cost accumulator ``l`` to the state.

    Flow: ``(F(x), L_C(x))``; jump: ``(G(x, p), l + L_D(x, p))``. Sets ignore ``l``.
    """
    sys = prob.sys
    n = sys.n
    L_C, L_D = prob.stage_flow, prob.stage_jump

    def flow_map(xa):
        return np.append(_as_state(sys.flow_map(xa[:n])), L_C(xa[:n]))

    def jump_map(xa, p):
        return np.append(_as_state(sys.jump_map(xa[:n], p)), xa[n] + L_D(xa[:n], p))

    kernel = None
    if sys.kernel is not None and prob.stage_flow_kernel is not None:
        lc, theta_c = prob.stage_flow_kernel
        af, ac = _augmented_kernel(sys.kernel.f, sys.kernel.c, lc, n, sys.kernel.theta.size)
        kernel = FlowKernel(af, ac, np.concatenate([sys.kernel.theta, np.asarray(theta_c, float)]))
    return HybridSystem(
        n=n + 1,
        flow_set=lambda xa: sys.flow_set(xa[:n]),
        flow_map=flow_map,
        jump_set=lambda xa: sys.jump_set(xa[:n]),
        jump_map=jump_map,
        param_domain=sys.param_domain,
        name=f"{sys.name}+cost",
        kernel=kernel,
    )


# ---------------------------------------------------------------------------
# rho-perturbation
# ---------------------------------------------------------------------------

def unit_offsets(n: int, dir_grid: int) -> np.ndarray:
    """Zero, then rings of radius ``k/dir_grid`` along the ``3^n - 1`` grid directions."""
    dirs = np.array([d for d in itertools.product((-1.0, 0.0, 1.0), repeat=n) if any(d)])
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    rings = [np.zeros((1, n))]
    for k in range(1, dir_grid + 1):
        rings.append(dirs * (k / dir_grid))
    return np.concatenate(rings)


_RAY_BISECTIONS = 52


def _nearest_offset(pred, x, r, units):
    """Shortest sampled offset ``s * r * u`` with ``pred(x + s*r*u)``, or ``None``.

    Each direction whose full-radius offset satisfies ``pred`` is bisected for
    the smallest scale ``s`` in ``[0, 1]``.
    """
    if pred(x):
        return np.zeros_like(x)
    best, best_w = np.inf, None
    for u in units[1:]:
        w = r * u
        if not pred(x + w):
            continue
        lo, hi = 0.0, 1.0
        for _ in range(_RAY_BISECTIONS):
            mid = 0.5 * (lo + hi)
            if pred(x + mid * w):
                hi = mid
            else:
                lo = mid
        if hi < best:
            best, best_w = hi, hi * w
    return best_w


@functools.lru_cache(maxsize=None)
def _perturbed_kernel(f, c, n, n_units):
    """Jitted flow data of the sampled perturbation for constant ``rho``.

    ``theta`` is laid out as ``[radius, units (n_units*n, row major), base theta]``.
    """
    n_bis = _RAY_BISECTIONS

    @jit
    def pc(x, theta):
        r = theta[0]
        base = theta[1 + n_units * n:]
        for i in range(n_units):
            if c(x + r * theta[1 + i * n:1 + (i + 1) * n], base):
                return True
        return False

    @jit
    def pf(x, theta):
        r = theta[0]
        base = theta[1 + n_units * n:]
        if c(x, base):
            return f(x, base)
        best = np.inf
        best_w = np.zeros(n)
        for i in range(1, n_units):
            w = r * theta[1 + i * n:1 + (i + 1) * n]
            if not c(x + w, base):
                continue
            lo = 0.0
            hi = 1.0
            for _ in range(n_bis):
                mid = 0.5 * (lo + hi)
                if c(x + mid * w, base):
                    hi = mid
                else:
                    lo = mid
            if hi < best:
                best = hi
                best_w = hi * w
        return f(x + best_w, base)

    return pf, pc


def rho_perturb(sys: HybridSystem, delta: float, rho, dir_grid: int = 1,
                flow_disturbance: Callable | None = None) -> HybridSystem:
    """Sampled member of the ``delta*rho`` perturbation of ``sys``.

    Sets become "some sampled offset of norm <= delta*rho(x) lands in the set".
    Off the nominal flow set, the flow map is evaluated at the nearest sampled
    point of C. ``flow_disturbance(x)`` (norm <= 1, in units of
    ``delta*rho(x)``) is added to the flow map; jumps follow
    :class:`PerturbedParam`. A constant ``rho`` (a number) keeps the compiled
    flow kernel of ``sys``.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta}")
    if dir_grid < 1:
        raise ValueError("dir_grid must be >= 1")
    n = sys.n
    units = unit_offsets(n, dir_grid)
    rho_const = None
    if isinstance(rho, (int, float, np.floating)):
        rho_const = float(rho)
        if rho_const < 0:
            raise ValueError("rho must be nonnegative")

    def radius(x):
        r = rho_const if rho_const is not None else float(rho(x))
        if r < 0:
            raise ValueError("rho must be nonnegative")
        return delta * r

    def first_offset(pred, x):
        r = radius(x)
        for u in units:
            w = r * u
            if pred(x + w):
                return w
        return None

    def flow_set(x):
        return first_offset(sys.flow_set, x) is not None

    def jump_set(x):
        return first_offset(sys.jump_set, x) is not None

    def flow_map(x):
        w = _nearest_offset(sys.flow_set, x, radius(x), units)
        base = _as_state(sys.flow_map(x if w is None else x + w))
        if flow_disturbance is not None:
            d = _as_state(flow_disturbance(x))
            if np.linalg.norm(d) > 1.0 + 1e-12:
                raise ValueError("flow disturbance exceeds the perturbation radius")
            base = base + radius(x) * d
        return base

    def jump_map(x, param):
        if not isinstance(param, PerturbedParam):
            param = PerturbedParam(base_param(param))
        if param.w_in is None:
            w_in = _nearest_offset(sys.jump_set, x, radius(x), units)
            if w_in is None:
                raise NotInJumpSet(f"no sampled offset of {x} reaches D")
        else:
            u = _as_state(param.w_in)
            if np.linalg.norm(u) > 1.0 + 1e-12:
                raise ValueError("w_in exceeds the perturbation radius")
            w_in = radius(x) * u
        y = _as_state(sys.jump_map(x + w_in, param.p))
        if param.w_out is not None:
            u = _as_state(param.w_out)
            if np.linalg.norm(u) > 1.0 + 1e-12:
                raise ValueError("w_out exceeds the perturbation radius")
            y = y + radius(y) * u
        return y

    kernel = None
    if rho_const is not None and flow_disturbance is None and sys.kernel is not None:
        pf, pc = _perturbed_kernel(sys.kernel.f, sys.kernel.c, n, units.shape[0])
        theta = np.concatenate([[delta * rho_const], units.ravel(), sys.kernel.theta])
        kernel = FlowKernel(pf, pc, theta)

    return HybridSystem(
        n=n,
        flow_set=flow_set,
        flow_map=flow_map,
        jump_set=jump_set,
        jump_map=jump_map,
        param_domain=sys.param_domain,
        name=f"{sys.name}~rho({delta:g})",
        kernel=kernel,
    )


def with_priority(cfg: SolverConfig, priority: Priority) -> SolverConfig:
    return replace(cfg, priority=priority)
