"""Hybrid time domains and sampled hybrid arcs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    pass


class NonMonotoneError(DomainError):
    pass


class TerminalBeforeLastJumpError(DomainError):
    pass


class NegativeTimeError(DomainError):
    pass


class OutOfDomainError(ValueError):
    pass


class ArcError(ValueError):
    pass


@dataclass(frozen=True)
class HybridTimeDomain:
    """Compact domain ``U_j [t_j, t_{j+1}] x {j}`` with ``t_0 = 0``, ``t_{J+1} = T``."""

    jump_times: tuple[float, ...]
    T: float

    @property
    def J(self) -> int:
        return len(self.jump_times)

    def interval(self, j: int) -> tuple[float, float]:
        if not 0 <= j <= self.J:
            raise OutOfDomainError(f"jump index {j} outside 0..{self.J}")
        start = 0.0 if j == 0 else self.jump_times[j - 1]
        end = self.T if j == self.J else self.jump_times[j]
        return start, end

    def intervals(self) -> list[tuple[float, float]]:
        return [self.interval(j) for j in range(self.J + 1)]

    def contains(self, t: float, j: int, tol: float = 0.0) -> bool:
        if not 0 <= j <= self.J:
            return False
        lo, hi = self.interval(j)
        return lo - tol <= t <= hi + tol


def make_domain(jump_times: Sequence[float], T: float) -> HybridTimeDomain:
    """Validate and build a hybrid time domain.

    Repeated jump times are legal: several jumps may happen at one ordinary time.
    """
    times = tuple(float(t) for t in jump_times)
    T = float(T)
    if not np.isfinite(T) or any(not np.isfinite(t) for t in times):
        raise DomainError("times must be finite")
    if T < 0 or any(t < 0 for t in times):
        raise NegativeTimeError("hybrid time domains start at t = 0")
    for a, b in zip(times, times[1:]):
        if b < a:
            raise NonMonotoneError(f"jump times decrease: {a} then {b}")
    if times and T < times[-1]:
        raise TerminalBeforeLastJumpError(f"T = {T} precedes last jump {times[-1]}")
    return HybridTimeDomain(times, T)


@dataclass(frozen=True, eq=False)
class HybridArc:
    """Piecewise-linear hybrid arc.

    ``segments[j]`` is ``(times, states)`` with ``times`` of shape ``(m,)`` and
    ``states`` of shape ``(m, n)``. A zero-length interval is a single sample.
    """

    domain: HybridTimeDomain
    segments: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        if len(self.segments) != self.domain.J + 1:
            raise ArcError("need one segment per interval of the domain")
        n = None
        for j, (ts, xs) in enumerate(self.segments):
            ts.setflags(write=False)
            xs.setflags(write=False)
            if xs.ndim != 2 or ts.ndim != 1 or xs.shape[0] != ts.shape[0] or ts.size == 0:
                raise ArcError(f"segment {j}: malformed sample arrays")
            if n is None:
                n = xs.shape[1]
            elif xs.shape[1] != n:
                raise ArcError(f"segment {j}: state dimension {xs.shape[1]} != {n}")
            lo, hi = self.domain.interval(j)
            if ts[0] != lo or ts[-1] != hi:
                raise ArcError(f"segment {j}: samples must span [{lo}, {hi}]")
            if ts.size > 1 and np.any(np.diff(ts) <= 0):
                raise ArcError(f"segment {j}: sample times must strictly increase")

    @classmethod
    def from_segments(cls, segments) -> "HybridArc":
        segs = tuple((np.array(ts, dtype=float), np.atleast_2d(np.array(xs, dtype=float)))
                     for ts, xs in segments)
        segs = tuple((ts, xs.reshape(ts.size, -1)) for ts, xs in segs)
        jumps = [ts[0] for ts, _ in segs[1:]]
        return cls(make_domain(jumps, segs[-1][0][-1]), segs)

    @property
    def n(self) -> int:
        return self.segments[0][1].shape[1]

    @property
    def J(self) -> int:
        return self.domain.J

    @property
    def T(self) -> float:
        return self.domain.T

    def final_state(self) -> np.ndarray:
        return self.segments[-1][1][-1]

    def pre_jump_states(self) -> list[np.ndarray]:
        return [xs[-1] for _, xs in self.segments[:-1]]

    def samples(self):
        """Flat ``(t, j, x)`` arrays of every stored sample, sorted by ``(j, t)``."""
        ts = np.concatenate([s[0] for s in self.segments])
        js = np.concatenate([np.full(s[0].size, j) for j, s in enumerate(self.segments)])
        xs = np.concatenate([s[1] for s in self.segments])
        return ts, js, xs


def arc_eval(arc: HybridArc, t: float, j: int) -> np.ndarray:
    """Linear interpolation of segment ``j`` at time ``t``; exact at samples."""
    if not arc.domain.contains(t, j):
        raise OutOfDomainError(f"({t}, {j}) not in arc domain")
    ts, xs = arc.segments[j]
    k = int(np.searchsorted(ts, t, side="right")) - 1
    if k >= ts.size - 1:
        return xs[-1].copy()
    if ts[k] == t:
        return xs[k].copy()
    r = (t - ts[k]) / (ts[k + 1] - ts[k])
    return xs[k] + r * (xs[k + 1] - xs[k])


def arc_to_csv(arc: HybridArc) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "j"] + [f"x_{i + 1}" for i in range(arc.n)])
    for j, (ts, xs) in enumerate(arc.segments):
        for t, x in zip(ts, xs):
            w.writerow([repr(float(t)), j] + [repr(float(v)) for v in x])
    return buf.getvalue()


def arc_from_csv(text: str) -> HybridArc:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header[:2] != ["t", "j"]:
        raise ArcError("arc CSV must start with columns t, j")
    segs: dict[int, tuple[list, list]] = {}
    for row in body:
        j = int(row[1])
        ts, xs = segs.setdefault(j, ([], []))
        ts.append(float(row[0]))
        xs.append([float(v) for v in row[2:]])
    if sorted(segs) != list(range(len(segs))):
        raise ArcError("arc CSV skips a jump index")
    return HybridArc.from_segments([segs[j] for j in range(len(segs))])
