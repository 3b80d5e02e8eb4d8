"""(tau, eps)-closeness of hybrid arcs and graphical-convergence diagnostics.

Two arcs are close when every sample ``(t, j)`` of one with ``t + j <= tau``
has a partner ``(t', j)`` on the other with ``|t - t'| < eps`` and state
distance ``< eps``, and the same holds with the roles swapped. Distances equal
to ``eps`` count as failures.

The partner search is exact for piecewise-linear arcs: each linear piece of
the other arc that overlaps the window ``[t - eps, t + eps]`` is handled by
projecting onto the piece and clipping to the window.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .hytime import HybridArc


class DimensionMismatch(ValueError):
    pass


class EmptyGrid(ValueError):
    pass


@dataclass(frozen=True)
class Witness:
    t: float
    j: int
    reason: str


@dataclass
class ClosenessReport:
    tau: float
    eps_star: float
    direction_failures: list[Witness] = field(default_factory=list)


@dataclass
class ConvergenceReport:
    tau: float
    eps_star: list[float]
    verdict: str

    @property
    def converging(self) -> bool:
        return self.verdict == "converging"


def _segment_index(arc: HybridArc):
    sizes = np.array([s[0].size for s in arc.segments], dtype=np.int64)
    hi = np.cumsum(sizes)
    return hi - sizes, hi


def _fail_mask(a: HybridArc, b: HybridArc, tau: float, eps: float):
    ta, ja, xa = a.samples()
    keep = ta + ja <= tau
    ta, ja, xa = ta[keep], ja[keep].astype(np.int64), np.ascontiguousarray(xa[keep])
    tb, _, xb = b.samples()
    lo, hi = _segment_index(b)
    fail = kernels.close_fail_mask(ta, ja, xa, tb, np.ascontiguousarray(xb), lo, hi, float(eps))
    return ta[fail], ja[fail]


def is_close(a: HybridArc, b: HybridArc, tau: float, eps: float) -> tuple[bool, list[Witness]]:
    """Check both directions; witnesses name the first failing sample of each."""
    if a.n != b.n:
        raise DimensionMismatch(f"arcs have dimensions {a.n} and {b.n}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    witnesses = []
    for first, second, reason in ((a, b, "a->b"), (b, a, "b->a")):
        ts, js = _fail_mask(first, second, tau, eps)
        if ts.size:
            witnesses.append(Witness(float(ts[0]), int(js[0]), reason))
    return not witnesses, witnesses


def min_eps(a: HybridArc, b: HybridArc, tau: float, eps_grid) -> ClosenessReport:
    """Smallest grid value at which the arcs are close (``inf`` if none).

    Closeness is monotone in ``eps``, so the sorted grid is bisected.
    """
    grid = np.asarray(eps_grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("eps_grid is empty")
    if np.any(grid <= 0) or np.any(np.diff(grid) < 0):
        raise ValueError("eps_grid must be positive and sorted ascending")
    ok, wit = is_close(a, b, tau, grid[-1])
    if not ok:
        return ClosenessReport(tau, math.inf, wit)
    lo, hi = -1, grid.size - 1  # grid[hi] is close, grid[lo] is not (or off-grid)
    failures: list[Witness] = []
    while hi - lo > 1:
        mid = (lo + hi) // 2
        ok, wit = is_close(a, b, tau, grid[mid])
        if ok:
            hi = mid
        else:
            lo, failures = mid, wit
    return ClosenessReport(tau, float(grid[hi]), failures)


def graphical_convergence_report(seq, limit: HybridArc, tau: float, eps_grid,
                                 threshold: float = math.inf) -> ConvergenceReport:
    """``eps_star`` of each arc against ``limit`` plus a verdict.

    The verdict is ``"converging"`` when the values are nonincreasing from the
    second element on and the last one is below ``threshold``.
    """
    seq = list(seq)
    for arc in seq:
        if arc.n != limit.n:
            raise DimensionMismatch(f"arcs have dimensions {arc.n} and {limit.n}")
    eps = [min_eps(arc, limit, tau, eps_grid).eps_star for arc in seq]
    tail = eps[1:] if len(eps) > 1 else eps
    monotone = all(y <= x for x, y in zip(tail, tail[1:]))
    good = bool(eps) and monotone and eps[-1] < threshold
    return ConvergenceReport(tau, eps, "converging" if good else "not converging")


def eps_to_csv(eps_star) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "eps_star"])
    for i, e in enumerate(eps_star, start=1):
        w.writerow([i, repr(float(e))])
    return buf.getvalue()
