"""Bare Nelder-Mead with a simplex-diameter stopping rule.

Objectives may return ``inf`` to reject a point (extreme barrier).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class NMResult:
    x: np.ndarray
    fx: float
    iterations: int
    evaluations: int
    converged: bool
    trace: list[tuple[int, float]] = field(default_factory=list)


def _diameter(simplex):
    d = simplex[:, None, :] - simplex[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def nelder_mead(fun, x0, step, tol=1e-6, max_iter=5000, max_eval=20000):
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    step = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    simplex = np.vstack([x0] + [x0 + step[i] * np.eye(n)[i] for i in range(n)])
    fvals = np.array([fun(x) for x in simplex])
    n_eval = n + 1
    trace = []
    it = 0
    converged = False
    while it < max_iter and n_eval < max_eval:
        # stable sort keeps earlier vertices first on ties -> deterministic
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        trace.append((it, float(fvals[0])))
        if _diameter(simplex) < tol:
            converged = True
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = fun(xr)
        n_eval += 1
        if fvals[0] <= fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = fun(xe)
            n_eval += 1
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
        else:
            xc = centroid + 0.5 * (worst - centroid)
        fc = fun(xc)
        n_eval += 1
        if fc < min(fr, fvals[-1]):
            simplex[-1], fvals[-1] = xc, fc
            continue
        best = simplex[0]
        simplex[1:] = best + 0.5 * (simplex[1:] - best)
        fvals[1:] = [fun(x) for x in simplex[1:]]
        n_eval += n
    order = np.argsort(fvals, kind="stable")
    return NMResult(simplex[order[0]].copy(), float(fvals[order[0]]), it, n_eval, converged, trace)
