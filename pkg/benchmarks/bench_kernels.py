"""Time the numba kernels against their pure numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Compilation is triggered once before timing and reported on its own line.
Both variants are importable in one process, so ``HYBRIDOPT_NUMBA`` does not
need to be set; the numpy column is what a ``HYBRIDOPT_NUMBA=0`` run uses.
"""

import argparse
import timeit

import numpy as np

from hybridopt import kernels
from hybridopt._accel import USE_NUMBA, py
from hybridopt.hytime import HybridArc
from hybridopt.models import ball_flow, ball_flow_set


def _arc(rng, n_seg, m):
    segs, t = [], 0.0
    for _ in range(n_seg):
        ts = np.unique(np.concatenate([[t], t + np.sort(rng.uniform(0.0, 1.0, m))]))
        segs.append((ts, rng.normal(size=(ts.size, 2))))
        t = ts[-1]
    return HybridArc.from_segments(segs)


def cases():
    rng = np.random.default_rng(0)
    theta = np.array([9.81, 0.8])
    x0 = np.array([50.0, 0.0])
    f, c = ball_flow, ball_flow_set
    yield ("rk4 flow, 3000 steps",
           lambda: kernels.rk4_flow_numba(f, c, x0, theta, 0.0, 3.0, 1e-3, 1e9),
           lambda: py(kernels._rk4_flow)(py(f), py(c), x0, theta, 0.0, 3.0, 1e-3, 1e9))

    nu = rng.uniform(1.0, 10.0, (20000, 3))
    args = (nu, 1.0, 0.0, 4.0, 9.81, 0.8)
    yield ("ball flight, 20000 x 3",
           lambda: kernels.ball_flight_numba(*args), lambda: kernels.ball_flight_numpy(*args))

    targs = (np.array([0.7, 1.9]), 17.0, 0.0, 3.0, 0.0, 30.0, 18.0, 22.0, 1.0, 1.0, 1e-4)
    yield ("thermostat cost, dt 1e-4",
           lambda: kernels.thermo_cost_numba(*targs), lambda: kernels.thermo_cost_numpy(*targs))

    a, b = _arc(rng, 4, 500), _arc(rng, 4, 500)
    ta, ja, xa = a.samples()
    tb, _, xb = b.samples()
    sizes = np.array([s[0].size for s in b.segments])
    hi = np.cumsum(sizes)
    margs = (ta, ja.astype(np.int64), xa, tb, xb, hi - sizes, hi, 0.2)
    yield ("closeness mask, 2000 x 2000",
           lambda: kernels.close_fail_mask_numba(*margs),
           lambda: kernels.close_fail_mask_numpy(*margs))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not USE_NUMBA:
        raise SystemExit("numba is disabled (HYBRIDOPT_NUMBA=0); nothing to compare")
    print(f"{'kernel':32s} {'compile s':>10s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, fast, slow in cases():
        compile_s = timeit.timeit(fast, number=1)
        t_fast = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(slow, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32s} {compile_s:10.2f} {t_fast:10.3f} {t_slow:10.3f} {t_slow / t_fast:8.1f}")


if __name__ == "__main__":
    main()
