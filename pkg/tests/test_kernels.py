"""Compiled kernels against their pure numpy twins."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridopt import kernels
from hybridopt._accel import USE_NUMBA, py
from hybridopt.hysys import JumpCommand, SolverConfig, simulate
from hybridopt.hytime import HybridArc
from hybridopt.models import BallParams, ball_flow, ball_flow_set, ball_system, thermo_flow
from hybridopt.optctrl import solve_ball

import oracles

pytestmark = pytest.mark.skipif(not USE_NUMBA, reason="numba path disabled")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.floats(0.5, 11.0), min_size=3, max_size=3), min_size=1, max_size=8),
       st.floats(0.0, 6.0), st.floats(-3.0, 3.0), st.floats(0.5, 6.0))
def test_ball_flight(nu, xi1, xi2, T):
    nu = np.array(nu)
    a = kernels.ball_flight_numba(nu, xi1, xi2, T, 9.81, 0.8)
    b = kernels.ball_flight_numpy(nu, xi1, xi2, T, 9.81, 0.8)
    assert np.array_equal(a[0], b[0])
    for x, y in zip(a[1:], b[1:]):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-12, equal_nan=True)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 3.0), max_size=3), st.floats(5.0, 30.0), st.sampled_from([0.0, 1.0]))
def test_thermo_cost(times, z0, q0):
    times = np.sort(np.array(times, dtype=float))
    args = (times, z0, q0, 3.0, 0.0, 30.0, 18.0, 22.0, 1.0, 1.0, 1e-3)
    a, za = kernels.thermo_cost_numba(*args)
    b, zb = kernels.thermo_cost_numpy(*args)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12) or (a == b == np.inf)
    assert za == pytest.approx(zb, rel=1e-12)


def test_band_cost_matches_oracle():
    z = np.linspace(10.0, 30.0, 2001)
    assert np.allclose(kernels.band_cost(z, 18.0, 22.0), oracles.band_cost(z, 18.0, 22.0))
    assert kernels.band_cost_scalar(16.5, 18.0, 22.0) == 2.0 * 1.5 - 1.0


def _random_arc(rng, n_seg, m):
    segs, t = [], 0.0
    for _ in range(n_seg):
        ts = t + np.sort(rng.uniform(0.0, 1.0, m))
        ts[0] = t
        ts = np.unique(ts)
        segs.append((ts, rng.normal(size=(ts.size, 2))))
        t = ts[-1]
    return HybridArc.from_segments(segs)


@pytest.mark.parametrize("seed", range(6))
def test_close_fail_mask(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_arc(rng, 3, 20), _random_arc(rng, 3, 25)
    ta, ja, xa = a.samples()
    tb, _, xb = b.samples()
    sizes = np.array([s[0].size for s in b.segments])
    hi = np.cumsum(sizes)
    lo = hi - sizes
    for eps in (0.05, 0.3, 1.0):
        args = (ta, ja.astype(np.int64), np.ascontiguousarray(xa), tb, np.ascontiguousarray(xb),
                lo, hi, eps)
        assert np.array_equal(kernels.close_fail_mask_numba(*args),
                              kernels.close_fail_mask_numpy(*args))


def test_rk4_paths_agree():
    theta = np.array([9.81, 0.8])
    x0 = np.array([3.0, 1.0])
    a = kernels.rk4_flow_numba(ball_flow, ball_flow_set, x0, theta, 0.0, 2.0, 1e-2, 1e9)
    b = py(kernels._rk4_flow)(py(ball_flow), py(ball_flow_set), x0, theta, 0.0, 2.0, 1e-2, 1e9)
    assert a[2:] == b[2:]
    n = a[2]
    assert np.array_equal(a[0][:n], b[0][:n]) and np.array_equal(a[1][:n], b[1][:n])
    th = np.array([0.0, 30.0])
    s1 = kernels.rk4_step_numba(thermo_flow, np.array([17.0, 1.0]), th, 0.1)
    s2 = py(kernels._rk4_step)(py(thermo_flow), np.array([17.0, 1.0]), th, 0.1)
    assert np.array_equal(s1, s2)
    assert s1[0] == pytest.approx(30.0 - 13.0 * np.exp(-0.1), abs=1e-5)


FALLBACK = """
import numpy as np
from hybridopt._accel import USE_NUMBA
from hybridopt.hysys import JumpCommand, SolverConfig, simulate
from hybridopt.models import BallParams, ball_system
from hybridopt.optctrl import solve_ball
assert not USE_NUMBA
arc, st = simulate(ball_system(BallParams()), (1.0, 0.0), [JumpCommand.forced(4.0)], (1.0, 1),
                   SolverConfig(h=1e-3))
print(repr(arc.domain.jump_times[0]), repr(solve_ball(BallParams(), (1.0, 0.0), 1.0, 1).cost))
"""


def test_numpy_fallback_agrees():
    env = {**os.environ, "HYBRIDOPT_NUMBA": "0"}
    proc = subprocess.run([sys.executable, "-c", FALLBACK], env=env, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    t1, h = map(float, proc.stdout.split())
    arc, _ = simulate(ball_system(BallParams()), (1.0, 0.0), [JumpCommand.forced(4.0)], (1.0, 1),
                      SolverConfig(h=1e-3))
    assert t1 == pytest.approx(arc.domain.jump_times[0], abs=1e-12)
    assert h == pytest.approx(solve_ball(BallParams(), (1.0, 0.0), 1.0, 1).cost, abs=1e-9)
