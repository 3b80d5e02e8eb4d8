import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridopt.closeness import (DimensionMismatch, EmptyGrid, eps_to_csv,
                                 graphical_convergence_report, is_close, min_eps)
from hybridopt.hytime import HybridArc

GRID = np.linspace(0.01, 2.0, 200)


def step_arc(t_jump, T=2.0, before=0.0, after=1.0):
    """Scalar arc: constant ``before`` until ``t_jump``, then constant ``after``."""
    return HybridArc.from_segments([
        ([0.0, t_jump], [[before], [before]]),
        ([t_jump, T], [[after], [after]]),
    ])


def flat_arc(value, T=2.0):
    return HybridArc.from_segments([(np.linspace(0.0, T, 5), np.full((5, 1), value))])


def test_arc_is_close_to_itself():
    a = step_arc(1.0)
    assert is_close(a, a, 5.0, 1e-9)[0]
    assert min_eps(a, a, 5.0, GRID).eps_star == GRID[0]


def test_state_gap_ties_fail():
    a, b = flat_arc(0.0), flat_arc(0.5)
    ok, wit = is_close(a, b, 5.0, 0.5)
    assert not ok and {w.reason for w in wit} == {"a->b", "b->a"}
    assert is_close(a, b, 5.0, 0.5 + 1e-12)[0]
    assert min_eps(a, b, 5.0, GRID).eps_star == pytest.approx(GRID[GRID > 0.5][0])


def test_jump_time_shift_needs_eps_above_shift():
    a, b = step_arc(1.0), step_arc(1.3)
    assert not is_close(a, b, 5.0, 0.3)[0]
    assert is_close(a, b, 5.0, 0.31)[0]


def test_window_tau_ignores_later_samples():
    a, b = step_arc(1.0), step_arc(1.0, after=5.0)
    # samples with t + j <= tau: jump at 1.0 lands at t + j = 2.0
    assert is_close(a, b, 1.9, 0.01)[0]
    assert not is_close(a, b, 3.0, 0.01)[0]


def test_no_grid_value_gives_inf():
    rep = min_eps(flat_arc(0.0), flat_arc(10.0), 5.0, GRID)
    assert rep.eps_star == math.inf and rep.direction_failures


def test_errors():
    two = HybridArc.from_segments([([0.0, 1.0], [[0.0, 0.0], [0.0, 0.0]])])
    with pytest.raises(DimensionMismatch):
        is_close(flat_arc(0.0), two, 1.0, 0.1)
    with pytest.raises(EmptyGrid):
        min_eps(flat_arc(0.0), flat_arc(0.0), 1.0, [])
    with pytest.raises(ValueError):
        min_eps(flat_arc(0.0), flat_arc(0.0), 1.0, [0.2, 0.1])
    with pytest.raises(ValueError):
        is_close(flat_arc(0.0), flat_arc(0.0), 1.0, 0.0)


arcs = st.tuples(st.floats(0.1, 1.9), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))


@settings(max_examples=60, deadline=None)
@given(arcs, arcs, st.floats(0.01, 3.0), st.floats(0.5, 6.0))
def test_symmetric_and_monotone(pa, pb, eps, tau):
    a, b = step_arc(pa[0], before=pa[1], after=pa[2]), step_arc(pb[0], before=pb[1], after=pb[2])
    ok = is_close(a, b, tau, eps)[0]
    assert ok == is_close(b, a, tau, eps)[0]
    if ok:
        assert is_close(a, b, tau, eps * 1.5)[0]
        assert is_close(a, b, tau * 0.5, eps)[0]


@settings(max_examples=30, deadline=None)
@given(arcs, arcs)
def test_min_eps_is_the_threshold(pa, pb):
    a, b = step_arc(pa[0], before=pa[1], after=pa[2]), step_arc(pb[0], before=pb[1], after=pb[2])
    e = min_eps(a, b, 4.0, GRID).eps_star
    if math.isfinite(e):
        k = int(np.searchsorted(GRID, e))
        assert is_close(a, b, 4.0, e)[0]
        assert k == 0 or not is_close(a, b, 4.0, GRID[k - 1])[0]


def test_convergence_report():
    limit = step_arc(1.0)
    seq = [step_arc(1.0 + 2.0 ** -i, after=1.0 + 2.0 ** -i) for i in range(1, 6)]
    grid = np.logspace(-4, 0, 401)
    rep = graphical_convergence_report(seq, limit, 4.0, grid, threshold=0.05)
    assert rep.converging
    assert all(y <= x for x, y in zip(rep.eps_star, rep.eps_star[1:]))
    assert rep.eps_star[-1] == pytest.approx(2.0 ** -5, rel=0.03)
    assert not graphical_convergence_report(seq[::-1], limit, 4.0, grid).converging
    assert eps_to_csv([0.5, math.inf]) == "i,eps_star\n1,0.5\n2,inf\n"
