import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridopt.hytime import (ArcError, DomainError, HybridArc, NegativeTimeError,
                              NonMonotoneError, OutOfDomainError, TerminalBeforeLastJumpError,
                              arc_eval, arc_from_csv, arc_to_csv, make_domain)

times = st.lists(st.floats(0.0, 50.0, allow_nan=False), max_size=6).map(sorted)


def test_domain_intervals():
    d = make_domain([1.0, 1.0, 2.5], 4.0)
    assert d.J == 3
    assert d.intervals() == [(0.0, 1.0), (1.0, 1.0), (1.0, 2.5), (2.5, 4.0)]
    assert d.contains(1.0, 1) and not d.contains(1.5, 1)
    with pytest.raises(OutOfDomainError):
        d.interval(4)


@pytest.mark.parametrize("jumps, T, err", [
    ([2.0, 1.0], 3.0, NonMonotoneError),
    ([1.0], 0.5, TerminalBeforeLastJumpError),
    ([-1.0], 3.0, NegativeTimeError),
    ([], float("nan"), DomainError),
])
def test_domain_rejects(jumps, T, err):
    with pytest.raises(err):
        make_domain(jumps, T)


@given(times, st.floats(0.0, 10.0))
def test_intervals_tile_zero_to_T(jumps, extra):
    d = make_domain(jumps, (jumps[-1] if jumps else 0.0) + extra)
    iv = d.intervals()
    assert iv[0][0] == 0.0 and iv[-1][1] == d.T
    for (a, b), (c, _) in zip(iv, iv[1:]):
        assert a <= b == c


def _arc():
    return HybridArc.from_segments([
        ([0.0, 0.5, 1.0], [[1.0, 0.0], [0.5, -1.0], [0.0, -2.0]]),
        ([1.0], [[0.0, 1.5]]),
        ([1.0, 2.0], [[0.0, 1.0], [1.0, 0.0]]),
    ])


def test_arc_eval_interpolates_and_hits_samples():
    arc = _arc()
    assert np.array_equal(arc_eval(arc, 0.5, 0), [0.5, -1.0])
    assert np.allclose(arc_eval(arc, 0.25, 0), [0.75, -0.5])
    assert np.array_equal(arc_eval(arc, 1.0, 1), [0.0, 1.5])
    assert np.array_equal(arc.final_state(), [1.0, 0.0])
    with pytest.raises(OutOfDomainError):
        arc_eval(arc, 1.5, 0)


def test_arc_validation():
    with pytest.raises(ArcError):
        HybridArc.from_segments([([0.0, 0.0], [[1.0], [2.0]])])
    with pytest.raises(ArcError):
        HybridArc(make_domain([1.0], 2.0), ((np.array([0.0, 1.0]), np.zeros((2, 1))),))
    arc = _arc()
    with pytest.raises(ValueError):
        arc.segments[0][1][0, 0] = 3.0


def test_csv_round_trip_is_exact():
    arc = _arc()
    text = arc_to_csv(arc)
    assert text.splitlines()[0] == "t,j,x_1,x_2"
    back = arc_from_csv(text)
    assert arc_to_csv(back) == text
    assert back.domain == arc.domain


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(0.01, 3.0), st.integers(1, 4)), min_size=1, max_size=4),
       st.floats(-1e6, 1e6, allow_nan=False))
def test_csv_round_trip_property(pieces, value):
    segs, t = [], 0.0
    for length, m in pieces:
        ts = np.linspace(t, t + length, m + 1)
        segs.append((ts, np.full((ts.size, 1), value) + ts[:, None]))
        t = ts[-1]
    arc = HybridArc.from_segments(segs)
    back = arc_from_csv(arc_to_csv(arc))
    for (a, x), (b, y) in zip(arc.segments, back.segments):
        assert np.array_equal(a, b) and np.array_equal(x, y)
