import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridopt.hysys import JumpCommand, SolverConfig, augment_mayer, simulate
from hybridopt.models import BallParams, ThermoParams, ball_jump_cost
from hybridopt.optctrl import (BallFamily, Infeasible, InvalidInitialMode, NegativeHeight,
                               OptimizerConfig, SweepPoint, ThermostatFamily,
                               ball_feasible_window, ball_jump_times, ball_problem, eval_cost,
                               nelder_mead, schedule_cost, solve_ball, solve_thermostat,
                               sweep_to_csv, thermostat_problem, value_sweep)

import oracles

BALL = BallParams()
THERMO = ThermoParams()

# optimum of the two-impact problem from rest at height 1 with T = 4
U_STAR = (3.260931362574055, 5.15719652631086)
H_STAR = 92.07518633474437


def ball_cost_oracle(nu, T, xi=(1.0, 0.0), params=BALL):
    """Jump costs plus terminal energy, impact by impact; ``inf`` if infeasible."""
    g, lam = params.gamma, params.lam
    L_D = ball_jump_cost(params)
    p, v = xi
    t = (v + math.sqrt(v * v + 2 * g * p)) / g
    speed = math.sqrt(v * v + 2 * g * p)
    cost = 0.0
    for u in nu:
        if t > T:
            return math.inf
        cost += L_D(-speed)
        up = lam * speed + u
        t_jump, speed = t, up
        t += 2 * up / g
    if t < T:
        return math.inf
    s = T - t_jump
    p_T, v_T = speed * s - 0.5 * g * s * s, speed - g * s
    return cost + g * p_T + 0.5 * v_T ** 2


def test_golden_two_impact_optimum():
    sol = solve_ball(BALL, (1.0, 0.0), 4.0, 2)
    assert sol.decisions == pytest.approx(U_STAR, abs=1e-5)
    assert sol.cost == pytest.approx(H_STAR, abs=1e-5)
    assert sol.status.reached
    assert ball_cost_oracle(sol.decisions, 4.0) == pytest.approx(sol.cost, abs=1e-8)


def test_golden_optimum_beats_its_neighbourhood():
    g = np.linspace(-0.05, 0.05, 41)
    best = min(ball_cost_oracle((U_STAR[0] + a, U_STAR[1] + b), 4.0) for a in g for b in g)
    assert best >= H_STAR - 1e-6


def test_solution_cost_matches_eval_cost():
    sol = solve_ball(BALL, (1.0, 0.0), 4.0, 2)
    prob = ball_problem(BALL, (1.0, 0.0), 4.0, 2)
    assert eval_cost(prob, sol.arc, sol.decisions) == pytest.approx(sol.cost, abs=1e-6)


@given(st.floats(0.0, 10.0), st.floats(-5.0, 5.0), st.floats(1.0, 10.0), st.integers(1, 6))
def test_jump_times_closed_form_matches_recursion(p, v, nu, j):
    times, _ = oracles.ball_impacts((p, v), nu, j)
    assert ball_jump_times(BALL, (p, v), nu, j) == pytest.approx(times[-1], rel=1e-10, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(1.0, 10.0), min_size=1, max_size=3), st.floats(0.0, 1.0))
def test_cost_functional_matches_augmented_state(nu, frac):
    t_J = oracles.ball_impacts((1.0, 0.0), 0.0, 1)[0][0]
    up = BALL.lam * math.sqrt(2 * BALL.gamma)
    for k, u in enumerate(nu):
        up += u
        if k < len(nu) - 1:
            t_J += 2 * up / BALL.gamma
            up *= BALL.lam
    T = t_J + frac * 2 * up / BALL.gamma
    J = len(nu)
    prob = ball_problem(BALL, (1.0, 0.0), T, J)
    cfg = SolverConfig(h=1e-3)
    cmds = [JumpCommand.forced(u) for u in nu]
    arc, status = simulate(prob.sys, prob.x0, cmds, (T, J), cfg)
    aug, _ = simulate(augment_mayer(prob), np.append(prob.x0, 0.0), cmds, (T, J), cfg)
    if status.reached and arc.final_state()[0] >= 0.0:
        xf = aug.final_state()
        assert eval_cost(prob, arc, nu) == pytest.approx(xf[-1] + prob.terminal(xf[:-1]), abs=1e-8)
        assert eval_cost(prob, arc, nu) == pytest.approx(ball_cost_oracle(nu, T), abs=1e-6)


def test_infeasible_and_invalid_inputs():
    (lo, hi), _ = ball_feasible_window(BALL, (1.0, 0.0), 2)
    with pytest.raises(Infeasible):
        solve_ball(BALL, (1.0, 0.0), hi + 0.5, 2)
    with pytest.raises(Infeasible):
        solve_ball(BALL, (1.0, 0.0), lo - 0.1, 2)
    with pytest.raises(NegativeHeight):
        solve_ball(BALL, (-1.0, 0.0), 4.0, 2)
    with pytest.raises(InvalidInitialMode):
        solve_thermostat(THERMO, (20.0, 0.5), 1.0, 1)


def test_no_jump_problem():
    sol = solve_ball(BALL, (1.0, 0.0), 0.2, 0)
    assert sol.decisions.size == 0
    assert sol.cost == pytest.approx(BALL.gamma * 1.0)  # energy is conserved in flight
    with pytest.raises(Infeasible):
        solve_ball(BALL, (1.0, 0.0), 1.0, 0)


def test_nelder_mead_quadratic_and_ties():
    res = nelder_mead(lambda x: float((x[0] - 1) ** 2 + 3 * (x[1] + 2) ** 2), [0.0, 0.0], 0.5,
                      tol=1e-8)
    assert res.converged and res.x == pytest.approx([1.0, -2.0], abs=1e-6)
    a = nelder_mead(lambda x: abs(float(x[0])), [0.3], 0.1)
    b = nelder_mead(lambda x: abs(float(x[0])), [0.3], 0.1)
    assert a.x.tolist() == b.x.tolist() and a.trace == b.trace


def test_thermostat_schedule_cost_matches_trapezoid():
    times = [0.3, 1.7]
    c = schedule_cost(THERMO, (17.0, 0.0), 2.0, times, dt=1e-4)
    ref, _ = oracles.thermostat_cost(17.0, 0.0, times, 2.0)
    assert c == pytest.approx(ref, abs=1e-6)


def test_thermostat_switches_at_once_when_switching_on_is_free():
    params = ThermoParams(c_on=0.0)
    sol = solve_thermostat(params, (17.0, 0.0), 0.4, 1)
    assert sol.decisions[0] == pytest.approx(0.0, abs=1e-6)
    ref, z_T = oracles.thermostat_cost(17.0, 0.0, sol.decisions, 0.4, c_on=0.0)
    assert sol.cost == pytest.approx(ref, abs=1e-5)
    assert params.z_min <= z_T <= params.z_max


def test_thermostat_optimum_beats_brute_force():
    T = 2.0
    sol = solve_thermostat(THERMO, (17.0, 0.0), T, 1)
    best = min(oracles.thermostat_cost(17.0, 0.0, [t], T, n=20001)[0]
               for t in np.linspace(0.0, T, 401)
               if 18.0 <= oracles.thermostat_cost(17.0, 0.0, [t], T, n=2001)[1] <= 22.0)
    assert sol.cost <= best + 1e-5
    prob = thermostat_problem(THERMO, (17.0, 0.0), T, 1)
    assert eval_cost(prob, sol.arc, [None]) == pytest.approx(sol.cost, abs=1e-5)


def test_value_sweep_records_failures_and_csv():
    fam = BallFamily(BALL, opt=OptimizerConfig(grid_points=9))
    grid = [((1.0, 0.0), 4.0, 2), ((1.0, 0.0), 40.0, 2), SweepPoint((1.0, 0.0), 0.2, 0)]
    rows = value_sweep(fam, grid)
    assert [r.feasible for r in rows] == [True, False, True]
    assert rows[1].error.startswith("Infeasible")
    text = sweep_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "xi_1,xi_2,T,J,delta,feasible,h,d_1,d_2"
    assert lines[2].split(",")[5:7] == ["0", "inf"]
    assert value_sweep(fam, grid, threads=2)[0].h == rows[0].h

    therm = value_sweep(ThermostatFamily(THERMO), [SweepPoint((17.0, 0.0), 1.0, 1, 0.1)])
    assert not therm[0].feasible and therm[0].error.startswith("NotImplementedError")


@pytest.mark.slow
def test_perturbation_never_raises_the_optimal_cost():
    h0 = solve_ball(BALL, (1.0, 0.0), 2.0, 1).cost
    for delta in (0.05, 0.2):
        assert solve_ball(BALL, (1.0, 0.0), 2.0, 1, delta=delta).cost <= h0 + 1e-9
