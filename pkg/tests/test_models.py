import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridopt.models import (BallParams, ConfigError, ThermoParams, ball_energy, ball_jump_cost,
                              params_from_config, params_to_config, system_from_config,
                              thermostat_switch_cost, thermostat_system)


def test_param_validation():
    with pytest.raises(ConfigError):
        BallParams(gamma=0.0)
    with pytest.raises(ConfigError):
        BallParams(lam=1.0)
    with pytest.raises(ConfigError):
        BallParams(u_min=5.0, u_max=1.0)
    with pytest.raises(ConfigError):
        ThermoParams(z_min=25.0, z_max=20.0)


def test_config_round_trip():
    for params in (BallParams(lam=0.7), ThermoParams(c_on=3.0)):
        assert params_from_config(params_to_config(params)) == params
    with pytest.raises(ConfigError):
        params_from_config({"example": "pendulum"})
    with pytest.raises(ConfigError):
        params_from_config({"example": "ball", "gamma": "heavy"})
    sys, params = system_from_config({"example": "thermostat"})
    assert sys.n == 2 and isinstance(params, ThermoParams)


def test_ball_jump_cost_branches():
    p = BallParams()
    L = ball_jump_cost(p)
    v_des = math.sqrt(2 * p.gamma * p.p_des)
    # zero when the rebound reaches p_des exactly without input
    assert L(-v_des) == pytest.approx(0.0)
    v = -v_des / p.lam - 1.0
    far = (v * v / 2 - p.gamma * p.p_des) ** 2 - (p.lam ** 2 * v * v / 2 - p.gamma * p.p_des) ** 2
    near = p.gamma * p.p_des * (v + v_des) ** 2 / 2
    assert L(v) == pytest.approx(min(near, far))
    assert np.shape(L(np.array([-1.0, -2.0]))) == (2,)


@given(st.floats(0.0, 10.0), st.floats(-10.0, 10.0))
def test_energy_is_nonnegative_above_ground(p, v):
    assert ball_energy(BallParams(), p, v) >= 0.0


def test_thermostat_sets_and_switch_cost():
    params = ThermoParams(c_on=2.0, c_off=5.0)
    sys = thermostat_system(params)
    assert sys.flow_set(np.array([20.0, 1.0])) and sys.jump_set(np.array([20.0, 0.0]))
    assert not sys.flow_set(np.array([20.0, 0.5]))
    assert sys.jump_map(np.array([20.0, 0.0]), 0.0).tolist() == [20.0, 1.0]
    assert thermostat_switch_cost(params, 0.0) == 2.0
    assert thermostat_switch_cost(params, 1.0) == 5.0
