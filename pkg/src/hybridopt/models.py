"""Built-in plants: the controlled bouncing ball and the room thermostat."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from ._accel import jit
from .hysys import FlowKernel, HybridSystem


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BallParams:
    gamma: float = 9.81
    lam: float = 0.8
    u_min: float = 1.0
    u_max: float = 10.0
    p_des: float = 2.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError("gamma must be > 0")
        if not 0.0 <= self.lam < 1.0:
            raise ConfigError("lambda must satisfy 0 <= lambda < 1")
        if not 0.0 <= self.u_min <= self.u_max:
            raise ConfigError("need 0 <= u_min <= u_max")


@dataclass(frozen=True)
class ThermoParams:
    z_o: float = 0.0
    z_delta: float = 30.0
    z_min: float = 18.0
    z_max: float = 22.0
    c_on: float = 1.0
    c_off: float = 1.0

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ConfigError("need z_min < z_max")
        if self.c_on < 0 or self.c_off < 0:
            raise ConfigError("switching costs must be nonnegative")


# -- bouncing ball ----------------------------------------------------------

@jit
def ball_flow(x, theta):
    out = np.empty(x.shape[0])
    out[0] = x[1]
    out[1] = -theta[0]
    return out


@jit
def ball_flow_set(x, theta):
    return x[0] >= 0.0


def ball_system(params: BallParams, ground_tol: float = 1e-7) -> HybridSystem:
    """State ``(p, v)``; jumps ``v+ = -lam*v + u`` on the ground while falling.

    ``ground_tol`` absorbs the height left over by event localization.
    """
    theta = np.array([params.gamma, params.lam])
    g, lam = params.gamma, params.lam

    def jump_map(x, u):
        return np.array([0.0, -lam * x[1] + float(u)])

    return HybridSystem(
        n=2,
        flow_set=lambda x: bool(x[0] >= 0.0),
        flow_map=lambda x: np.array([x[1], -g]),
        jump_set=lambda x: bool(abs(x[0]) <= ground_tol and x[1] <= 0.0),
        jump_map=jump_map,
        param_domain=(params.u_min, params.u_max),
        name="ball",
        kernel=FlowKernel(ball_flow, ball_flow_set, theta),
    )


def ball_energy(params: BallParams, p, v):
    """Total energy ``gamma*p + v^2/2``."""
    return params.gamma * np.asarray(p) + 0.5 * np.asarray(v) ** 2


def ball_jump_cost(params: BallParams):
    """Impact cost as a function of pre-impact velocity ``v`` (``u`` is unused).

    Vectorized over ``v``.
    """
    g, lam, pd = params.gamma, params.lam, params.p_des
    v_des = math.sqrt(2.0 * g * pd)
    threshold = -v_des / lam

    def cost(v, u=None):
        v = np.asarray(v, dtype=float)
        near = g * pd * (v + v_des) ** 2 / 2.0
        far = (v ** 2 / 2.0 - g * pd) ** 2 - (lam ** 2 * v ** 2 / 2.0 - g * pd) ** 2
        out = np.where(v >= threshold, near, np.minimum(near, far))
        return out if out.ndim else float(out)

    return cost


# -- thermostat -------------------------------------------------------------

@jit
def thermo_flow(x, theta):
    out = np.empty(x.shape[0])
    out[0] = -x[0] + theta[0] + theta[1] * x[1]
    out[1] = 0.0
    return out


@jit
def thermo_flow_set(x, theta):
    return x[1] == 0.0 or x[1] == 1.0


@jit
def thermo_band_cost(x, theta):
    return kernels.band_cost_scalar(x[0], theta[0], theta[1])


def thermostat_system(params: ThermoParams) -> HybridSystem:
    """State ``(z, q)``; the heater mode ``q`` toggles at every jump, ``C = D``."""
    theta = np.array([params.z_o, params.z_delta])
    zo, zd = params.z_o, params.z_delta

    def in_modes(x):
        return bool(x[1] == 0.0 or x[1] == 1.0)

    return HybridSystem(
        n=2,
        flow_set=in_modes,
        flow_map=lambda x: np.array([-x[0] + zo + zd * x[1], 0.0]),
        jump_set=in_modes,
        jump_map=lambda x, p: np.array([x[0], 1.0 - x[1]]),
        param_domain=(0.0, 0.0),
        name="thermostat",
        kernel=FlowKernel(thermo_flow, thermo_flow_set, theta),
    )


def thermostat_switch_cost(params: ThermoParams, q) -> float:
    return params.c_off * q + params.c_on * (1.0 - q)


# -- config blocks ----------------------------------------------------------

_BALL_KEYS = {"gamma": "gamma", "lambda": "lam", "lam": "lam", "u_min": "u_min",
              "u_max": "u_max", "p_des": "p_des"}
_THERMO_KEYS = {"z_o": "z_o", "z_delta": "z_delta", "z_min": "z_min", "z_max": "z_max",
                "c_on": "c_on", "c_off": "c_off"}


def params_from_config(block: dict):
    """``{example = "ball", ...}`` or ``{example = "thermostat", ...}`` -> params."""
    block = dict(block)
    example = block.pop("example", None)
    if example == "ball":
        keys, cls = _BALL_KEYS, BallParams
    elif example == "thermostat":
        keys, cls = _THERMO_KEYS, ThermoParams
    else:
        raise ConfigError(f"unknown example {example!r}; expected 'ball' or 'thermostat'")
    unknown = set(block) - set(keys)
    if unknown:
        raise ConfigError(f"unknown {example} keys: {sorted(unknown)}")
    try:
        kwargs = {keys[k]: float(v) for k, v in block.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"non-numeric {example} parameter: {exc}") from None
    return cls(**kwargs)


def system_from_config(block: dict) -> tuple[HybridSystem, BallParams | ThermoParams]:
    params = params_from_config(block)
    if isinstance(params, BallParams):
        return ball_system(params), params
    return thermostat_system(params), params


def params_to_config(params) -> dict:
    d = asdict(params)
    if isinstance(params, BallParams):
        d["lambda"] = d.pop("lam")
        return {"example": "ball", **d}
    return {"example": "thermostat", **d}

