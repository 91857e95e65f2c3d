"""One-dimensional box with Coulomb stick-slip friction, a spring-coupled robot
gripper, a wrist force sensor on the robot side and a simulated human pusher."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

GRAVITY = 9.81
KINETIC_RATIO = 0.9


class SimulationDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class FrictionModel:
    mu_static: float
    mass: float
    mu_kinetic: float | None = None  # defaults to KINETIC_RATIO * mu_static
    gravity: float = GRAVITY

    def __post_init__(self):
        if self.mu_kinetic is None:
            object.__setattr__(self, "mu_kinetic", KINETIC_RATIO * self.mu_static)
        if not (self.mass > 0 and 0 < self.mu_kinetic <= self.mu_static):
            raise ValueError("need mass > 0 and 0 < mu_kinetic <= mu_static")

    @property
    def static_peak(self) -> float:
        return self.mu_static * self.mass * self.gravity

    @property
    def kinetic_level(self) -> float:
        return self.mu_kinetic * self.mass * self.gravity


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    spring_k: float = 2000.0
    spring_c: float = 50.0
    sensor_noise_std: float = 0.0
    v_stick: float = 1e-4
    seed: int = 0
    robot_attached: bool = True  # False leaves the box to the human alone

    def __post_init__(self):
        if not (self.dt > 0 and self.spring_k > 0 and self.v_stick > 0 and self.spring_c >= 0):
            raise ValueError("need dt > 0, spring_k > 0, v_stick > 0, spring_c >= 0")
        if self.sensor_noise_std < 0:
            raise ValueError("sensor noise must be non-negative")


@dataclass(frozen=True)
class SimState:
    box_x: float = 0.0
    box_v: float = 0.0
    robot_cmd_x: float = 0.0  # spring anchor; the spring is relaxed when it equals box_x
    spring_deflection: float = 0.0
    sensor_bias: float = 0.0
    time: float = 0.0
    spring_force: float = 0.0  # coupling force on the box at the last step


@dataclass(frozen=True)
class SensorReadings:
    f_r: np.ndarray  # robot-side wrist sensor, bias and noise included
    f_h: np.ndarray  # human-side handle sensor, evaluation only
    box_x: float
    box_v: float
    f_f: float  # friction in the sense of f_r = -f_h + f_f
    sticking: bool


def friction_force(box_v: float, f_applied_net: float, model: FrictionModel, v_stick: float) -> float:
    """Friction acting on the box given the net of all other applied forces."""
    if abs(box_v) < v_stick:
        if abs(f_applied_net) <= model.static_peak:
            return -f_applied_net
        return -np.sign(f_applied_net) * model.kinetic_level
    return -np.sign(box_v) * model.kinetic_level


def _sensor_noise(rng, std: float, n: int = 3) -> np.ndarray:
    if rng is None or std == 0:
        return np.zeros(n)
    return rng.normal(0.0, std, size=n)


def step(
    state: SimState,
    f_h_x: float,
    robot_cmd_x: float,
    config: SimConfig,
    friction: FrictionModel,
    rng: np.random.Generator | None = None,
) -> tuple[SimState, SensorReadings]:
    """Advance one dt with semi-implicit Euler and velocity-threshold stiction."""
    dt = config.dt
    if config.robot_attached:
        robot_v = (robot_cmd_x - state.robot_cmd_x) / dt
        f_s = config.spring_k * (robot_cmd_x - state.box_x) + config.spring_c * (robot_v - state.box_v)
    else:
        f_s = 0.0
    applied = f_h_x + f_s
    f_fric = friction_force(state.box_v, applied, friction, config.v_stick)
    sticking = abs(state.box_v) < config.v_stick and abs(applied) <= friction.static_peak
    if sticking:
        v, x = 0.0, state.box_x
    else:
        v = state.box_v + dt * (applied + f_fric) / friction.mass
        # kinetic friction cannot reverse the motion within one step
        if abs(state.box_v) >= config.v_stick and np.sign(v) != np.sign(state.box_v):
            v = 0.0
        x = state.box_x + dt * v
    if not (np.isfinite(x) and np.isfinite(v) and np.isfinite(f_s)):
        raise SimulationDiverged(f"non-finite state at t={state.time:.4f}")
    new = SimState(
        box_x=x,
        box_v=v,
        robot_cmd_x=robot_cmd_x,
        spring_deflection=robot_cmd_x - x,
        sensor_bias=state.sensor_bias,
        time=state.time + dt,
        spring_force=f_s,
    )
    f_r = _sensor_noise(rng, config.sensor_noise_std)
    f_r[0] += f_s - state.sensor_bias
    f_h = _sensor_noise(rng, config.sensor_noise_std)
    f_h[0] += f_h_x
    readings = SensorReadings(f_r=f_r, f_h=f_h, box_x=x, box_v=v, f_f=-f_fric, sticking=sticking)
    return new, readings


def zero_sensor_bias(state: SimState) -> SimState:
    """Take the current coupling force as the sensor's zero reference."""
    return replace(state, sensor_bias=state.spring_force)


def mechanical_energy(state: SimState, config: SimConfig, mass: float) -> float:
    return 0.5 * mass * state.box_v**2 + 0.5 * config.spring_k * (state.robot_cmd_x - state.box_x) ** 2


@dataclass(frozen=True)
class HumanForcePolicy:
    """PD tracking of a desired box trajectory, saturated at the participant's strength."""

    target_trajectory: Callable[[float], tuple[float, float]]  # t -> (x_des, v_des)
    kp: float = 10000.0
    kd: float = 600.0
    f_max: float = 120.0

    def __post_init__(self):
        if not self.f_max > 0:
            raise ValueError("f_max must be positive")


def human_force(policy: HumanForcePolicy, state: SimState, t: float) -> float:
    x_des, v_des = policy.target_trajectory(t)
    f = policy.kp * (x_des - state.box_x) + policy.kd * (v_des - state.box_v)
    return float(np.clip(f, -policy.f_max, policy.f_max))


class Simulator:
    """Stateful wrapper owning the noise generator."""

    def __init__(self, config: SimConfig, friction: FrictionModel, state: SimState | None = None):
        self.config = config
        self.friction = friction
        self.state = state or SimState()
        self.rng = np.random.default_rng(config.seed)

    def step(self, f_h_x: float, robot_cmd_x: float) -> SensorReadings:
        self.state, readings = step(self.state, f_h_x, robot_cmd_x, self.config, self.friction, self.rng)
        return readings

    def zero_sensor_bias(self) -> None:
        self.state = zero_sensor_bias(self.state)
