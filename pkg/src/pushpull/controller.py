"""Assistive force layer: intention filtering, ramped desired force, position-based
force control, sensor re-zeroing at idle stops and one-off object exploration."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .dgnn.model import select_class, select_classes
from .physics import FrictionModel, SimConfig, SimState, Simulator
from .skeleton import IntentionClass

FILTER_LENGTH = 15
STALE_LIMIT = 0.050  # s an intention may age before the loop holds its command


class ControllerError(ValueError):
    pass


class ExplorationError(RuntimeError):
    pass


@dataclass(frozen=True)
class AssistConfig:
    f_com: float
    K_f: float = 5e-5
    transition_s: float = 1.0
    control_hz: float = 100.0
    u_max: float = 0.002
    filter_len: int = FILTER_LENGTH

    def __post_init__(self):
        if self.f_com < 0:
            raise ControllerError("f_com must be >= 0")
        if not (self.transition_s > 0 and self.K_f > 0 and self.control_hz > 0 and self.u_max > 0):
            raise ControllerError("transition_s, K_f, control_hz and u_max must be positive")
        if self.filter_len < 1:
            raise ControllerError("filter_len must be >= 1")

    @property
    def tick(self) -> float:
        return 1.0 / self.control_hz

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AssistConfig":
        missing = {f for f in ("f_com", "K_f", "transition_s", "control_hz", "u_max", "filter_len")} - set(d)
        if missing:
            raise ControllerError(f"controller config lacks {sorted(missing)}")
        return cls(**{k: d[k] for k in ("f_com", "K_f", "transition_s", "control_hz", "u_max", "filter_len")})


def load_assist_config(path) -> AssistConfig:
    return AssistConfig.from_dict(json.loads(Path(path).read_text()))


# -- intention filter -----------------------------------------------------


@dataclass
class IntentionFilterState:
    length: int = FILTER_LENGTH
    buffer: deque = field(default_factory=deque)
    current: IntentionClass = IntentionClass.IDLE


def filter_intention(state: IntentionFilterState, logits) -> tuple[IntentionFilterState, IntentionClass]:
    """Moving average of the last ``length`` logit vectors, then argmax."""
    logits = np.asarray(logits, dtype=float)
    if logits.shape != (3,) or not np.all(np.isfinite(logits)):
        raise ControllerError("logits must be a finite 3-vector")
    state.buffer.append(logits)
    while len(state.buffer) > state.length:
        state.buffer.popleft()
    state.current = select_class(np.mean(state.buffer, axis=0))
    return state, state.current


def filter_stream(logits: np.ndarray, length: int = FILTER_LENGTH) -> np.ndarray:
    """Filtered classes for a whole (n, 3) logit stream; equals repeated filter_intention."""
    logits = np.asarray(logits, dtype=float)
    csum = np.vstack([np.zeros(3), np.cumsum(logits, axis=0)])
    n = np.arange(1, len(logits) + 1)
    lo = np.maximum(n - length, 0)
    means = (csum[n] - csum[lo]) / (n - lo)[:, None]
    return select_classes(means)


# -- desired force ramp ---------------------------------------------------


@dataclass(frozen=True)
class ControllerState:
    intent: IntentionClass = IntentionClass.IDLE
    ramp_start_time: float = 0.0
    ramp_from: float = 0.0
    f_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    robot_cmd_x: float = 0.0

    def ramp_target(self, cfg: AssistConfig) -> float:
        # pushing is along -x
        return -int(self.intent) * cfg.f_com


def ramp_value(ctrl: ControllerState, t: float, cfg: AssistConfig) -> float:
    frac = min(max((t - ctrl.ramp_start_time) / cfg.transition_s, 0.0), 1.0)
    target = ctrl.ramp_target(cfg)
    return ctrl.ramp_from + frac * (target - ctrl.ramp_from)


def assist_target(ctrl: ControllerState, new_intent: IntentionClass, t: float, cfg: AssistConfig) -> ControllerState:
    """Advance the desired force to time ``t``, restarting the ramp on a change of intention."""
    if t < ctrl.ramp_start_time:
        raise ControllerError("time went backwards")
    if new_intent != ctrl.intent:
        current = ramp_value(ctrl, t, cfg)
        ctrl = replace(ctrl, intent=IntentionClass(new_intent), ramp_start_time=t, ramp_from=current)
    return replace(ctrl, f_d=np.array([ramp_value(ctrl, t, cfg), 0.0, 0.0]))


def ramp_done(ctrl: ControllerState, t: float, cfg: AssistConfig) -> bool:
    return t - ctrl.ramp_start_time >= cfg.transition_s - 1e-9


# -- force control --------------------------------------------------------


def force_control(f_d, f_r, K_f: float, u_max: float = np.inf):
    """Position correction proportional to the force error, clipped per tick."""
    return np.clip(K_f * (np.asarray(f_d, dtype=float) - np.asarray(f_r, dtype=float)), -u_max, u_max)


def on_idle_stop(ctrl: ControllerState, sim: Simulator) -> ControllerState:
    """Re-zero the robot-side sensor and hold the gripper where it is."""
    if ctrl.intent != IntentionClass.IDLE:
        raise ControllerError("idle stop requested while an intention is active")
    sim.zero_sensor_bias()
    return replace(ctrl, robot_cmd_x=sim.state.robot_cmd_x)


@dataclass
class TickResult:
    u_x: float
    f_d_x: float
    intent_filtered: IntentionClass
    bias_reset: bool
    held: bool


class AssistController:
    """One control tick = filter update, ramp update, idle-stop handling, force control."""

    def __init__(self, cfg: AssistConfig, robot_cmd_x: float = 0.0):
        self.cfg = cfg
        self.filter = IntentionFilterState(length=cfg.filter_len)
        self.ctrl = ControllerState(robot_cmd_x=robot_cmd_x)
        self._stopped = True  # starts at rest; first idle stop happens after an action

    def tick(self, t: float, logits, f_r_x: float, sim: Simulator | None = None, intent_age: float = 0.0) -> TickResult:
        if logits is None or intent_age > STALE_LIMIT:
            return TickResult(0.0, float(self.ctrl.f_d[0]), self.filter.current, False, True)
        _, filtered = filter_intention(self.filter, logits)
        if filtered != IntentionClass.IDLE:
            self._stopped = False
        self.ctrl = assist_target(self.ctrl, filtered, t, self.cfg)
        f_d_x = float(self.ctrl.f_d[0])
        if (
            filtered == IntentionClass.IDLE
            and not self._stopped
            and ramp_done(self.ctrl, t, self.cfg)
            and sim is not None
        ):
            self.ctrl = on_idle_stop(self.ctrl, sim)
            self._stopped = True
            return TickResult(0.0, f_d_x, filtered, True, False)
        u = float(force_control(f_d_x, f_r_x, self.cfg.K_f, self.cfg.u_max))
        self.ctrl = replace(self.ctrl, robot_cmd_x=self.ctrl.robot_cmd_x + u)
        return TickResult(u, f_d_x, filtered, False, False)


# -- object exploration ---------------------------------------------------


@dataclass(frozen=True)
class ExploreConfig:
    step_n: float = 2.0
    dwell_s: float = 1.0
    tolerance_m: float = 0.002
    cap_n: float = 200.0
    K_f: float = 5e-5
    u_max: float = 0.002
    control_hz: float = 100.0


def drive_robot(sim: Simulator, cmd_from: float, cmd_to: float, f_h_x=0.0, control_hz: float = 100.0):
    """Run one control tick, interpolating the gripper command over the physics sub-steps.

    ``f_h_x`` is a constant force or a callable ``(state) -> force`` evaluated every sub-step.
    """
    n = max(1, int(round(1.0 / (control_hz * sim.config.dt))))
    readings = None
    for k in range(1, n + 1):
        f = f_h_x(sim.state) if callable(f_h_x) else f_h_x
        readings = sim.step(f, cmd_from + (cmd_to - cmd_from) * k / n)
    return readings


def explore_object(
    sim_factory: Callable[[], Simulator],
    cfg: ExploreConfig = ExploreConfig(),
    direction: int = -1,
) -> float:
    """Largest stepped force the robot can hold for a dwell without moving the box.

    The robot acts alone; ``direction`` -1 explores pushing (towards -x).
    """
    sim = sim_factory()
    ticks = int(round(cfg.dwell_s * cfg.control_hz))
    cmd = sim.state.robot_cmd_x
    f_r = 0.0
    held = None
    level = cfg.step_n
    while level <= cfg.cap_n + 1e-9:
        x0 = sim.state.box_x
        target = direction * level
        moved = False
        for _ in range(ticks):
            u = float(force_control(target, f_r, cfg.K_f, cfg.u_max))
            r = drive_robot(sim, cmd, cmd + u, control_hz=cfg.control_hz)
            cmd += u
            f_r = float(r.f_r[0])
            if abs(sim.state.box_x - x0) >= cfg.tolerance_m:
                moved = True
                break
        if moved:
            if held is None:
                raise ExplorationError(f"object moved at the first {level:g} N step; too light to explore")
            return held
        held = level
        level += cfg.step_n
    raise ExplorationError(f"no breakaway up to {cfg.cap_n:g} N")


def scenario_simulator(mass: float, mu_static: float, sim_cfg: SimConfig = SimConfig()) -> Callable[[], Simulator]:
    friction = FrictionModel(mu_static=mu_static, mass=mass)
    return lambda: Simulator(sim_cfg, friction, SimState())
