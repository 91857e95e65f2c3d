"""Closed-loop push/pull trials: a scripted simulated participant moves the box,
with or without the robot assisting from predicted intentions."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .controller import STALE_LIMIT, AssistConfig, AssistController, explore_object, scenario_simulator
from .dgnn.checkpoint import Checkpoint
from .dgnn.model import predict_logits, select_classes
from .evaluation import TrialLog
from .physics import FrictionModel, HumanForcePolicy, SimConfig, SimState, Simulator
from .skeleton import FRAME_RATE, WINDOW_LENGTH, build_topology, incidence_matrices, joints_to_features
from .synth import NOMINAL_SPEED, POST_TIME, PREP_TIME, ActionKind, ActionSegmentSpec, SynthConfig, generate_sequence

log = logging.getLogger(__name__)

WATCHDOG_LIMIT = 0.5  # s without a fresh intention before the trial aborts


class ScenarioError(ValueError):
    pass


class WatchdogTripped(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    mass: float
    mu_static: float
    task_time: float
    name: str = "scenario"
    f_com: float | None = None
    distance: float = 0.30
    participant_scale: float = 1.0
    condition: str = "dry"
    repetitions: int = 10
    seed: int = 0
    idle_lead: float = 2.0
    idle_gap: float = 2.0
    sensor_noise_std: float = 0.5
    skeleton_noise_std: float = 0.005
    human_kp: float = 10000.0
    human_kd: float = 600.0
    human_f_max: float = 120.0

    def __post_init__(self):
        if not self.distance > 0:
            raise ScenarioError("distance must be positive")
        if self.repetitions < 1:
            raise ScenarioError("repetitions must be >= 1")
        if self.condition not in ("dry", "assisted"):
            raise ScenarioError(f"condition must be dry or assisted, got {self.condition!r}")
        if not (self.mass > 0 and self.mu_static >= 0 and self.task_time > 0):
            raise ScenarioError("mass and task_time must be positive, mu_static non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ScenarioError(f"unknown scenario fields {sorted(unknown)}")
        return cls(**d)


def load_scenario(path) -> ScenarioSpec:
    return ScenarioSpec.from_dict(json.loads(Path(path).read_text()))


def save_scenario(spec: ScenarioSpec, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


# bundled object scenarios; participant 1 is the smaller synthetic body, participant 2 the larger one
SCENARIOS = {
    "exp1": dict(mass=27.7, mu_static=0.239, task_time=6.0, f_com=65.0, participant_scale=0.9),
    "exp2": dict(mass=27.7, mu_static=0.239, task_time=10.0, f_com=65.0, participant_scale=0.9),
    "exp3": dict(mass=36.0, mu_static=0.227, task_time=6.0, f_com=80.0, participant_scale=0.9),
    "exp4": dict(mass=36.0, mu_static=0.227, task_time=10.0, f_com=80.0, participant_scale=0.9),
    "exp5": dict(mass=36.0, mu_static=0.227, task_time=6.0, f_com=80.0, participant_scale=1.1),
    "exp6": dict(mass=36.0, mu_static=0.227, task_time=10.0, f_com=80.0, participant_scale=1.1),
}


def table_scenario(name: str, **overrides) -> ScenarioSpec:
    return ScenarioSpec(name=name, **{**SCENARIOS[name], **overrides})


def trial_script(spec: ScenarioSpec) -> list[ActionSegmentSpec]:
    """Idle lead-in, then alternating pulls and pushes separated by idle gaps."""
    speed = spec.distance / (NOMINAL_SPEED * spec.task_time)
    script = [ActionSegmentSpec(ActionKind.IDLE_STAND, spec.idle_lead)]
    for r in range(spec.repetitions):
        kind = ActionKind.PULL if r % 2 == 0 else ActionKind.PUSH
        script.append(ActionSegmentSpec(kind, spec.task_time + PREP_TIME + POST_TIME, speed_scale=speed))
        script.append(ActionSegmentSpec(ActionKind.IDLE_STAND, spec.idle_gap))
    return script


def participant_motion(spec: ScenarioSpec):
    cfg = SynthConfig(seed=spec.seed, noise_std=spec.skeleton_noise_std, limb_scale=spec.participant_scale)
    return generate_sequence(cfg, trial_script(spec))


def runtime_logits(seq, checkpoint: Checkpoint, window: int = WINDOW_LENGTH, dtype=np.float32) -> np.ndarray:
    """Logits for the window ending at every frame (NaN rows before the first full window).

    The participant's posture follows the planned motion, and the features are
    pelvis-relative, so all windows can be evaluated up front.
    """
    graph = build_topology()
    inc = incidence_matrices(graph)
    rel, bones = joints_to_features(seq.joints, graph)
    if checkpoint.input_stats is not None:
        rel, bones = checkpoint.input_stats.apply(rel, bones)
    params = {k: v.astype(dtype) for k, v in checkpoint.params.items()}
    n = len(seq)
    out = np.full((n, 3), np.nan)
    chunk = 256
    for s in range(window - 1, n, chunk):
        ends = np.arange(s, min(s + chunk, n))
        idx = ends[None, :] + np.arange(-window + 1, 1)[:, None]  # (T, N)
        out[ends] = predict_logits(rel[idx].astype(dtype), bones[idx].astype(dtype), params, inc, chunk)
    return out


def run_trial(
    spec: ScenarioSpec,
    checkpoint: Checkpoint | None = None,
    logits: np.ndarray | None = None,
    sim_config: SimConfig | None = None,
) -> TrialLog:
    """Simulate one trial at the control rate; physics sub-steps at ``sim_config.dt``.

    ``logits`` may be supplied directly (one row per control tick, NaN = no fresh
    prediction) instead of a checkpoint.
    """
    assisted = spec.condition == "assisted"
    seq = participant_motion(spec)
    n = len(seq)
    if assisted and logits is None:
        if checkpoint is None:
            raise ScenarioError("assisted trials need a checkpoint")
        logits = runtime_logits(seq, checkpoint)
    if logits is not None and len(logits) != n:
        raise ScenarioError(f"need {n} logit rows, got {len(logits)}")

    f_com = spec.f_com
    if assisted and f_com is None:
        f_com = explore_object(scenario_simulator(spec.mass, spec.mu_static))
    sim_config = sim_config or SimConfig(
        sensor_noise_std=spec.sensor_noise_std, seed=spec.seed, robot_attached=assisted
    )
    sim = Simulator(sim_config, FrictionModel(spec.mu_static, spec.mass), SimState())
    tick = 1.0 / FRAME_RATE
    sub = int(round(tick / sim_config.dt))
    # desired box track at physics resolution
    t_fine = np.arange(n * sub) * sim_config.dt
    x_des = np.interp(t_fine, seq.timestamps, seq.box_positions)
    v_des = np.interp(t_fine, seq.timestamps, seq.box_velocities)
    policy = HumanForcePolicy(lambda t: (0.0, 0.0), spec.human_kp, spec.human_kd, spec.human_f_max)

    controller = AssistController(AssistConfig(f_com=f_com or 0.0)) if assisted else None
    cols = {k: np.zeros(n) for k in ("box_x", "box_v", "f_h_x", "f_h_norm", "f_r_x", "f_d_x", "u_x")}
    intent_raw = np.zeros(n, dtype=int)
    intent_filtered = np.zeros(n, dtype=int)
    raw_classes = np.zeros(n, dtype=int)
    if logits is not None:
        fresh = np.all(np.isfinite(logits), axis=1)
        raw_classes[fresh] = select_classes(logits[fresh])
    f_r_x = 0.0
    cmd = 0.0
    last_fresh = None
    for k in range(n):
        t = k * tick
        u = 0.0
        f_d_x = 0.0
        filtered = 0
        if assisted:
            row = logits[k]
            if np.all(np.isfinite(row)):
                last_fresh = t
                res = controller.tick(t, row, f_r_x, sim)
            else:
                age = np.inf if last_fresh is None else t - last_fresh
                if last_fresh is not None and age > WATCHDOG_LIMIT:
                    raise WatchdogTripped(f"no fresh intention for {age:.2f} s at t={t:.2f}")
                res = controller.tick(t, None, f_r_x, sim, intent_age=age if age > STALE_LIMIT else 0.0)
            u, f_d_x, filtered = res.u_x, res.f_d_x, int(res.intent_filtered)
        readings = None
        base = k * sub
        for i in range(sub):
            st = sim.state
            j = base + i
            f = policy.kp * (x_des[j] - st.box_x) + policy.kd * (v_des[j] - st.box_v)
            f = min(max(f, -policy.f_max), policy.f_max)
            readings = sim.step(f, cmd + u * (i + 1) / sub)
        cmd += u
        f_r_x = float(readings.f_r[0])
        cols["box_x"][k] = readings.box_x
        cols["box_v"][k] = readings.box_v
        cols["f_h_x"][k] = readings.f_h[0]
        cols["f_h_norm"][k] = float(np.linalg.norm(readings.f_h))
        cols["f_r_x"][k] = f_r_x
        cols["f_d_x"][k] = f_d_x
        cols["u_x"][k] = u
        intent_raw[k] = raw_classes[k]
        intent_filtered[k] = filtered
    return TrialLog(
        t=np.round(seq.timestamps, 6),
        intent_raw=intent_raw,
        intent_filtered=intent_filtered,
        condition=spec.condition,
        scenario=spec.name,
        labels=seq.labels.astype(int),
        **cols,
    )


def with_condition(spec: ScenarioSpec, condition: str) -> ScenarioSpec:
    return replace(spec, condition=condition)
