"""Procedural generator of labelled skeleton sequences with a consistent box track.

The body is a stick figure facing -x, standing behind a box whose handle it
holds. During a push (-x) or pull (+x) the pelvis moves with the box on a
trapezoidal velocity profile while the whole body inclines into the motion.
The inclination starts 0.3-0.6 s before the box moves and relaxes 0.3-0.6 s
before it stops, which is the cue a classifier can use to anticipate labels.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .skeleton import FRAME_RATE, IntentionClass, SkeletonFrame, build_topology

V_DEAD = 0.005
PREP_TIME = 0.8  # idle-labelled lead-in inside a push/pull segment
POST_TIME = 0.2
LEAD_RANGE = (0.3, 0.6)
LEAN_RISE = 0.2  # duration of the smoothstep that brings the lean up or down
NOMINAL_SPEED = 0.05  # m/s mean speed at speed_scale 1 (0.30 m in 6 s)
ACCEL_TIME = 0.4
HANDLE_HEIGHT = 0.90
HANDLE_OFFSET = 0.30  # handle x relative to box centre
PARTICIPANT_SCALES = (0.90, 1.10)

_GRAPH = build_topology()
_J = {name: i for i, name in enumerate(_GRAPH.joint_names)}


class SynthError(ValueError):
    pass


class ActionKind(str, Enum):
    PUSH = "PUSH"
    PULL = "PULL"
    IDLE_STAND = "IDLE_STAND"
    IDLE_WAVE = "IDLE_WAVE"
    IDLE_EXERCISE = "IDLE_EXERCISE"

    @property
    def moves(self) -> bool:
        return self in (ActionKind.PUSH, ActionKind.PULL)


@dataclass(frozen=True)
class ActionSegmentSpec:
    kind: ActionKind
    duration: float
    speed_scale: float = 1.0
    amplitude_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ActionKind(self.kind))
        if not self.duration > 0:
            raise SynthError(f"segment duration must be positive, got {self.duration}")
        if self.kind.moves and self.duration <= PREP_TIME + POST_TIME:
            raise SynthError(
                f"{self.kind.value} segment needs more than {PREP_TIME + POST_TIME:.1f} s, got {self.duration}"
            )
        if not (self.speed_scale > 0 and self.amplitude_scale > 0):
            raise SynthError("speed_scale and amplitude_scale must be positive")

    @property
    def motion_time(self) -> float:
        return self.duration - PREP_TIME - POST_TIME if self.kind.moves else 0.0

    @property
    def distance(self) -> float:
        return NOMINAL_SPEED * self.speed_scale * self.motion_time


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    noise_std: float = 0.005
    frame_rate: float = FRAME_RATE
    lean_angle_max: float = 0.30
    arm_reach: float = 0.58
    target_label_mix: tuple[float, float, float] = (0.645, 0.180, 0.175)  # idle, pull, push
    limb_scale: float = 1.0
    v_dead: float = V_DEAD

    def __post_init__(self):
        if abs(sum(self.target_label_mix) - 1.0) > 1e-9:
            raise SynthError(f"label mix must sum to 1, got {sum(self.target_label_mix)}")
        if self.noise_std < 0:
            raise SynthError("noise_std must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["target_label_mix"] = list(self.target_label_mix)
        return d


@dataclass
class LabeledSequence:
    timestamps: np.ndarray  # (n,)
    joints: np.ndarray  # (n, J, 3) world frame
    box_positions: np.ndarray
    box_velocities: np.ndarray
    labels: np.ndarray  # int8 intention values
    config: SynthConfig
    script: list[ActionSegmentSpec]
    lean: np.ndarray = field(repr=False, default=None)  # torso inclination, radians
    handle: np.ndarray = field(repr=False, default=None)  # (n, 3) handle grip point

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def frames(self) -> list[SkeletonFrame]:
        return [SkeletonFrame(float(t), p) for t, p in zip(self.timestamps, self.joints)]

    @property
    def script_hash(self) -> str:
        blob = json.dumps([[s.kind.value, s.duration, s.speed_scale, s.amplitude_scale] for s in self.script])
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def label_frames(box_velocities: np.ndarray, v_dead: float = V_DEAD) -> np.ndarray:
    """PUSH for motion toward -x, PULL toward +x, IDLE inside the deadband."""
    if not v_dead > 0:
        raise SynthError("v_dead must be positive")
    v = np.asarray(box_velocities, dtype=float)
    labels = np.zeros(v.shape, dtype=np.int8)
    labels[v < -v_dead] = IntentionClass.PUSH
    labels[v > v_dead] = IntentionClass.PULL
    return labels


def smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def trapezoid_profile(tau: np.ndarray, duration: float, distance: float) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity of a trapezoidal move of ``distance`` over ``duration``.

    ``tau`` is time since motion onset; values outside [0, duration] clamp.
    """
    ramp = min(ACCEL_TIME, duration / 4.0)
    v_peak = distance / (duration - ramp)
    acc = v_peak / ramp
    tau = np.clip(tau, 0.0, duration)
    pos = np.where(
        tau < ramp,
        0.5 * acc * tau**2,
        np.where(
            tau <= duration - ramp,
            0.5 * acc * ramp**2 + v_peak * (tau - ramp),
            distance - 0.5 * acc * (duration - tau) ** 2,
        ),
    )
    vel = np.where(tau < ramp, acc * tau, np.where(tau <= duration - ramp, v_peak, acc * (duration - tau)))
    return pos, vel


@dataclass(frozen=True)
class _Body:
    scale: float
    lean_max: float

    @property
    def hip_height(self) -> float:
        return 0.95 * self.scale

    @property
    def torso(self) -> tuple[float, float, float, float]:
        s = self.scale
        return 0.12 * s, 0.18 * s, 0.12 * s, 0.10 * s  # spine, chest, neck, head

    @property
    def arm(self) -> tuple[float, float]:
        return 0.30 * self.scale, 0.28 * self.scale

    @property
    def leg(self) -> tuple[float, float]:
        return 0.45 * self.scale, 0.45 * self.scale

    @property
    def shoulder_half_width(self) -> float:
        return 0.18 * self.scale

    @property
    def chest_height(self) -> float:
        return sum(self.torso[:2])

    def standoff(self) -> float:
        """Horizontal pelvis-to-handle distance keeping the handle in reach at full pull lean."""
        upper, fore = self.arm
        reach = 0.95 * (upper + fore)
        th = -self.lean_max
        shoulder_z = self.hip_height + self.chest_height * np.cos(th)
        dz = shoulder_z - HANDLE_HEIGHT
        dx_lean = -self.chest_height * np.sin(th)  # shoulder x offset (toward +x when pulling)
        dx = np.sqrt(max(reach**2 - dz**2, 0.0))
        # handle is at -x of the pelvis; when pulling the shoulder sits dx_lean behind the pelvis
        return dx - dx_lean


def _two_link(shoulder: np.ndarray, wrist: np.ndarray, upper: float, fore: float, pole: np.ndarray):
    """Elbow position for a planar two-link chain; the wrist is clamped to reach."""
    d = wrist - shoulder
    dist = np.linalg.norm(d, axis=-1, keepdims=True)
    reach = upper + fore - 1e-6
    scale = np.minimum(1.0, reach / np.maximum(dist, 1e-9))
    wrist = shoulder + d * scale
    d = wrist - shoulder
    dist = np.maximum(np.linalg.norm(d, axis=-1, keepdims=True), abs(upper - fore) + 1e-6)
    u = d / dist
    along = (upper**2 - fore**2 + dist**2) / (2 * dist)
    h = np.sqrt(np.maximum(upper**2 - along**2, 0.0))
    n = pole - np.sum(pole * u, axis=-1, keepdims=True) * u
    n = n / np.maximum(np.linalg.norm(n, axis=-1, keepdims=True), 1e-9)
    return shoulder + along * u + h * n, wrist


def _segment_rng(seed_seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.default_rng(seed_seq)


def generate_sequence(config: SynthConfig, script: Sequence[ActionSegmentSpec]) -> LabeledSequence:
    if not script:
        raise SynthError("script is empty")
    script = [s if isinstance(s, ActionSegmentSpec) else ActionSegmentSpec(**s) for s in script]
    rate = config.frame_rate
    body = _Body(config.limb_scale, config.lean_angle_max)
    root = np.random.SeedSequence(config.seed)
    seg_seeds = root.spawn(len(script) + 1)
    noise_rng = _segment_rng(seg_seeds[-1])

    counts = [int(round(s.duration * rate)) for s in script]
    n = sum(counts)
    t = np.arange(n) / rate

    box_x = np.zeros(n)
    box_v = np.zeros(n)
    lean = np.zeros(n)  # + leans toward -x (pushing)
    side = np.zeros(n)  # lateral bend
    squat = np.zeros(n)  # 0..1 knee bend
    left_free = np.zeros(n)  # 0 = on handle, 1 = hand fully away
    right_free = np.zeros(n)
    left_target = np.zeros((n, 3))  # hand targets when free, relative to shoulder
    right_target = np.zeros((n, 3))

    x0 = 0.0
    start = 0
    for spec, count, ss in zip(script, counts, seg_seeds):
        rng = _segment_rng(ss)
        sl = slice(start, start + count)
        tau = np.arange(count) / rate
        box_x[sl] = x0
        if spec.kind.moves:
            sign = -1.0 if spec.kind is ActionKind.PUSH else 1.0
            motion = spec.motion_time
            pos, vel = trapezoid_profile(tau - PREP_TIME, motion, spec.distance)
            box_x[sl] = x0 + sign * pos
            box_v[sl] = sign * vel
            x0 += sign * spec.distance
            lead_in = rng.uniform(*LEAD_RANGE)
            lead_out = rng.uniform(*LEAD_RANGE)
            peak = config.lean_angle_max * min(spec.amplitude_scale, 1.0)
            up = smoothstep((tau - (PREP_TIME - lead_in - LEAN_RISE / 2)) / LEAN_RISE)
            down = 1.0 - smoothstep((tau - (PREP_TIME + motion - lead_out - LEAN_RISE / 2)) / LEAN_RISE)
            # push leans forward (toward -x); pull leans back
            lean[sl] = -sign * peak * up * down
            lean[sl] += 0.01 * np.sin(2 * np.pi * 0.3 * tau + rng.uniform(0, 2 * np.pi))
        elif spec.kind is ActionKind.IDLE_STAND:
            f = rng.uniform(0.15, 0.4)
            lean[sl] = rng.uniform(0.01, 0.03) * np.sin(2 * np.pi * f * tau + rng.uniform(0, 2 * np.pi))
            side[sl] = rng.uniform(0.0, 0.03) * np.sin(2 * np.pi * f * 0.7 * tau + rng.uniform(0, 2 * np.pi))
        elif spec.kind is ActionKind.IDLE_WAVE:
            env = _envelope(tau, spec.duration)
            f = rng.uniform(1.0, 2.0) * spec.speed_scale
            right_free[sl] = env
            amp = 0.15 * spec.amplitude_scale * body.scale
            right_target[sl] = np.stack(
                [
                    np.full(count, -0.10 * body.scale),
                    -0.15 * body.scale - amp * np.sin(2 * np.pi * f * tau),
                    np.full(count, 0.45 * body.scale),
                ],
                axis=1,
            )
            lean[sl] = 0.015 * np.sin(2 * np.pi * 0.25 * tau + rng.uniform(0, 2 * np.pi))
        else:  # IDLE_EXERCISE: squats, side bends and overhead arm raises
            env = _envelope(tau, spec.duration)
            f = rng.uniform(0.3, 0.6) * spec.speed_scale
            phase = 2 * np.pi * f * tau + rng.uniform(0, 2 * np.pi)
            squat[sl] = env * 0.5 * (1 - np.cos(phase)) * 0.6 * spec.amplitude_scale
            side[sl] = env * 0.25 * spec.amplitude_scale * np.sin(phase / 2)
            raise_amt = 0.5 * (1 - np.cos(phase + np.pi / 2))
            left_free[sl] = env
            right_free[sl] = env
            for target, y in ((left_target, 1.0), (right_target, -1.0)):
                target[sl] = np.stack(
                    [
                        np.full(count, -0.05 * body.scale),
                        y * 0.1 * body.scale * np.ones(count),
                        (-0.45 + 0.95 * raise_amt) * body.scale,
                    ],
                    axis=1,
                )
        start += count

    joints, handle = _pose(body, t, box_x, lean, side, squat, left_free, right_free, left_target, right_target)
    if config.noise_std > 0:
        noise = noise_rng.normal(0.0, config.noise_std, size=joints.shape)
        noise[:, _J["pelvis"]] = 0.0  # pelvis is the reference anchor
        joints = joints + noise
    labels = label_frames(box_v, config.v_dead)
    return LabeledSequence(t, joints, box_x, box_v, labels, config, list(script), lean, handle)


def _envelope(tau: np.ndarray, duration: float, ramp: float = 0.4) -> np.ndarray:
    ramp = min(ramp, duration / 2)
    return smoothstep(tau / ramp) * smoothstep((duration - tau) / ramp)


def _rot_y(v: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rotate vectors about +y; positive theta tips +z toward -x."""
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    x, y, z = v[..., 0:1], v[..., 1:2], v[..., 2:3]
    return np.concatenate([c * x - s * z, y, s * x + c * z], axis=-1)


def _rot_x(v: np.ndarray, phi: np.ndarray) -> np.ndarray:
    c, s = np.cos(phi)[:, None], np.sin(phi)[:, None]
    x, y, z = v[..., 0:1], v[..., 1:2], v[..., 2:3]
    return np.concatenate([x, c * y - s * z, s * y + c * z], axis=-1)


def _pose(body: _Body, t, box_x, lean, side, squat, left_free, right_free, left_target, right_target):
    n = len(t)
    s = body.scale
    out = np.zeros((n, len(_GRAPH.joint_names), 3))

    pelvis = np.stack([box_x + HANDLE_OFFSET + body.standoff(), np.zeros(n), np.full(n, body.hip_height)], axis=1)
    pelvis[:, 2] -= squat * 0.25 * s
    out[:, _J["pelvis"]] = pelvis

    def incline(v):
        return _rot_x(_rot_y(v, lean), side)

    up = np.array([0.0, 0.0, 1.0])
    spine_l, chest_l, neck_l, head_l = body.torso
    heights = np.cumsum([spine_l, chest_l, neck_l, head_l])
    for name, h in zip(("spine", "chest", "neck", "head"), heights):
        out[:, _J[name]] = pelvis + incline(np.broadcast_to(up * h, (n, 3)))
    chest = out[:, _J["chest"]]

    handle = np.stack([box_x + HANDLE_OFFSET, np.zeros(n), np.full(n, HANDLE_HEIGHT)], axis=1)
    upper, fore = body.arm
    for side_name, y, free, target in (("l", 1.0, left_free, left_target), ("r", -1.0, right_free, right_target)):
        shoulder = chest + incline(np.broadcast_to(np.array([0.0, y * body.shoulder_half_width, 0.0]), (n, 3)))
        grip = handle + np.array([0.0, y * 0.20 * s, 0.0])
        free_pos = shoulder + target
        w = free[:, None]
        wrist_goal = (1 - w) * grip + w * free_pos
        pole = np.broadcast_to(np.array([0.3, y * 0.6, -1.0]), (n, 3))
        elbow, wrist = _two_link(shoulder, wrist_goal, upper, fore, pole)
        out[:, _J[f"{side_name}_shoulder"]] = shoulder
        out[:, _J[f"{side_name}_elbow"]] = elbow
        out[:, _J[f"{side_name}_wrist"]] = wrist

    # legs: body inclination puts the feet on the opposite side of the pelvis;
    # gait phase follows box displacement so stepping only happens while moving
    thigh, shank = body.leg
    leg_len = thigh + shank
    stride = 0.6 * s
    phase = 2 * np.pi * (box_x - box_x[0]) / stride
    for side_name, y, sgn in (("l", 1.0, 1.0), ("r", -1.0, -1.0)):
        hip = pelvis + np.stack([np.zeros(n), np.full(n, y * 0.10 * s), np.zeros(n)], axis=1)
        step = sgn * 0.12 * s * np.sin(phase)
        lift = 0.04 * s * np.maximum(0.0, sgn * np.cos(phase)) * (np.abs(np.gradient(box_x)) > 1e-6)
        ankle = np.stack(
            [
                pelvis[:, 0] + leg_len * np.sin(lean) * 0.8 + step,
                np.full(n, y * 0.12 * s),
                np.full(n, 0.05 * s) + lift,
            ],
            axis=1,
        )
        knee, ankle = _two_link(hip, ankle, thigh, shank, np.broadcast_to(np.array([-1.0, 0.0, 0.0]), (n, 3)))
        out[:, _J[f"{side_name}_hip"]] = hip
        out[:, _J[f"{side_name}_knee"]] = knee
        out[:, _J[f"{side_name}_ankle"]] = ankle
    return out, handle


# nominal object used to fill the human-force column of synthetic recordings
_NOMINAL_MASS = 27.7
_NOMINAL_MU_KINETIC = 0.9 * 0.239


def quasi_static_human_force(seq: LabeledSequence, mass: float = _NOMINAL_MASS, mu_k: float = _NOMINAL_MU_KINETIC) -> np.ndarray:
    """Human force (x) that would drive the box along its recorded track."""
    acc = np.gradient(seq.box_velocities, 1.0 / seq.config.frame_rate)
    moving = np.abs(seq.box_velocities) > 1e-9
    fx = mass * acc + np.where(moving, np.sign(seq.box_velocities) * mu_k * mass * 9.81, 0.0)
    return fx


def random_script(
    rng: np.random.Generator,
    n_actions: int,
    mix: tuple[float, float, float],
    motion_range: tuple[float, float] = (0.6, 1.4),
) -> list[ActionSegmentSpec]:
    """Alternating pulls/pushes separated by idle segments sized to hit ``mix``."""
    idle_frac, pull_frac, push_frac = mix
    first_pull = bool(rng.integers(0, 2))
    kinds = [
        ActionKind.PULL if (i % 2 == 0) == first_pull else ActionKind.PUSH for i in range(n_actions)
    ]
    motion = rng.uniform(*motion_range, size=n_actions)
    speeds = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=n_actions))
    total = motion.sum()
    is_pull = np.array([k is ActionKind.PULL for k in kinds])
    motion_frac = pull_frac + push_frac
    if is_pull.any():
        motion[is_pull] *= total * pull_frac / motion_frac / motion[is_pull].sum()
    if (~is_pull).any():
        motion[~is_pull] *= total * push_frac / motion_frac / motion[~is_pull].sum()
    motion = np.round(motion, 2)
    # frames at each end of a move sit inside the velocity deadband and count as idle
    ramp = np.minimum(ACCEL_TIME, motion / 4.0)
    acc = NOMINAL_SPEED * speeds * motion / (motion - ramp) / ramp
    deadband = 2.0 * np.minimum(V_DEAD / acc, ramp)
    labelled = motion - deadband
    idle_total = labelled.sum() * idle_frac / motion_frac - n_actions * (PREP_TIME + POST_TIME) - deadband.sum()
    if idle_total <= 0.3 * (n_actions + 1):
        raise SynthError("label mix leaves no room for idle segments")
    slots = rng.dirichlet(np.full(n_actions + 1, 2.0)) * (idle_total - 0.3 * (n_actions + 1)) + 0.3

    script: list[ActionSegmentSpec] = []
    for i in range(n_actions + 1):
        dur = round(float(slots[i]), 2)
        if dur >= 1.5:
            options = (ActionKind.IDLE_STAND, ActionKind.IDLE_WAVE, ActionKind.IDLE_EXERCISE)
            kind = options[rng.choice(3, p=[0.5, 0.25, 0.25])]
        else:
            kind = ActionKind.IDLE_STAND
        script.append(
            ActionSegmentSpec(kind, dur, float(rng.uniform(0.7, 1.4)), float(rng.uniform(0.7, 1.3)))
        )
        if i < n_actions:
            script.append(
                ActionSegmentSpec(
                    kinds[i], float(motion[i]) + PREP_TIME + POST_TIME, float(speeds[i]), float(rng.uniform(0.6, 1.0))
                )
            )
    return script


def realized_mix(labels: np.ndarray) -> tuple[float, float, float]:
    """Fractions of (idle, pull, push) frames."""
    n = max(len(labels), 1)
    return (
        float(np.sum(labels == IntentionClass.IDLE) / n),
        float(np.sum(labels == IntentionClass.PULL) / n),
        float(np.sum(labels == IntentionClass.PUSH) / n),
    )


def count_actions(labels: np.ndarray) -> int:
    moving = labels != 0
    starts = moving & ~np.concatenate([[False], moving[:-1]])
    return int(starts.sum())


MIX_TOLERANCE = 0.03
MAX_RESAMPLES = 20
ACTIONS_PER_RECORDING = 9


def generate_recording(
    config: SynthConfig,
    seed: int,
    limb_scale: float,
    n_actions: int = ACTIONS_PER_RECORDING,
    motion_range: tuple[float, float] = (0.6, 1.4),
) -> LabeledSequence:
    """One randomized recording whose label mix is within tolerance of the target."""
    rng = np.random.default_rng(seed)
    cfg = SynthConfig(**{**config.to_dict(), "seed": seed, "limb_scale": limb_scale,
                         "target_label_mix": tuple(config.target_label_mix)})
    mix = None
    for _ in range(MAX_RESAMPLES):
        script = random_script(rng, n_actions, config.target_label_mix, motion_range)
        seq = generate_sequence(cfg, script)
        mix = realized_mix(seq.labels)
        if all(abs(a - b) <= MIX_TOLERANCE for a, b in zip(mix, config.target_label_mix)):
            return seq
    raise SynthError(
        f"label mix {tuple(round(m, 3) for m in mix)} not within ±{MIX_TOLERANCE} of "
        f"{config.target_label_mix} after {MAX_RESAMPLES} resamplings"
    )


def build_dataset(
    config: SynthConfig,
    n_train_recordings: int = 22,
    n_val_recordings: int = 6,
    out_dir=None,
    n_actions: int = ACTIONS_PER_RECORDING,
    motion_range: tuple[float, float] = (0.6, 1.4),
) -> dict:
    """Generate train/val recordings, write them as JSONL plus ``manifest.json``.

    Returns the manifest. Recordings alternate between the two participant
    limb scales; every recording gets its own seed from one seed sequence, so
    train and validation seeds never collide.
    """
    from pathlib import Path

    from .recordings import write_sequence

    if n_train_recordings < 1 or n_val_recordings < 1:
        raise SynthError("need at least one training and one validation recording")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    total = n_train_recordings + n_val_recordings
    children = np.random.SeedSequence(config.seed).spawn(total)
    seeds = [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]
    if len(set(seeds)) != total:
        raise SynthError("seed collision between recordings")

    records = []
    all_labels = []
    for i, seed in enumerate(seeds):
        split = "train" if i < n_train_recordings else "val"
        scale = PARTICIPANT_SCALES[i % len(PARTICIPANT_SCALES)]
        seq = generate_recording(config, seed, scale, n_actions, motion_range)
        name = f"{split}_{i:03d}.jsonl"
        if out is not None:
            write_sequence(seq, out / name)
        mix = realized_mix(seq.labels)
        all_labels.append(seq.labels)
        records.append(
            {
                "path": name,
                "seed": seed,
                "n_frames": len(seq),
                "mix": [round(m, 6) for m in mix],
                "n_actions": count_actions(seq.labels),
                "split": split,
                "participant_scale": scale,
                "script_hash": seq.script_hash,
            }
        )
    labels = np.concatenate(all_labels)
    manifest = {
        "format": "pushpull-dataset",
        "config": config.to_dict(),
        "recordings": records,
        "realized_mix": [round(m, 6) for m in realized_mix(labels)],
        "n_actions": int(sum(r["n_actions"] for r in records)),
        "n_frames": int(len(labels)),
    }
    if out is not None:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
