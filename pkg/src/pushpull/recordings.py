"""Sequence files (JSONL, one frame per line) and dataset manifests."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .synth import LabeledSequence, quasi_static_human_force

_DECIMALS = 6


class RecordingError(ValueError):
    pass


@dataclass
class Recording:
    """Arrays loaded back from a sequence file."""

    timestamps: np.ndarray
    joints: np.ndarray
    box_x: np.ndarray
    box_v: np.ndarray
    f_h: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamps)


def _r(x: float) -> float:
    return round(float(x), _DECIMALS)


def write_sequence(seq: LabeledSequence, path, f_h: np.ndarray | None = None) -> None:
    if f_h is None:
        fx = quasi_static_human_force(seq)
        f_h = np.stack([fx, np.zeros_like(fx), np.zeros_like(fx)], axis=1)
    with open(path, "w") as fh:
        for i in range(len(seq)):
            rec = {
                "t": _r(seq.timestamps[i]),
                "joints": [[_r(c) for c in joint] for joint in seq.joints[i]],
                "box_x": _r(seq.box_positions[i]),
                "box_v": _r(seq.box_velocities[i]),
                "f_h": [_r(c) for c in f_h[i]],
                "label": int(seq.labels[i]),
            }
            fh.write(json.dumps(rec) + "\n")


def read_sequence(path) -> Recording:
    t, joints, bx, bv, fh_, labels = [], [], [], [], [], []
    try:
        with open(path) as fh:
            for line_no, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                rec = json.loads(line)
                t.append(rec["t"])
                joints.append(rec["joints"])
                bx.append(rec["box_x"])
                bv.append(rec["box_v"])
                fh_.append(rec["f_h"])
                labels.append(rec["label"])
    except (json.JSONDecodeError, KeyError) as exc:
        raise RecordingError(f"{path}: malformed record near line {line_no}: {exc}") from exc
    if not t:
        raise RecordingError(f"{path}: no frames")
    return Recording(
        np.array(t),
        np.array(joints, dtype=float),
        np.array(bx),
        np.array(bv),
        np.array(fh_, dtype=float),
        np.array(labels, dtype=np.int8),
    )


def load_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    manifest = json.loads(path.read_text())
    manifest["_root"] = str(path.parent)
    return manifest


def manifest_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_split(manifest: dict, split: str) -> list[Recording]:
    root = Path(manifest.get("_root", "."))
    return [read_sequence(root / r["path"]) for r in manifest["recordings"] if r["split"] == split]
