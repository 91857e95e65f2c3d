"""Fixed per-node, per-channel input standardisation fitted on training frames.

Equivalent to a frozen data batch-norm in front of the first block: the
pelvis-relative coordinates carry a large common-mode pose, and the motion cue
lives in small deviations from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 0.01  # m; keeps near-constant coordinates from amplifying sensor noise


@dataclass(frozen=True)
class InputStats:
    joint_mean: np.ndarray  # (J, C)
    joint_std: np.ndarray
    bone_mean: np.ndarray  # (B, C)
    bone_std: np.ndarray

    def apply(self, joints: np.ndarray, bones: np.ndarray, dtype=None):
        """Standardise (..., J|B, C) feature arrays."""
        dtype = dtype or joints.dtype
        j = ((joints - self.joint_mean) / self.joint_std).astype(dtype, copy=False)
        b = ((bones - self.bone_mean) / self.bone_std).astype(dtype, copy=False)
        return j, b

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {
            "joint_mean": self.joint_mean,
            "joint_std": self.joint_std,
            "bone_mean": self.bone_mean,
            "bone_std": self.bone_std,
        }

    @classmethod
    def from_arrays(cls, d: dict[str, np.ndarray]) -> "InputStats":
        return cls(d["joint_mean"], d["joint_std"], d["bone_mean"], d["bone_std"])

    @classmethod
    def identity(cls, n_joints: int, n_bones: int, channels: int = 3) -> "InputStats":
        return cls(
            np.zeros((n_joints, channels)),
            np.ones((n_joints, channels)),
            np.zeros((n_bones, channels)),
            np.ones((n_bones, channels)),
        )


def fit_input_stats(joint_arrays: list[np.ndarray], bone_arrays: list[np.ndarray], floor: float = STD_FLOOR) -> InputStats:
    """Mean and floored standard deviation over all frames of all recordings."""
    j = np.concatenate(joint_arrays, axis=0)
    b = np.concatenate(bone_arrays, axis=0)
    return InputStats(
        j.mean(axis=0),
        np.maximum(j.std(axis=0), floor),
        b.mean(axis=0),
        np.maximum(b.std(axis=0), floor),
    )
