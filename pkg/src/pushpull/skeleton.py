"""Skeleton topology, per-frame preprocessing and sliding-window assembly.

The skeleton is a 17-joint tree rooted at the pelvis. Bones are directed away
from the root, which gives the source/target incidence structure the graph
network consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

FRAME_RATE = 100.0
WINDOW_LENGTH = 50
MAX_FRAME_GAP = 0.020
TIMESTAMP_TOLERANCE = 0.001
INCIDENCE_EPS = 1e-6

JOINT_NAMES = (
    "pelvis",
    "spine",
    "chest",
    "neck",
    "head",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_hip",
    "r_knee",
    "r_ankle",
)

# (parent, child) pairs, listed so that every parent appears before its children
_BONES = (
    ("pelvis", "spine"),
    ("spine", "chest"),
    ("chest", "neck"),
    ("neck", "head"),
    ("chest", "l_shoulder"),
    ("l_shoulder", "l_elbow"),
    ("l_elbow", "l_wrist"),
    ("chest", "r_shoulder"),
    ("r_shoulder", "r_elbow"),
    ("r_elbow", "r_wrist"),
    ("pelvis", "l_hip"),
    ("l_hip", "l_knee"),
    ("l_knee", "l_ankle"),
    ("pelvis", "r_hip"),
    ("r_hip", "r_knee"),
    ("r_knee", "r_ankle"),
)


class SkeletonError(ValueError):
    """Invalid frame or window input."""


class IntentionClass(IntEnum):
    PULL = -1
    IDLE = 0
    PUSH = 1

    @property
    def index(self) -> int:
        """Position in the (pull, idle, push) logit vector."""
        return int(self) + 1

    @classmethod
    def from_index(cls, idx: int) -> "IntentionClass":
        return cls(int(idx) - 1)


@dataclass(frozen=True)
class DirectedSkeletonGraph:
    joint_names: tuple[str, ...]
    bones: tuple[tuple[int, int], ...]
    root_joint: int = 0

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    @property
    def bone_count(self) -> int:
        return len(self.bones)

    @property
    def sources(self) -> np.ndarray:
        return np.array([s for s, _ in self.bones], dtype=int)

    @property
    def targets(self) -> np.ndarray:
        return np.array([t for _, t in self.bones], dtype=int)

    def joint(self, name: str) -> int:
        return self.joint_names.index(name)

    def parent_of(self, joint: int) -> int | None:
        for s, t in self.bones:
            if t == joint:
                return s
        return None

    def path_from_root(self, joint: int) -> list[int]:
        path = [joint]
        while path[-1] != self.root_joint:
            parent = self.parent_of(path[-1])
            if parent is None:
                raise SkeletonError(f"joint {joint} not reachable from root")
            path.append(parent)
        return path[::-1]

    def permuted(self, perm: Sequence[int]) -> "DirectedSkeletonGraph":
        """Relabel joints so that old joint ``perm[i]`` becomes joint ``i``."""
        inv = np.argsort(perm)
        names = tuple(self.joint_names[p] for p in perm)
        bones = tuple((int(inv[s]), int(inv[t])) for s, t in self.bones)
        return DirectedSkeletonGraph(names, bones, int(inv[self.root_joint]))


@dataclass(frozen=True)
class SkeletonFrame:
    timestamp: float
    joint_positions: np.ndarray  # (J, 3), metres


@dataclass(frozen=True)
class FeatureWindow:
    joints: np.ndarray  # (T, J, 3), pelvis-relative
    bones: np.ndarray  # (T, B, 3)
    end_timestamp: float

    @property
    def window_length(self) -> int:
        return self.joints.shape[0]


@dataclass(frozen=True)
class IncidencePair:
    source: np.ndarray  # (J, B), normalized
    target: np.ndarray
    source_raw: np.ndarray
    target_raw: np.ndarray


def build_topology() -> DirectedSkeletonGraph:
    names = JOINT_NAMES
    bones = tuple((names.index(p), names.index(c)) for p, c in _BONES)
    return DirectedSkeletonGraph(names, bones, names.index("pelvis"))


def _check_frame(frame: SkeletonFrame, graph: DirectedSkeletonGraph) -> np.ndarray:
    pos = np.asarray(frame.joint_positions, dtype=float)
    if pos.shape != (graph.joint_count, 3):
        raise SkeletonError(
            f"expected joint array of shape ({graph.joint_count}, 3), got {pos.shape}"
        )
    if not np.all(np.isfinite(pos)) or not np.isfinite(frame.timestamp):
        raise SkeletonError(f"non-finite values in frame at t={frame.timestamp}")
    return pos


def to_pelvis_frame(frame: SkeletonFrame, graph: DirectedSkeletonGraph) -> SkeletonFrame:
    pos = _check_frame(frame, graph)
    return SkeletonFrame(frame.timestamp, pos - pos[graph.root_joint])


def bones_from_joints(frame: SkeletonFrame, graph: DirectedSkeletonGraph) -> np.ndarray:
    pos = _check_frame(frame, graph)
    return pos[graph.targets] - pos[graph.sources]


def joints_to_features(joints: np.ndarray, graph: DirectedSkeletonGraph) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised preprocessing for a (..., J, 3) stack of world-frame joints.

    Returns pelvis-relative joints and bone vectors with the same leading shape.
    """
    rel = joints - joints[..., graph.root_joint : graph.root_joint + 1, :]
    bones = rel[..., graph.targets, :] - rel[..., graph.sources, :]
    return rel, bones


def make_window(
    frames: Sequence[SkeletonFrame],
    graph: DirectedSkeletonGraph,
    length: int = WINDOW_LENGTH,
) -> FeatureWindow:
    if len(frames) != length:
        raise SkeletonError(f"window needs exactly {length} frames, got {len(frames)}")
    stamps = np.array([f.timestamp for f in frames], dtype=float)
    gaps = np.diff(stamps)
    if np.any(gaps <= 0):
        raise SkeletonError("frame timestamps must be strictly increasing")
    if np.any(gaps > MAX_FRAME_GAP + 1e-9):
        worst = float(gaps.max())
        raise SkeletonError(f"timestamp gap of {worst * 1000:.1f} ms exceeds {MAX_FRAME_GAP * 1000:.0f} ms")
    joints = np.stack([_check_frame(f, graph) for f in frames])
    rel, bones = joints_to_features(joints, graph)
    return FeatureWindow(rel, bones, float(stamps[-1]))


def incidence_matrices(graph: DirectedSkeletonGraph, eps: float = INCIDENCE_EPS) -> IncidencePair:
    J, B = graph.joint_count, graph.bone_count
    src = np.zeros((J, B))
    tgt = np.zeros((J, B))
    for b, (s, t) in enumerate(graph.bones):
        src[s, b] = 1.0
        tgt[t, b] = 1.0

    def normalize(a: np.ndarray) -> np.ndarray:
        deg = a.sum(axis=1, keepdims=True)
        return a / (deg + eps)

    return IncidencePair(normalize(src), normalize(tgt), src, tgt)


def is_spanning_tree(n_joints: int, bones: Sequence[tuple[int, int]], root: int = 0) -> bool:
    """Connected, acyclic and every non-root joint has exactly one parent."""
    if len(bones) != n_joints - 1:
        return False
    indegree = np.zeros(n_joints, dtype=int)
    children: dict[int, list[int]] = {}
    for s, t in bones:
        indegree[t] += 1
        children.setdefault(s, []).append(t)
    if indegree[root] != 0 or np.any(np.delete(indegree, root) != 1):
        return False
    seen = {root}
    stack = [root]
    while stack:
        for c in children.get(stack.pop(), []):
            if c in seen:
                return False
            seen.add(c)
            stack.append(c)
    return len(seen) == n_joints
