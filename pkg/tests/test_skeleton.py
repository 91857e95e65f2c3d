import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pushpull.skeleton import (
    IntentionClass,
    SkeletonError,
    SkeletonFrame,
    bones_from_joints,
    build_topology,
    incidence_matrices,
    is_spanning_tree,
    make_window,
    to_pelvis_frame,
)

G = build_topology()


def random_frames(n=50, seed=0, start=0.0):
    rng = np.random.default_rng(seed)
    return [SkeletonFrame(start + i / 100, rng.normal(size=(17, 3))) for i in range(n)]


def test_topology_sizes_and_root():
    assert G.joint_count == 17
    assert G.bone_count == 16
    pelvis = G.joint("pelvis")
    assert pelvis not in G.targets
    assert G.parent_of(pelvis) is None


def test_path_to_right_hand_has_five_bones():
    # pelvis -> spine -> chest -> r_shoulder -> r_elbow -> r_wrist
    path = G.path_from_root(G.joint("r_wrist"))
    assert len(path) - 1 == 5
    assert [G.joint_names[j] for j in path] == ["pelvis", "spine", "chest", "r_shoulder", "r_elbow", "r_wrist"]


def test_removing_any_bone_disconnects_tree():
    assert is_spanning_tree(G.joint_count, G.bones, G.root_joint)
    for b in range(G.bone_count):
        reduced = G.bones[:b] + G.bones[b + 1 :]
        assert not is_spanning_tree(G.joint_count, reduced, G.root_joint)


def test_intention_encoding():
    assert [c.value for c in IntentionClass] == [-1, 0, 1]
    assert IntentionClass.PULL.index == 0 and IntentionClass.PUSH.index == 2
    assert IntentionClass.from_index(1) is IntentionClass.IDLE


def test_to_pelvis_frame_examples():
    f = SkeletonFrame(0.3, np.tile([1.0, 2.0, 3.0], (17, 1)))
    assert np.array_equal(to_pelvis_frame(f, G).joint_positions, np.zeros((17, 3)))
    pos = np.zeros((17, 3))
    pos[G.joint("pelvis")] = [1, 0, 0]
    pos[G.joint("r_wrist")] = [2, 0, 0]
    out = to_pelvis_frame(SkeletonFrame(1.0, pos), G)
    assert np.array_equal(out.joint_positions[G.joint("r_wrist")], [1, 0, 0])
    assert np.array_equal(out.joint_positions[G.joint("pelvis")], [0, 0, 0])
    assert out.timestamp == 1.0
    twice = to_pelvis_frame(out, G)
    assert np.array_equal(twice.joint_positions, out.joint_positions)


def test_non_finite_frame_rejected():
    pos = np.zeros((17, 3))
    pos[4, 2] = np.nan
    with pytest.raises(SkeletonError):
        to_pelvis_frame(SkeletonFrame(0.0, pos), G)


def test_bone_examples():
    pos = np.zeros((17, 3))
    pos[G.joint("spine")] = [0, 0, 0.5]
    bones = bones_from_joints(SkeletonFrame(0.0, pos), G)
    assert np.array_equal(bones[0], [0, 0, 0.5])
    f = random_frames(1)[0]
    moved = SkeletonFrame(f.timestamp, f.joint_positions + np.array([7.0, -3.0, 2.0]))
    np.testing.assert_allclose(bones_from_joints(moved, G), bones_from_joints(f, G), atol=1e-12)
    np.testing.assert_allclose(bones_from_joints(to_pelvis_frame(f, G), G), bones_from_joints(f, G), atol=1e-12)


def test_make_window_shape_and_invariants():
    w = make_window(random_frames(), G)
    assert w.window_length == 50
    assert w.joints.shape == (50, 17, 3) and w.bones.shape == (50, 16, 3)
    assert w.end_timestamp == pytest.approx(0.49)
    assert np.all(w.joints[:, G.root_joint] == 0.0)
    assert np.array_equal(w.bones, w.joints[:, G.targets] - w.joints[:, G.sources])


def test_make_window_rejections():
    with pytest.raises(SkeletonError, match="exactly 50"):
        make_window(random_frames(49), G)
    frames = random_frames()
    frames[30:] = [SkeletonFrame(f.timestamp + 0.1, f.joint_positions) for f in frames[30:]]
    with pytest.raises(SkeletonError, match="gap"):
        make_window(frames, G)


def test_window_determinism():
    a = make_window(random_frames(seed=3), G)
    b = make_window(random_frames(seed=3), G)
    assert a.joints.tobytes() == b.joints.tobytes() and a.bones.tobytes() == b.bones.tobytes()


@settings(max_examples=30, deadline=None)
@given(
    st.tuples(*(st.integers(-1000, 1000),) * 3),
    st.integers(0, 2**31 - 1),
)
def test_translation_invariance_exact(offset_int, seed):
    # offsets on a 1/8 m grid and coordinates on a 1/1024 m grid keep subtraction exact
    offset = np.array(offset_int, dtype=float) / 8
    rng = np.random.default_rng(seed)
    frames = [SkeletonFrame(i / 100, rng.integers(-2048, 2048, size=(17, 3)) / 1024) for i in range(50)]
    moved = [SkeletonFrame(f.timestamp, f.joint_positions + offset) for f in frames]
    a, b = make_window(frames, G), make_window(moved, G)
    assert np.array_equal(a.joints, b.joints)
    assert np.array_equal(a.bones, b.bones)


def test_incidence_matrices():
    inc = incidence_matrices(G)
    assert np.array_equal(inc.source_raw.sum(axis=0), np.ones(16))
    assert np.array_equal(inc.target_raw.sum(axis=0), np.ones(16))
    assert np.all(inc.target_raw[G.joint("pelvis")] == 0)
    chest = G.joint("chest")
    assert inc.source_raw[chest].sum() == 3
    nz = inc.source[chest][inc.source_raw[chest] > 0]
    np.testing.assert_array_equal(nz, np.full(3, 1.0 / (3 + 1e-6)))
    # leaf rows stay zero rather than dividing by zero
    assert np.all(inc.source[G.joint("head")] == 0)
