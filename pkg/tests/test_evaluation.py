import json
import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st
from scipy import stats as sps
from scipy import special

from pushpull.evaluation import (
    EvaluationError,
    TrialLog,
    compare_conditions,
    effort_stats,
    lead_time,
    motion_runs,
    read_trial_log,
    regularized_incomplete_beta,
    segment_actions,
    t_two_sided_p,
    trim_forces,
    trim_mask,
    welch_t_test,
    write_action_table,
    write_report,
    write_trial_log,
)
from pushpull.metrics import classification_metrics
from pushpull.skeleton import IntentionClass

from pathlib import Path

ORACLE = json.loads((Path(__file__).parent / "oracles" / "welch_reference.json").read_text())


def make_log(box_v, f_h_norm, intent=None, condition="dry", dt=0.01):
    n = len(box_v)
    t = np.round(np.arange(n) * dt, 6)
    z = np.zeros(n)
    intent = np.zeros(n, dtype=int) if intent is None else np.asarray(intent)
    return TrialLog(t, np.cumsum(box_v) * dt, np.asarray(box_v, float), np.asarray(f_h_norm, float),
                    np.asarray(f_h_norm, float), z, z, z, intent, intent, condition=condition, scenario="s")


def burst(n_idle, n_move, v, force, n_after=None):
    """Idle, a motion burst at velocity v with a constant force, idle again."""
    n_after = n_idle if n_after is None else n_after
    box_v = np.concatenate([np.zeros(n_idle), np.full(n_move, v), np.zeros(n_after)])
    f = np.concatenate([np.zeros(n_idle), np.full(n_move, force), np.zeros(n_after)])
    return box_v, f


def test_trim_examples():
    assert trim_forces(make_log(np.zeros(50), np.zeros(50))).count() == 0
    assert trim_mask(np.full(200, 20.0)).sum() == 200
    assert trim_mask(np.array([np.linalg.norm([9.0, 12.0, 0.0])]))[0]
    assert not trim_mask(np.array([14.999]))[0]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=50), st.floats(0, 50), st.floats(0, 50))
def test_trim_monotone(values, a, b):
    lo, hi = sorted((a, b))
    assert trim_mask(np.array(values), hi).sum() <= trim_mask(np.array(values), lo).sum()


def test_segmentation_examples():
    assert segment_actions(make_log(np.zeros(300), np.zeros(300))) == []
    # two bursts 0.1 s apart merge into one record
    v = np.concatenate([np.zeros(50), np.full(50, 0.1), np.zeros(10), np.full(50, 0.1), np.zeros(50)])
    recs = segment_actions(make_log(v, np.full(len(v), 20.0)))
    assert len(recs) == 1 and recs[0].kind is IntentionClass.PULL
    # opposite directions are never merged
    v = np.concatenate([np.zeros(50), np.full(50, 0.1), np.zeros(5), np.full(50, -0.1), np.zeros(50)])
    kinds = [r.kind for r in segment_actions(make_log(v, np.full(len(v), 20.0)))]
    assert kinds == [IntentionClass.PULL, IntentionClass.PUSH]


def test_ten_alternating_actions():
    parts = []
    for i in range(10):
        v = 0.1 if i % 2 == 0 else -0.1
        parts.append(burst(100, 200, v, 30.0, 0)[0])
    v = np.concatenate(parts + [np.zeros(100)])
    recs = segment_actions(make_log(v, np.where(v != 0, 30.0, 0.0)))
    assert [r.kind for r in recs] == [IntentionClass.PULL, IntentionClass.PUSH] * 5


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([-0.1, 0.0, 0.0, 0.1]), min_size=5, max_size=200))
def test_every_moving_sample_in_exactly_one_run(v):
    v = np.array(v)
    t = np.arange(len(v)) * 0.01
    runs = motion_runs(t, v, 0.005)
    cover = np.zeros(len(v), dtype=int)
    for s, e, _ in runs:
        cover[s : e + 1] += 1
    moving = np.abs(v) > 0.005
    assert np.all(cover[moving] == 1)
    assert np.all(cover <= 1)


def test_effort_examples():
    v, f = burst(100, 201, 0.1, 30.0)
    recs = segment_actions(make_log(v, f), extend=0.0)
    assert len(recs) == 1
    assert recs[0].mean_force == pytest.approx(30.0)
    assert recs[0].cumulative_force == pytest.approx(60.0)
    s = effort_stats(recs + recs)
    assert s.mean_force_std == 0.0 and s.n == 2
    with pytest.raises(EvaluationError):
        effort_stats([])


def test_slower_motion_takes_more_cumulative_force():
    fast = segment_actions(make_log(*burst(100, 200, 0.1, 30.0)))[0]
    slow = segment_actions(make_log(*burst(100, 400, 0.05, 30.0)))[0]
    assert slow.mean_force == pytest.approx(fast.mean_force)
    assert slow.cumulative_force / fast.cumulative_force == pytest.approx(2.0, rel=0.25)


def test_lead_time_examples():
    v, f = burst(200, 100, 0.1, 30.0)
    intent = np.zeros(len(v), dtype=int)
    intent[150:300] = IntentionClass.PULL
    lt = lead_time(make_log(v, f, intent, "assisted"))
    assert lt.leads == [pytest.approx(0.5)] and lt.skipped == 0
    intent = np.zeros(len(v), dtype=int)
    intent[200:300] = IntentionClass.PULL
    assert lead_time(make_log(v, f, intent, "assisted")).leads == [pytest.approx(0.0)]
    # late intention gives a negative lead, a never-matching one is skipped
    intent = np.zeros(len(v), dtype=int)
    intent[220:300] = IntentionClass.PULL
    assert lead_time(make_log(v, f, intent, "assisted")).leads == [pytest.approx(-0.2)]
    assert lead_time(make_log(v, f, np.zeros(len(v), dtype=int), "assisted")).skipped == 1


def test_welch_examples():
    r = welch_t_test([1, 2, 3], [1, 2, 3])
    assert r.t == 0.0 and r.p == pytest.approx(1.0)
    r = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert r.t == pytest.approx(-1.0) and r.p == pytest.approx(0.347, abs=5e-4)
    rng = np.random.default_rng(0)
    assert welch_t_test(rng.normal(10, 1, 10), rng.normal(50, 1, 10)).p < 1e-6
    with pytest.raises(EvaluationError):
        welch_t_test([1.0], [1.0, 2.0])
    with pytest.raises(EvaluationError):
        welch_t_test([2.0, 2.0], [3.0, 3.0])


def test_welch_against_frozen_reference():
    for case in ORACLE["welch"]:
        r = welch_t_test(case["a"], case["b"])
        assert r.t == pytest.approx(case["t"], abs=1e-6)
        assert r.dof == pytest.approx(case["dof"], abs=1e-6)
        assert r.p == pytest.approx(case["p"], abs=1e-6)


def test_incomplete_beta_against_frozen_reference():
    for case in ORACLE["betainc"]:
        assert regularized_incomplete_beta(case["a"], case["b"], case["x"]) == pytest.approx(case["value"], abs=1e-12)


@settings(max_examples=60, deadline=None)
@example(1e-9, 1.0)
@given(st.floats(-30, 30), st.floats(1.0, 200.0))
def test_t_p_value_against_scipy(t, dof):
    assert t_two_sided_p(t, dof) == pytest.approx(2 * sps.t.sf(abs(t), dof), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0, 1))
def test_incomplete_beta_against_scipy(a, b, x):
    assert regularized_incomplete_beta(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-10)


def test_classification_examples():
    labels = np.array([-1, 0, 1, 0])
    r = classification_metrics(labels, labels)
    assert r.accuracy == 1 and r.balanced_accuracy == 1
    assert np.array_equal(r.confusion, np.diag([1, 2, 1]))
    labels = np.array([0] * 645 + [-1] * 180 + [1] * 175)
    r = classification_metrics(np.zeros(1000, dtype=int), labels)
    assert r.accuracy == pytest.approx(0.645) and r.balanced_accuracy == pytest.approx(1 / 3)
    labels = np.array([-1, -1, -1, -1, 0, 0, 1, 1])
    pred = np.array([-1, -1, 0, 1, 0, 0, 1, 1])
    assert classification_metrics(pred, labels).balanced_accuracy == pytest.approx((0.5 + 1 + 1) / 3)
    r = classification_metrics(np.array([0, 0]), np.array([0, 0]))
    assert r.absent_classes == [-1, 1]
    with pytest.raises(ValueError):
        classification_metrics(np.zeros(3), np.zeros(4))


def test_balanced_equals_plain_on_balanced_sets():
    rng = np.random.default_rng(1)
    labels = np.repeat([-1, 0, 1], 50)
    pred = rng.integers(-1, 2, size=150)
    r = classification_metrics(pred, labels)
    # equal class sizes make the mean recall the plain accuracy
    assert r.balanced_accuracy == pytest.approx(r.accuracy)


def test_log_round_trip_and_reports(tmp_path):
    v, f = burst(100, 200, 0.1, 30.0)
    log = make_log(v, f, condition="assisted")
    path = write_trial_log(log, tmp_path / "a.csv")
    assert path.read_text().splitlines()[0] == "t,box_x,box_v,f_h_x,f_h_norm,f_r_x,f_d_x,u_x,intent_raw,intent_filtered"
    back = read_trial_log(path)
    assert back.condition == "assisted" and back.scenario == "s"
    np.testing.assert_allclose(back.box_v, log.box_v)
    v2, f2 = burst(100, 200, -0.1, 25.0)
    report = compare_conditions([make_log(v, f), make_log(v2, f2 * 1.1)], [log, make_log(v2, f2)])
    assert report.welch_mean is not None and 0 <= report.welch_mean.p <= 1
    doc = json.loads(write_report(report, tmp_path / "r.json").read_text())
    assert set(doc) >= {"actions", "effort", "welch_mean_force", "lead_time"}
    table = write_action_table(report, tmp_path / "t.csv").read_text().splitlines()
    assert table[0] == "condition,kind,mean_N,cumulative_Ns" and len(table) == 5


def test_log_validation():
    with pytest.raises(EvaluationError):
        TrialLog(*[np.zeros(3)] * 9 + [np.zeros(2)])
    with pytest.raises(EvaluationError):
        make_log(np.zeros(3), np.zeros(3), condition="wet")
