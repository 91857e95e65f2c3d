import numpy as np
import pytest

from pushpull.controller import (
    AssistConfig,
    AssistController,
    ControllerError,
    ControllerState,
    ExplorationError,
    ExploreConfig,
    IntentionFilterState,
    assist_target,
    drive_robot,
    explore_object,
    filter_intention,
    filter_stream,
    force_control,
    on_idle_stop,
    scenario_simulator,
)
from pushpull.physics import FrictionModel, SimConfig, Simulator
from pushpull.skeleton import IntentionClass

ONE_HOT = {c: np.eye(3)[c.index] for c in IntentionClass}
CFG = AssistConfig(f_com=65.0)


def feed(state, seq):
    out = []
    for logits in seq:
        state, c = filter_intention(state, logits)
        out.append(c)
    return out


def test_filter_identical_idle():
    assert feed(IntentionFilterState(), [ONE_HOT[IntentionClass.IDLE]] * 15)[-1] is IntentionClass.IDLE


@pytest.mark.parametrize("a,b", [("IDLE", "PUSH"), ("PUSH", "PULL"), ("PULL", "IDLE")])
def test_filter_step_flips_at_eighth_sample(a, b):
    a, b = IntentionClass[a], IntentionClass[b]
    state = IntentionFilterState()
    feed(state, [ONE_HOT[a]] * 15)
    out = feed(state, [ONE_HOT[b]] * 15)
    assert out.index(b) == 7  # eighth new sample, 80 ms at 100 Hz
    assert all(c is a for c in out[:7])


def test_filter_does_not_chatter_on_alternating_input():
    # raw argmax alternates PULL/PUSH every sample; the averaged logits settle on IDLE
    a, b = np.array([0.6, 0.5, 0.0]), np.array([0.0, 0.5, 0.6])
    out = feed(IntentionFilterState(), [a, b] * 30)
    assert set(out[1:]) == {IntentionClass.IDLE}
    # with an even window the mean of alternating one-hot vectors is exactly constant
    out = feed(IntentionFilterState(length=14), [ONE_HOT[IntentionClass.PUSH], ONE_HOT[IntentionClass.PULL]] * 30)
    assert len(set(out[14:])) == 1


def test_odd_window_alternating_one_hot_follows_majority():
    # 8 of one class and 7 of the other in every full window of 15
    out = feed(IntentionFilterState(), [ONE_HOT[IntentionClass.PUSH], ONE_HOT[IntentionClass.PULL]] * 30)
    assert out[15:] == [IntentionClass.PULL, IntentionClass.PUSH] * 22 + [IntentionClass.PULL]


def test_filter_warm_up_and_buffer_length():
    state = IntentionFilterState()
    _, c = filter_intention(state, ONE_HOT[IntentionClass.PULL])
    assert c is IntentionClass.PULL
    feed(state, [ONE_HOT[IntentionClass.IDLE]] * 40)
    assert len(state.buffer) == 15
    with pytest.raises(ControllerError):
        filter_intention(state, [np.nan, 0, 0])


def test_filter_stream_matches_incremental():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(200, 3))
    state = IntentionFilterState()
    incremental = [int(c) for c in feed(state, logits)]
    assert filter_stream(logits).tolist() == incremental


def ramp_trace(changes, t_end, cfg=CFG, tick=0.01):
    """f_d.x at every control tick for (time, intent) changes."""
    ctrl = ControllerState()
    intent = IntentionClass.IDLE
    out = []
    for k in range(int(round(t_end / tick)) + 1):
        t = k * tick
        for tc, ic in changes:
            if abs(tc - t) < 1e-9:
                intent = ic
        ctrl = assist_target(ctrl, intent, t, cfg)
        assert ctrl.f_d[1] == 0.0 and ctrl.f_d[2] == 0.0
        out.append(ctrl.f_d[0])
    return np.array(out)


def test_ramp_idle_to_push():
    f = ramp_trace([(0.0, IntentionClass.PUSH)], 2.0)
    t = np.arange(len(f)) * 0.01
    np.testing.assert_allclose(f, -65.0 * np.minimum(t / 1.0, 1.0), atol=1e-9)
    assert np.argmax(np.isclose(f, -65.0)) == 100


def test_ramp_restarts_mid_way():
    f = ramp_trace([(0.0, IntentionClass.PUSH), (0.5, IntentionClass.PULL)], 2.0)
    assert f[50] == pytest.approx(-32.5)
    # -32.5 -> +65 over the next second
    np.testing.assert_allclose(f[50:151], -32.5 + 97.5 * np.arange(101) / 100, atol=1e-9)
    assert np.all(f[150:] == pytest.approx(65.0))


def test_ramp_invariants_random_intentions():
    rng = np.random.default_rng(0)
    changes = [(k / 100, IntentionClass(int(rng.integers(-1, 2)))) for k in range(0, 1000, 37)]
    f = ramp_trace(changes, 10.0)
    assert np.all(np.abs(f) <= CFG.f_com + 1e-9)
    assert np.max(np.abs(np.diff(f))) <= 2 * CFG.f_com * 0.01 + 1e-9


def test_no_change_keeps_target():
    ctrl = ControllerState()
    a = assist_target(ctrl, IntentionClass.IDLE, 3.0, CFG)
    assert a.f_d[0] == 0.0
    with pytest.raises(ControllerError):
        assist_target(replace_time(a, 5.0), IntentionClass.IDLE, 4.0, CFG)


def replace_time(ctrl, t):
    from dataclasses import replace

    return replace(ctrl, ramp_start_time=t)


def test_force_control_examples():
    assert force_control(10.0, 10.0, 5e-5) == 0.0
    assert force_control(-65.0, 0.0, 5e-5) == pytest.approx(-3.25e-3)
    assert force_control(1000.0, 0.0, 5e-5, 0.002) == 0.002
    assert force_control(-1000.0, 0.0, 5e-5, 0.002) == -0.002


def test_config_validation(tmp_path):
    with pytest.raises(ControllerError):
        AssistConfig(f_com=-1.0)
    with pytest.raises(ControllerError):
        AssistConfig.from_dict({"f_com": 65.0})
    assert AssistConfig.from_dict(CFG.to_dict()) == CFG


def test_idle_stop_zeroes_sensor():
    sim = Simulator(SimConfig(), FrictionModel(0.227, 36.0))
    cmd = 0.0
    for target in np.linspace(0, 0.0025, 11)[1:]:
        drive_robot(sim, cmd, target)
        cmd = target
    r = drive_robot(sim, cmd, cmd)
    assert r.f_r[0] == pytest.approx(5.0)
    ctrl = on_idle_stop(ControllerState(robot_cmd_x=cmd), sim)
    assert ctrl.robot_cmd_x == cmd
    assert drive_robot(sim, cmd, cmd).f_r[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ControllerError):
        on_idle_stop(ControllerState(intent=IntentionClass.PUSH), sim)


def test_idle_stop_without_stored_force_changes_nothing():
    sim = Simulator(SimConfig(), FrictionModel(0.227, 36.0))
    drive_robot(sim, 0.0, 0.0)
    before = sim.state
    on_idle_stop(ControllerState(), sim)
    assert sim.state == before


def test_closed_loop_error_decreases_while_stuck():
    sim = Simulator(SimConfig(), FrictionModel(0.227, 36.0))
    f_d, f_r, cmd = -60.0, 0.0, 0.0
    errors = []
    for _ in range(150):
        u = float(force_control(f_d, f_r, 5e-5, 0.002))
        r = drive_robot(sim, cmd, cmd + u)
        cmd += u
        f_r = float(r.f_r[0])
        assert r.sticking
        errors.append(abs(f_r - f_d))
    assert np.all(np.diff(errors) <= 1e-12)
    assert errors[-1] < 1e-3


def test_controller_tick_follows_intention_and_holds_when_stale():
    sim = Simulator(SimConfig(), FrictionModel(0.227, 36.0))
    ctl = AssistController(CFG)
    res = ctl.tick(0.0, ONE_HOT[IntentionClass.PUSH], 0.0, sim)
    assert res.intent_filtered is IntentionClass.PUSH and res.u_x == 0.0
    res = ctl.tick(0.01, ONE_HOT[IntentionClass.PUSH], 0.0, sim)
    assert res.f_d_x == pytest.approx(-0.65) and res.u_x < 0
    held = ctl.tick(0.02, ONE_HOT[IntentionClass.PUSH], 0.0, sim, intent_age=0.06)
    assert held.held and held.u_x == 0.0
    assert not ctl.tick(0.03, ONE_HOT[IntentionClass.PUSH], 0.0, sim, intent_age=0.05).held


def test_robot_never_opposes_filtered_intention():
    rng = np.random.default_rng(5)
    ctl = AssistController(CFG)
    for k in range(500):
        logits = rng.normal(size=3)
        res = ctl.tick(k / 100, logits, 0.0)
        target_sign = -int(res.intent_filtered)
        if target_sign != 0 and abs(res.f_d_x) > 0 and k > 0:
            # while ramping towards the target the sign may still be the old one; the target itself never opposes
            assert np.sign(ctl.ctrl.ramp_target(CFG)) == target_sign


@pytest.mark.parametrize(
    "mass,mu,lo,hi",
    [(36.0, 0.2265, 78.0, 82.0), (27.7, 0.239, 64.0, 66.0), (36.0, 0.227, 77.0, 83.0)],
)
def test_exploration_examples(mass, mu, lo, hi):
    assert lo <= explore_object(scenario_simulator(mass, mu)) <= hi


def test_exploration_errors():
    with pytest.raises(ValueError):
        # a frictionless object is rejected when the friction model is built
        scenario_simulator(36.0, 0.0)
    with pytest.raises(ExplorationError, match="first"):
        explore_object(scenario_simulator(0.5, 0.1))
    with pytest.raises(ExplorationError, match="no breakaway"):
        explore_object(scenario_simulator(36.0, 0.227), ExploreConfig(cap_n=20.0))
