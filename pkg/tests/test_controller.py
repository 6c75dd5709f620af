import json

import pytest
from hypothesis import given, settings, strategies as st

from vigil import (
    AlertCode,
    ConfigError,
    ControllerConfig,
    MotorCommandKind,
    Phase,
    RampCause,
    SensorSample,
    actuators_for,
    controller_init,
    controller_reset,
    controller_step,
)


def sample(t, raw=0, closed=False):
    return SensorSample(at=t, alcohol_raw=raw, eyes_closed=closed)


def walk(state, samples):
    """Run a list of (t, raw, closed) through the controller, collecting results."""
    results = []
    for t, raw, closed in samples:
        results.append(controller_step(state, sample(t, raw, closed), t))
        state = results[-1].state
    return state, results


# --- construction -----------------------------------------------------------

def test_init_defaults():
    state = controller_init(ControllerConfig())
    acts = actuators_for(state)
    assert state.phase is Phase.NORMAL
    assert state.vehicle_operating
    assert acts.green_lamp and not acts.red_lamp
    assert not acts.alarm and not acts.vibration
    assert acts.motor.kind is MotorCommandKind.RUN
    assert acts.motor.speed == 200.0


def test_stop_duration_out_of_window_rejected():
    with pytest.raises(ConfigError, match=r"stop_duration outside \[10,15\]"):
        ControllerConfig(stop_duration=16.0)
    with pytest.raises(ConfigError, match=r"stop_duration outside \[10,15\]"):
        ControllerConfig(stop_duration=9.0)


def test_eye_recheck_two_seconds_accepted():
    assert ControllerConfig(t_eye_recheck=2.0).eye_recheck_ms == 2000


def test_bad_threshold_and_durations():
    with pytest.raises(ConfigError, match="alcohol_threshold"):
        ControllerConfig(alcohol_threshold=1024)
    with pytest.raises(ConfigError, match="t_eye_recheck must be positive"):
        ControllerConfig(t_eye_recheck=0.0)
    with pytest.raises(ConfigError, match="initial_speed"):
        ControllerConfig(initial_speed=300)


# --- eye path ---------------------------------------------------------------

def test_eye_escalation_reaches_ramp_after_two_rechecks():
    state = controller_init(ControllerConfig())
    state, results = walk(state, [(0, 0, True), (2000, 0, True), (4000, 0, True)])
    assert [r.state.phase for r in results] == [
        Phase.EYE_SUSPECT, Phase.EYE_WARNING, Phase.RAMP_DOWN]
    assert state.ramp_cause is RampCause.EYE
    assert state.ramp_started_at == 4000
    assert state.ramp_ends_at == 16500


def test_eye_recheck_open_returns_to_normal_without_vibration():
    state = controller_init(ControllerConfig())
    state, results = walk(state, [(0, 0, True), (2000, 0, False)])
    assert state.phase is Phase.NORMAL
    assert all(not r.actuators.vibration for r in results)
    acts = actuators_for(state)
    assert acts.green_lamp and not acts.alarm and not acts.red_lamp


def test_eye_alert_sequence():
    state = controller_init(ControllerConfig())
    _, results = walk(state, [(0, 0, True), (2000, 0, True), (4000, 0, True)])
    codes = [m.code for r in results for m in r.alerts]
    assert codes == [AlertCode.ALERT_EYES_CLOSED, AlertCode.ALERT_DROWSY,
                     AlertCode.ALERT_URGENT_SLEEP, AlertCode.MOTOR_RAMP]
    seqs = [m.seq for r in results for m in r.alerts]
    assert seqs == [0, 1, 2, 3]


def test_eye_warning_actuators():
    state = controller_init(ControllerConfig())
    state, results = walk(state, [(0, 0, True), (2000, 0, True)])
    acts = results[-1].actuators
    assert acts.vibration and acts.alarm and acts.red_lamp and not acts.green_lamp


def test_midwindow_reopen_decides_at_recheck():
    # Reading flips open between rechecks; the decision still lands on the deadline.
    state = controller_init(ControllerConfig())
    state, results = walk(state, [(0, 0, True), (500, 0, False), (2000, 0, False)])
    assert results[0].state.phase is Phase.EYE_SUSPECT
    assert results[1].state.phase is Phase.EYE_SUSPECT
    assert results[2].state.phase is Phase.NORMAL


# --- alcohol path -----------------------------------------------------------

def test_alcohol_escalation_hand_trace():
    # 450 counts at t=0 and t=20s: ramp at 20s, stopped at 32.5s.
    state = controller_init(ControllerConfig())
    r1 = controller_step(state, sample(0, raw=450), 0)
    assert r1.state.phase is Phase.ALCOHOL_WARNING
    assert r1.state.recheck_at == 20_000
    assert r1.actuators.alarm and r1.actuators.red_lamp
    assert not r1.actuators.green_lamp and not r1.actuators.vibration

    r2 = controller_step(r1.state, sample(20_000, raw=450), 20_000)
    assert r2.state.phase is Phase.RAMP_DOWN
    assert r2.state.ramp_cause is RampCause.ALCOHOL
    assert r2.actuators.motor.kind is MotorCommandKind.RAMP

    r3 = controller_step(r2.state, sample(32_500, raw=450), 32_500)
    assert r3.state.phase is Phase.STOPPED
    assert not r3.state.vehicle_operating
    assert r3.actuators.motor.kind is MotorCommandKind.STOP
    assert [m.code for m in r3.alerts] == [AlertCode.MOTOR_STOPPED]


def test_alcohol_exactly_at_threshold_never_triggers():
    state = controller_init(ControllerConfig())
    for t in range(0, 30_000, 1000):
        result = controller_step(state, sample(t, raw=400), t)
        state = result.state
        assert state.phase is Phase.NORMAL


def test_alcohol_clears_at_recheck():
    state = controller_init(ControllerConfig())
    state, _ = walk(state, [(0, 450, False)])
    assert state.phase is Phase.ALCOHOL_WARNING
    state, _ = walk(state, [(10_000, 450, False)])  # before the recheck: no change
    assert state.phase is Phase.ALCOHOL_WARNING
    state, results = walk(state, [(20_000, 0, False)])
    assert state.phase is Phase.NORMAL
    acts = results[-1].actuators
    assert acts.green_lamp and not acts.alarm and not acts.red_lamp


def test_alcohol_warning_holds_for_full_recheck_window():
    state = controller_init(ControllerConfig())
    state, _ = walk(state, [(0, 450, False)])
    for t in range(1000, 20_000, 1000):
        result = controller_step(state, sample(t, raw=450), t)
        state = result.state
        assert state.phase is Phase.ALCOHOL_WARNING
        assert result.actuators.alarm and result.actuators.red_lamp


# --- interaction of the two paths ------------------------------------------

def test_alcohol_outranks_pending_eye_escalation():
    state = controller_init(ControllerConfig())
    state, _ = walk(state, [(0, 0, True)])
    assert state.phase is Phase.EYE_SUSPECT
    state, results = walk(state, [(1000, 450, True)])
    assert state.phase is Phase.ALCOHOL_WARNING
    assert state.recheck_at == 21_000
    assert [m.code for m in results[-1].alerts] == [AlertCode.ALERT_ALCOHOL]
    # eyes stay closed but cannot start a new escalation while alcohol is active
    state, _ = walk(state, [(3000, 450, True), (5000, 450, True)])
    assert state.phase is Phase.ALCOHOL_WARNING


def test_alcohol_checked_before_eyes_in_one_step():
    state = controller_init(ControllerConfig())
    result = controller_step(state, sample(0, raw=450, closed=True), 0)
    assert result.state.phase is Phase.ALCOHOL_WARNING
    assert [m.code for m in result.alerts] == [AlertCode.ALERT_ALCOHOL]


def test_eye_reading_recorded_during_alcohol_warning():
    state = controller_init(ControllerConfig())
    state, _ = walk(state, [(0, 450, False), (2000, 450, True)])
    assert state.phase is Phase.ALCOHOL_WARNING
    assert state.eyes_closed is True


# --- latch and reset ---------------------------------------------------------

def stopped_state(cause="eye"):
    state = controller_init(ControllerConfig())
    if cause == "eye":
        state, _ = walk(state, [(0, 0, True), (2000, 0, True), (4000, 0, True),
                                (16_500, 0, True)])
    else:
        state, _ = walk(state, [(0, 450, False), (20_000, 450, False),
                                (32_500, 450, False)])
    assert state.phase is Phase.STOPPED
    return state


def test_stop_is_latched():
    state = stopped_state()
    for t in (17_000, 20_000, 100_000):
        result = controller_step(state, sample(t, raw=0, closed=False), t)
        assert result.latched
        assert result.state == state
        assert result.alerts == ()
        assert result.actuators.motor.kind is MotorCommandKind.STOP


def test_reset_only_from_stopped():
    state = controller_init(ControllerConfig())
    with pytest.raises(ValueError, match="reset only from latched stop"):
        controller_reset(state)


def test_reset_restores_init_and_replays():
    state = stopped_state(cause="alcohol")
    fresh = controller_reset(state)
    assert fresh == controller_init(state.config)
    result = controller_step(fresh, sample(40_000, raw=500), 40_000)
    assert result.state.phase is Phase.ALCOHOL_WARNING


def test_vibration_kept_when_stopped_by_eye_path():
    state = stopped_state(cause="eye")
    acts = actuators_for(state)
    assert acts.vibration and acts.alarm and acts.red_lamp
    acts = actuators_for(stopped_state(cause="alcohol"))
    assert not acts.vibration and acts.alarm and acts.red_lamp


# --- preconditions ----------------------------------------------------------

def test_out_of_order_step_rejected():
    state = controller_init(ControllerConfig())
    state, _ = walk(state, [(1000, 0, False)])
    with pytest.raises(ValueError, match="precedes"):
        controller_step(state, sample(500), 500)


def test_sample_timestamp_must_match_now():
    state = controller_init(ControllerConfig())
    with pytest.raises(ValueError, match="timestamp"):
        controller_step(state, sample(5), 6)


# --- properties -------------------------------------------------------------

@st.composite
def timelines(draw):
    n = draw(st.integers(min_value=1, max_value=40))
    steps = []
    t = 0
    for _ in range(n):
        t += draw(st.integers(min_value=1, max_value=3000))
        steps.append((t,
                      draw(st.integers(min_value=0, max_value=1023)),
                      draw(st.booleans())))
    return steps


@settings(max_examples=200, deadline=None)
@given(timelines())
def test_lamps_never_both_on(steps):
    state = controller_init(ControllerConfig())
    for t, raw, closed in steps:
        result = controller_step(state, sample(t, raw, closed), t)
        state = result.state
        assert not (result.actuators.red_lamp and result.actuators.green_lamp)


@settings(max_examples=200, deadline=None)
@given(timelines())
def test_vibration_only_on_eye_path(steps):
    state = controller_init(ControllerConfig())
    for t, raw, closed in steps:
        result = controller_step(state, sample(t, raw, closed), t)
        state = result.state
        if result.actuators.vibration:
            assert state.phase in (Phase.EYE_WARNING, Phase.RAMP_DOWN, Phase.STOPPED)
            if state.phase in (Phase.RAMP_DOWN, Phase.STOPPED):
                assert state.ramp_cause is RampCause.EYE


@settings(max_examples=200, deadline=None)
@given(timelines())
def test_motor_stop_iff_stopped_and_operating_flag(steps):
    state = controller_init(ControllerConfig())
    for t, raw, closed in steps:
        result = controller_step(state, sample(t, raw, closed), t)
        state = result.state
        assert (result.actuators.motor.kind is MotorCommandKind.STOP) == \
            (state.phase is Phase.STOPPED)
        assert state.vehicle_operating == (state.phase is not Phase.STOPPED)


@settings(max_examples=100, deadline=None)
@given(timelines())
def test_phase_entry_times_nondecreasing(steps):
    state = controller_init(ControllerConfig())
    previous_entry = 0
    for t, raw, closed in steps:
        state = controller_step(state, sample(t, raw, closed), t).state
        assert state.phase_entered_at >= previous_entry
        previous_entry = state.phase_entered_at


@settings(max_examples=50, deadline=None)
@given(timelines())
def test_step_is_pure_and_deterministic(steps):
    def serialize(result):
        return json.dumps({
            "state": result.state.to_dict(),
            "actuators": result.actuators.to_dict(),
            "alerts": [m.to_dict() for m in result.alerts],
            "latched": result.latched,
        }, sort_keys=True)

    state_a = controller_init(ControllerConfig())
    state_b = controller_init(ControllerConfig())
    for t, raw, closed in steps:
        ra = controller_step(state_a, sample(t, raw, closed), t)
        rb = controller_step(state_b, sample(t, raw, closed), t)
        assert serialize(ra) == serialize(rb)
        state_a, state_b = ra.state, rb.state


@settings(max_examples=200, deadline=None)
@given(timelines())
def test_urgent_alert_only_from_eye_warning_escalation(steps):
    state = controller_init(ControllerConfig())
    for t, raw, closed in steps:
        before = state.phase
        result = controller_step(state, sample(t, raw, closed), t)
        state = result.state
        for m in result.alerts:
            if m.code is AlertCode.ALERT_URGENT_SLEEP:
                assert before is Phase.EYE_WARNING
                assert state.phase is Phase.RAMP_DOWN
                assert state.ramp_cause is RampCause.EYE


def test_alert_seq_strictly_increasing():
    state = controller_init(ControllerConfig())
    seen = []
    timeline = [(0, 0, True), (2000, 0, True), (4000, 0, True), (16_500, 0, True)]
    for t, raw, closed in timeline:
        result = controller_step(state, sample(t, raw, closed), t)
        state = result.state
        seen.extend(m.seq for m in result.alerts)
    assert seen == sorted(seen) and len(set(seen)) == len(seen)
