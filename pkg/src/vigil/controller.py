"""Driver-safety state machine: escalation from suspicion to a latched stop.

The controller is a pure step function. Callers feed it timestamped sensor
samples; it returns the next state, actuator commands, and any alert
messages for the driver's phone. It never reads a clock and holds no
mutable state, so identical inputs always produce identical outputs.

Two hazard paths escalate independently, alcohol outranking eyes:

* alcohol raw count above threshold -> alarm + red light, recheck after
  t_alcohol_recheck; still above -> ramp the motor down to a stop.
* eyes closed -> alert, recheck after t_eye_recheck; still closed ->
  vibration + alarm + red light + second alert, one more recheck; still
  closed -> ramp down to a stop.

The ramp takes stop_duration seconds and the resulting STOPPED phase is
latched until an explicit reset.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .channel import AlertCode, AlertMessage
from .motor import MotorCommand
from .sensors import ADC_MAX, SensorSample


class ConfigError(ValueError):
    pass


def _ms(seconds: float) -> int:
    return int(round(seconds * 1000.0))


@dataclass(frozen=True)
class ControllerConfig:
    alcohol_threshold: int = 400      # ADC counts, strict exceedance
    t_alcohol_recheck: float = 20.0   # seconds
    t_eye_recheck: float = 2.0        # seconds
    stop_duration: float = 12.5       # seconds, must land in the 10..15 window
    eye_sample_period: float = 2.0    # seconds
    alcohol_sample_period: float = 1.0  # seconds
    initial_speed: int = 200          # PWM duty 0..255

    def __post_init__(self) -> None:
        if not 0 <= self.alcohol_threshold <= ADC_MAX:
            raise ConfigError(f"alcohol_threshold outside [0,{ADC_MAX}]: {self.alcohol_threshold}")
        for name in ("t_alcohol_recheck", "t_eye_recheck", "eye_sample_period",
                     "alcohol_sample_period"):
            value = getattr(self, name)
            if value <= 0:
                raise ConfigError(f"{name} must be positive: {value}")
        if not 10.0 <= self.stop_duration <= 15.0:
            raise ConfigError(f"stop_duration outside [10,15]: {self.stop_duration}")
        if not 0 <= self.initial_speed <= 255:
            raise ConfigError(f"initial_speed outside [0,255]: {self.initial_speed}")

    @property
    def alcohol_recheck_ms(self) -> int:
        return _ms(self.t_alcohol_recheck)

    @property
    def eye_recheck_ms(self) -> int:
        return _ms(self.t_eye_recheck)

    @property
    def stop_duration_ms(self) -> int:
        return _ms(self.stop_duration)

    @property
    def eye_period_ms(self) -> int:
        return _ms(self.eye_sample_period)

    @property
    def alcohol_period_ms(self) -> int:
        return _ms(self.alcohol_sample_period)


class Phase(Enum):
    NORMAL = "NORMAL"
    EYE_SUSPECT = "EYE_SUSPECT"
    EYE_WARNING = "EYE_WARNING"
    ALCOHOL_WARNING = "ALCOHOL_WARNING"
    RAMP_DOWN = "RAMP_DOWN"
    STOPPED = "STOPPED"


class RampCause(Enum):
    EYE = "EYE"
    ALCOHOL = "ALCOHOL"


@dataclass(frozen=True)
class ActuatorState:
    alarm: bool
    red_lamp: bool
    green_lamp: bool
    vibration: bool
    motor: MotorCommand

    def to_dict(self) -> dict:
        m = self.motor
        return {
            "alarm": self.alarm, "red_lamp": self.red_lamp,
            "green_lamp": self.green_lamp, "vibration": self.vibration,
            "motor": {"kind": m.kind.value, "speed": m.speed,
                      "ramp_started_at": m.ramp_started_at,
                      "ramp_initial_speed": m.ramp_initial_speed},
        }


@dataclass(frozen=True)
class ControllerState:
    config: ControllerConfig
    phase: Phase
    phase_entered_at: int
    ramp_cause: RampCause | None
    alcohol_detected: bool
    eyes_closed: bool
    vehicle_operating: bool
    last_eye_sample_at: int | None
    last_alcohol_sample_at: int | None
    last_step_at: int | None
    recheck_at: int | None
    ramp_started_at: int | None
    ramp_ends_at: int | None
    next_alert_seq: int

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.value,
            "phase_entered_at": self.phase_entered_at,
            "ramp_cause": self.ramp_cause.value if self.ramp_cause else None,
            "alcohol_detected": self.alcohol_detected,
            "eyes_closed": self.eyes_closed,
            "vehicle_operating": self.vehicle_operating,
            "last_eye_sample_at": self.last_eye_sample_at,
            "last_alcohol_sample_at": self.last_alcohol_sample_at,
            "last_step_at": self.last_step_at,
            "recheck_at": self.recheck_at,
            "ramp_started_at": self.ramp_started_at,
            "ramp_ends_at": self.ramp_ends_at,
            "next_alert_seq": self.next_alert_seq,
        }


@dataclass(frozen=True)
class StepResult:
    state: ControllerState
    actuators: ActuatorState
    alerts: tuple[AlertMessage, ...]
    latched: bool = False


def controller_init(config: ControllerConfig) -> ControllerState:
    """Fresh state: vehicle running, green lamp on, everything else off."""
    return ControllerState(
        config=config,
        phase=Phase.NORMAL,
        phase_entered_at=0,
        ramp_cause=None,
        alcohol_detected=False,
        eyes_closed=False,
        vehicle_operating=True,
        last_eye_sample_at=None,
        last_alcohol_sample_at=None,
        last_step_at=None,
        recheck_at=None,
        ramp_started_at=None,
        ramp_ends_at=None,
        next_alert_seq=0,
    )


def controller_reset(state: ControllerState) -> ControllerState:
    """Release the latched stop. Only valid from STOPPED."""
    if state.phase is not Phase.STOPPED:
        raise ValueError("reset only from latched stop")
    return controller_init(state.config)


def actuators_for(state: ControllerState) -> ActuatorState:
    """Actuator outputs are a function of the phase (and ramp cause).

    The red and green lamps are mutually exclusive; the green lamp confirms
    open eyes and only shows in NORMAL. Vibration is reserved for the eye
    path. The motor stops exactly when the phase is STOPPED.
    """
    cfg = state.config
    run = MotorCommand.run(cfg.initial_speed)
    p = state.phase
    if p is Phase.NORMAL:
        return ActuatorState(False, False, True, False, run)
    if p is Phase.EYE_SUSPECT:
        return ActuatorState(False, False, False, False, run)
    if p is Phase.EYE_WARNING:
        return ActuatorState(True, True, False, True, run)
    if p is Phase.ALCOHOL_WARNING:
        return ActuatorState(True, True, False, False, run)
    vibration = state.ramp_cause is RampCause.EYE
    if p is Phase.RAMP_DOWN:
        motor = MotorCommand.ramp(state.ramp_started_at, float(cfg.initial_speed))
        return ActuatorState(True, True, False, vibration, motor)
    return ActuatorState(True, True, False, vibration, MotorCommand.stop())


def _new_slot(last: int | None, now: int, period_ms: int) -> bool:
    # Sampling cadence: a channel is due once per period, anchored at t=0.
    return last is None or (now // period_ms) > (last // period_ms)


def controller_step(state: ControllerState, sample: SensorSample,
                    now: int) -> StepResult:
    """Advance the state machine by one observation.

    Alcohol is checked before eyes, and an active alcohol escalation keeps
    a new eye escalation from starting. A sample timestamped exactly at a
    recheck deadline counts as the recheck sample. After STOPPED every step
    is a no-op flagged `latched` until controller_reset.
    """
    if sample.at != now:
        raise ValueError(f"sample timestamp {sample.at} != step time {now}")
    if state.last_step_at is not None and now < state.last_step_at:
        raise ValueError(f"step time {now} precedes last step {state.last_step_at}")

    if state.phase is Phase.STOPPED:
        return StepResult(state, actuators_for(state), (), latched=True)

    cfg = state.config
    alerts: list[AlertMessage] = []
    phase = state.phase
    phase_entered_at = state.phase_entered_at
    ramp_cause = state.ramp_cause
    alcohol_detected = state.alcohol_detected
    eyes_closed = state.eyes_closed
    operating = state.vehicle_operating
    last_eye = state.last_eye_sample_at
    last_alcohol = state.last_alcohol_sample_at
    recheck_at = state.recheck_at
    ramp_started_at = state.ramp_started_at
    ramp_ends_at = state.ramp_ends_at
    seq = state.next_alert_seq

    def emit(code: AlertCode, detail: str) -> None:
        nonlocal seq
        alerts.append(AlertMessage(seq=seq, at=now, code=code, detail=detail))
        seq += 1

    # A finished ramp wins over any sensor reading in the same step.
    if phase is Phase.RAMP_DOWN and now >= ramp_ends_at:
        phase = Phase.STOPPED
        phase_entered_at = now
        operating = False
        emit(AlertCode.MOTOR_STOPPED, "motor stopped")
        new_state = replace(
            state, phase=phase, phase_entered_at=phase_entered_at,
            vehicle_operating=operating, last_step_at=now, next_alert_seq=seq)
        return StepResult(new_state, actuators_for(new_state), tuple(alerts))

    # --- alcohol path ---
    raw_detected = sample.alcohol_raw > cfg.alcohol_threshold
    observe_alcohol = (
        _new_slot(last_alcohol, now, cfg.alcohol_period_ms)
        or (phase is Phase.ALCOHOL_WARNING and recheck_at is not None and now >= recheck_at)
        or raw_detected != alcohol_detected
    )
    if observe_alcohol:
        alcohol_detected = raw_detected
        last_alcohol = now
        if phase in (Phase.NORMAL, Phase.EYE_SUSPECT, Phase.EYE_WARNING):
            if alcohol_detected:
                # Alcohol outranks a pending eye escalation.
                phase = Phase.ALCOHOL_WARNING
                phase_entered_at = now
                recheck_at = now + cfg.alcohol_recheck_ms
                emit(AlertCode.ALERT_ALCOHOL, f"raw={sample.alcohol_raw}")
        elif phase is Phase.ALCOHOL_WARNING and recheck_at is not None and now >= recheck_at:
            if alcohol_detected:
                phase = Phase.RAMP_DOWN
                phase_entered_at = now
                ramp_cause = RampCause.ALCOHOL
                ramp_started_at = now
                ramp_ends_at = now + cfg.stop_duration_ms
                recheck_at = None
                emit(AlertCode.MOTOR_RAMP, f"cause=alcohol initial={cfg.initial_speed}")
            else:
                phase = Phase.NORMAL
                phase_entered_at = now
                recheck_at = None

    # --- eye path ---
    observe_eyes = (
        _new_slot(last_eye, now, cfg.eye_period_ms)
        or (phase in (Phase.EYE_SUSPECT, Phase.EYE_WARNING)
            and recheck_at is not None and now >= recheck_at)
        or sample.eyes_closed != eyes_closed
    )
    if observe_eyes:
        eyes_closed = sample.eyes_closed
        last_eye = now
        if phase is Phase.NORMAL:
            if eyes_closed:
                phase = Phase.EYE_SUSPECT
                phase_entered_at = now
                recheck_at = now + cfg.eye_recheck_ms
                emit(AlertCode.ALERT_EYES_CLOSED, "eyes closed")
            else:
                emit(AlertCode.STATUS_EYES_OPEN, "eyes open")
        elif phase is Phase.EYE_SUSPECT and recheck_at is not None and now >= recheck_at:
            if eyes_closed:
                phase = Phase.EYE_WARNING
                phase_entered_at = now
                recheck_at = now + cfg.eye_recheck_ms
                emit(AlertCode.ALERT_DROWSY, "eyes still closed")
            else:
                phase = Phase.NORMAL
                phase_entered_at = now
                recheck_at = None
        elif phase is Phase.EYE_WARNING and recheck_at is not None and now >= recheck_at:
            if eyes_closed:
                phase = Phase.RAMP_DOWN
                phase_entered_at = now
                ramp_cause = RampCause.EYE
                ramp_started_at = now
                ramp_ends_at = now + cfg.stop_duration_ms
                recheck_at = None
                emit(AlertCode.ALERT_URGENT_SLEEP, "prolonged eye closure, stopping")
                emit(AlertCode.MOTOR_RAMP, f"cause=eye initial={cfg.initial_speed}")
            else:
                phase = Phase.NORMAL
                phase_entered_at = now
                recheck_at = None
        # ALCOHOL_WARNING / RAMP_DOWN: the reading is recorded, nothing escalates.

    new_state = ControllerState(
        config=cfg,
        phase=phase,
        phase_entered_at=phase_entered_at,
        ramp_cause=ramp_cause,
        alcohol_detected=alcohol_detected,
        eyes_closed=eyes_closed,
        vehicle_operating=operating,
        last_eye_sample_at=last_eye,
        last_alcohol_sample_at=last_alcohol,
        last_step_at=now,
        recheck_at=recheck_at,
        ramp_started_at=ramp_started_at,
        ramp_ends_at=ramp_ends_at,
        next_alert_seq=seq,
    )
    return StepResult(new_state, actuators_for(new_state), tuple(alerts))
