"""Motor and relay model: constant drive, linear ramp-to-stop, hard stop.

Speed is a PWM duty level (0..255) and stands in for vehicle speed. The
ramp is evaluated lazily from (initial speed, start time, now) so discrete
event and fixed-step interpretations agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

DUTY_MAX = 255.0
STOP_WINDOW_S = (10.0, 15.0)  # intervention must halt the motor inside this window


class MotorCommandKind(Enum):
    RUN = "RUN"
    RAMP = "RAMP"
    STOP = "STOP"


@dataclass(frozen=True)
class MotorCommand:
    kind: MotorCommandKind
    speed: float = 0.0           # RUN: constant duty
    ramp_started_at: int = 0     # RAMP: ms
    ramp_initial_speed: float = 0.0

    @classmethod
    def run(cls, speed: float) -> "MotorCommand":
        return cls(MotorCommandKind.RUN, speed=float(speed))

    @classmethod
    def ramp(cls, started_at: int, initial_speed: float) -> "MotorCommand":
        return cls(MotorCommandKind.RAMP, ramp_started_at=started_at,
                   ramp_initial_speed=float(initial_speed))

    @classmethod
    def stop(cls) -> "MotorCommand":
        return cls(MotorCommandKind.STOP)


def speed_at(initial: float, ramp_start: int, now: int, stop_duration: float) -> float:
    """Duty level while ramping down: linear from `initial` to exactly 0.

    Reaches 0 at ramp_start + stop_duration and stays there.
    """
    if now < ramp_start:
        raise ValueError(f"now {now} precedes ramp start {ramp_start}")
    lo, hi = STOP_WINDOW_S
    if not lo <= stop_duration <= hi:
        raise ValueError(f"stop_duration outside [10,15]: {stop_duration}")
    ramp_ms = int(round(stop_duration * 1000.0))
    elapsed = now - ramp_start
    if elapsed >= ramp_ms:
        return 0.0
    return initial * (1.0 - elapsed / ramp_ms)


def command_speed(cmd: MotorCommand, now: int, stop_duration: float) -> float:
    """Current duty for a motor command at virtual time `now`."""
    if cmd.kind is MotorCommandKind.RUN:
        return cmd.speed
    if cmd.kind is MotorCommandKind.RAMP:
        return speed_at(cmd.ramp_initial_speed, cmd.ramp_started_at, now, stop_duration)
    return 0.0


@dataclass(frozen=True)
class MotorState:
    speed: float = 0.0
    command: MotorCommand = MotorCommand.stop()
    ramp_started_at: int = 0
    ramp_initial_speed: float = 0.0


def apply_motor_command(state: MotorState, cmd: MotorCommand, now: int) -> MotorState:
    if cmd.kind is MotorCommandKind.RUN:
        return MotorState(speed=cmd.speed, command=cmd)
    if cmd.kind is MotorCommandKind.RAMP:
        if state.command.kind is MotorCommandKind.STOP:
            raise ValueError("cannot ramp a stopped motor")
        return MotorState(
            speed=state.speed,
            command=replace(cmd, ramp_started_at=now, ramp_initial_speed=state.speed),
            ramp_started_at=now,
            ramp_initial_speed=state.speed,
        )
    return MotorState(speed=0.0, command=cmd)
