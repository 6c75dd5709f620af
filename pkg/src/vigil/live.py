"""Live mode: the controller driven by a human instead of a script.

A LiveSession owns the controller, channel, and sampling cadence, and is
advanced in virtual milliseconds by its caller (the serve command maps
wall-clock time to virtual time with a pace factor). Inputs arrive as
timestamped ground-truth changes and take effect exactly like scripted
events: an immediate sample at the input's timestamp, decisions at the
controller's own recheck deadlines.

On the way out the session is a pure observer pipeline: update sinks see
alerts and can poll state snapshots but cannot influence stepping, so
attaching or detaching a console never changes behavior.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .channel import AlertMessage, ChannelConfig
from .controller import ControllerConfig, Phase, actuators_for, controller_reset
from .engine import Trace, _SimCore
from .motor import command_speed
from .scenario import ScenarioScript

log = logging.getLogger("vigil.live")


@dataclass(frozen=True)
class LiveInput:
    at: int  # virtual ms, stamped on receipt
    eyes_closed: bool | None = None
    alcohol_ppm: float | None = None
    reset: bool = False


class _LiveTruth:
    """Mutable stand-in for a scenario timeline."""

    def __init__(self) -> None:
        self.eyes_closed = False
        self.ppm = 0.0
        self.noise = None

    def advance_to(self, ms: int) -> "_LiveTruth":
        return self


class LiveSession:
    """Controller session advanced by the caller's virtual clock."""

    def __init__(self, controller_cfg: ControllerConfig | None = None,
                 channel_cfg: ChannelConfig | None = None):
        cfg = controller_cfg or ControllerConfig()
        # Reuse the engine step core, swapping the scripted timeline for a
        # driver-controlled one.
        placeholder = ScenarioScript(name="live", events=(), end_at_ms=1)
        self._core = _SimCore(placeholder, cfg, channel_cfg or ChannelConfig())
        self._core.truth = _LiveTruth()
        self._cfg = cfg
        self._now = 0
        self._next_eye = 0
        self._next_alcohol = 0
        self._recheck_due: set[int] = set()
        self._ramp_due: int | None = None
        self._pending_inputs: list[LiveInput] = []
        self._sinks: list = []

    def attach_sink(self, sink) -> None:
        """sink.on_alert(dict) is called for each emitted alert."""
        self._sinks.append(sink)

    def detach_sink(self, sink) -> None:
        if sink in self._sinks:
            self._sinks.remove(sink)

    def submit(self, inp: LiveInput) -> None:
        """Queue an input; it takes effect during the advance covering its
        timestamp."""
        self._pending_inputs.append(inp)

    @property
    def now(self) -> int:
        return self._now

    @property
    def phase(self) -> Phase:
        return self._core.state.phase

    def advance_to(self, target_ms: int) -> None:
        """Process every due instant in (now, target_ms]. Inputs stamped
        beyond target_ms stay queued for a later advance."""
        if target_ms < self._now:
            raise ValueError(f"cannot advance backwards: {target_ms} < {self._now}")
        inputs = sorted(self._pending_inputs, key=lambda i: i.at)
        self._pending_inputs = [i for i in inputs if i.at > target_ms]
        inputs = [i for i in inputs if i.at <= target_ms]
        idx = 0
        for t in range(self._now + 1, target_ms + 1):
            forced = False
            while idx < len(inputs) and inputs[idx].at <= t:
                forced = self._apply_input(inputs[idx], t) or forced
                idx += 1
            due = forced
            if t >= self._next_eye:
                due = True
                while self._next_eye <= t:
                    self._next_eye += self._cfg.eye_period_ms
            if t >= self._next_alcohol:
                due = True
                while self._next_alcohol <= t:
                    self._next_alcohol += self._cfg.alcohol_period_ms
            if t in self._recheck_due:
                due = True
                self._recheck_due.discard(t)
            if self._ramp_due == t:
                due = True
                self._ramp_due = None
            if due and not self._core.stopped:
                self._step(t)
            self._core.drain_deliveries(t)
        self._now = target_ms

    def _apply_input(self, inp: LiveInput, t: int) -> bool:
        truth = self._core.truth
        if inp.reset:
            if self._core.state.phase is Phase.STOPPED:
                self._core.state = controller_reset(self._core.state)
                self._core.stopped = False
                self._recheck_due.clear()
                self._ramp_due = None
                log.info("reset at t=%d", t)
                return True
            log.info("reset ignored (not stopped)")
            return False
        changed = False
        if inp.eyes_closed is not None and inp.eyes_closed != truth.eyes_closed:
            truth.eyes_closed = inp.eyes_closed
            changed = True
        if inp.alcohol_ppm is not None:
            ppm = max(0.0, min(1000.0, float(inp.alcohol_ppm)))
            if ppm != truth.ppm:
                truth.ppm = ppm
                changed = True
        return changed

    def _step(self, t: int) -> None:
        self._core.step_at(t)
        if self._core.new_recheck_at is not None:
            self._recheck_due.add(self._core.new_recheck_at)
        if self._core.new_ramp_ends_at is not None:
            self._ramp_due = self._core.new_ramp_ends_at
        for sink in self._sinks:
            for msg in self._core.new_alerts:
                sink.on_alert(alert_message_dict(msg))

    def state_message(self) -> dict:
        """Wire-format state snapshot at the current virtual time."""
        state = self._core.state
        acts = actuators_for(state)
        return {
            "type": "state",
            "t_ms": self._now,
            "phase": state.phase.value,
            "speed": command_speed(acts.motor, self._now, self._cfg.stop_duration),
            "alarm": acts.alarm,
            "red": acts.red_lamp,
            "green": acts.green_lamp,
            "vibration": acts.vibration,
        }

    def trace(self) -> Trace:
        return Trace(records=tuple(self._core.builder.records),
                     transcript=tuple(self._core.channel.transcript))


def alert_message_dict(msg: AlertMessage) -> dict:
    return {"type": "alert", "seq": msg.seq, "code": msg.code.name,
            "detail": msg.detail}
