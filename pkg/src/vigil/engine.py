"""Deterministic simulation engines over a virtual millisecond clock.

`run` is the production path: a discrete-event executor that schedules
sensor samples, recheck deadlines, ramp completion, and channel deliveries
on a priority queue. `oracle_run` is the verification path: a brute-force
interpreter that walks every millisecond and fires whatever is due. Both
produce the same trace schema and, on any script, must agree.

Shared rules (applied identically by both engines):

* sensor cadence grids are anchored at t=0 (eye and alcohol periods from
  the controller config);
* a scripted ground-truth change triggers an immediate extra sample at the
  event's own timestamp;
* recheck deadlines and ramp completion force a sample at the deadline;
* everything due at one instant collapses into a single controller step;
* within one instant the order is: scenario end, controller step, channel
  deliveries;
* a run ends at the scenario end time, or earlier once the controller has
  latched STOPPED and the last channel delivery has drained.
"""

from __future__ import annotations

import heapq
import io
import json
import math
import random
from dataclasses import dataclass
from typing import Iterable

from .channel import (
    AlertMessage,
    ChannelConfig,
    TranscriptRecord,
    encode_frame,
    transmit,
)
from .controller import (
    ActuatorState,
    ControllerConfig,
    ControllerState,
    Phase,
    actuators_for,
    controller_init,
    controller_step,
)
from .motor import MotorCommandKind, command_speed
from .scenario import GroundTruthTimeline, ScenarioScript, sensor_change_instants
from .sensors import NoiseSpec, SensorSample, sample_sensors

_ZERO_NOISE = NoiseSpec()


class EngineInvariantError(RuntimeError):
    """An internal scheduling invariant broke; this is a bug, never silent."""


@dataclass(frozen=True)
class TraceRecord:
    t_ms: int
    kind: str  # phase_change | actuator | motor_speed | alert_sent | alert_delivered | sample
    phase: str
    speed: float
    alarm: bool
    red: bool
    green: bool
    vibration: bool
    code: str = ""
    detail: str = ""
    seq: int | None = None

    def to_dict(self) -> dict:
        d = {
            "t_ms": self.t_ms, "kind": self.kind, "phase": self.phase,
            "speed": self.speed, "alarm": self.alarm, "red": self.red,
            "green": self.green, "vibration": self.vibration,
            "code": self.code, "detail": self.detail,
        }
        if self.seq is not None:
            d["seq"] = self.seq
        return d


@dataclass(frozen=True)
class Trace:
    records: tuple[TraceRecord, ...]
    transcript: tuple[TranscriptRecord, ...]


def _round_ms(x: float) -> int:
    return int(math.floor(x + 0.5))


class _ChannelDriver:
    """Serializes alert sends through the lossy link and keeps the transcript.

    The link is stop-and-wait: a message emitted while a previous frame is
    still in flight starts transmitting once the link frees up.
    """

    def __init__(self, config: ChannelConfig):
        self.config = config
        self.rng = random.Random(config.seed)
        self.free_at = 0.0
        self.transcript: list[TranscriptRecord] = []
        self.pending: list[tuple[int, AlertMessage]] = []  # (deliver_ms, message)

    def send(self, message: AlertMessage, now: int) -> int | None:
        frame = encode_frame(message)
        start = max(float(now), self.free_at)
        outcome = transmit(frame, self.config, start, self.rng)
        size = len(frame)
        self.transcript.append(
            TranscriptRecord(_round_ms(start), "send", message.seq, size))
        for attempt in outcome.attempts:
            if attempt.corrupted:
                self.transcript.append(
                    TranscriptRecord(_round_ms(attempt.arrived_at), "corrupt",
                                     message.seq, size))
        self.free_at = outcome.channel_free_at
        if not outcome.delivered:
            return None
        deliver_ms = _round_ms(outcome.delivered_at)
        self.transcript.append(TranscriptRecord(deliver_ms, "deliver", message.seq, size))
        self.pending.append((deliver_ms, message))
        return deliver_ms

    def clipped_transcript(self, end_ms: int) -> tuple[TranscriptRecord, ...]:
        return tuple(r for r in self.transcript if r.t_ms <= end_ms)


class _TraceBuilder:
    """Turns controller activity into trace records with change detection.

    Every record carries a snapshot of the phase, current motor speed, and
    lamp/alarm/vibration outputs at its timestamp.
    """

    def __init__(self, config: ControllerConfig):
        self._config = config
        self.records: list[TraceRecord] = []
        self._phase = Phase.NORMAL
        self._ramp_cause = None
        self._actuators: ActuatorState | None = None
        self._last_speed: float | None = None
        self._last_motor_kind: MotorCommandKind | None = None

    def _speed(self, t: int) -> float:
        assert self._actuators is not None
        return command_speed(self._actuators.motor, t, self._config.stop_duration)

    def _snapshot(self, t: int, kind: str, **extra) -> TraceRecord:
        a = self._actuators
        return TraceRecord(
            t_ms=t, kind=kind, phase=self._phase.value, speed=self._speed(t),
            alarm=a.alarm, red=a.red_lamp, green=a.green_lamp,
            vibration=a.vibration, **extra)

    def baseline(self, state: ControllerState, actuators: ActuatorState) -> None:
        self._phase = state.phase
        self._actuators = actuators
        self._last_speed = self._speed(0)
        self._last_motor_kind = actuators.motor.kind
        self.records.append(self._snapshot(0, "actuator"))
        self.records.append(self._snapshot(0, "motor_speed"))

    def step(self, t: int, sample: SensorSample, state: ControllerState,
             actuators: ActuatorState, alerts: Iterable[AlertMessage]) -> None:
        prev_phase = self._phase
        prev_actuators = self._actuators
        self._phase = state.phase
        self._actuators = actuators

        self.records.append(self._snapshot(
            t, "sample",
            detail=f"raw={sample.alcohol_raw} "
                   f"eyes={'closed' if sample.eyes_closed else 'open'}"))
        if state.phase is not prev_phase:
            self.records.append(self._snapshot(
                t, "phase_change", detail=f"{prev_phase.value}->{state.phase.value}"))
        lamps = (actuators.alarm, actuators.red_lamp, actuators.green_lamp,
                 actuators.vibration)
        prev_lamps = (prev_actuators.alarm, prev_actuators.red_lamp,
                      prev_actuators.green_lamp, prev_actuators.vibration)
        if lamps != prev_lamps:
            self.records.append(self._snapshot(t, "actuator"))
        speed = self._speed(t)
        if speed != self._last_speed or actuators.motor.kind != self._last_motor_kind:
            self._last_speed = speed
            self._last_motor_kind = actuators.motor.kind
            self.records.append(self._snapshot(t, "motor_speed"))
        for msg in alerts:
            self.records.append(self._snapshot(
                t, "alert_sent", code=msg.code.name, detail=msg.detail, seq=msg.seq))

    def delivered(self, t: int, msg: AlertMessage) -> None:
        self.records.append(self._snapshot(
            t, "alert_delivered", code=msg.code.name, detail=msg.detail, seq=msg.seq))


class _SimCore:
    """State shared by both engines: controller, sensors, channel, recorder.

    The engines differ only in how they decide *when* to step; everything a
    step does is identical and lives here.
    """

    def __init__(self, script: ScenarioScript, controller_cfg: ControllerConfig,
                 channel_cfg: ChannelConfig):
        self.script = script
        self.config = controller_cfg
        self.truth = GroundTruthTimeline(script)
        self.state = controller_init(controller_cfg)
        self.channel = _ChannelDriver(channel_cfg)
        self.builder = _TraceBuilder(controller_cfg)
        self.builder.baseline(self.state, actuators_for(self.state))
        self.sensor_rng: random.Random | None = None
        self._active_noise: NoiseSpec | None = None
        self.delivered_upto = 0  # pending-deliveries pointer
        self.stopped = False
        # Outputs of the most recent step, for the engines' scheduling logic.
        self.new_recheck_at: int | None = None
        self.new_ramp_ends_at: int | None = None
        self.new_deliveries: list[int] = []
        self.new_alerts: tuple[AlertMessage, ...] = ()

    def step_at(self, t: int) -> None:
        self.truth.advance_to(t)
        noise = self.truth.noise
        if noise is not self._active_noise:
            self._active_noise = noise
            self.sensor_rng = None if noise is None else random.Random(noise.seed)
        sample = sample_sensors(self.truth.ppm, self.truth.eyes_closed, t,
                                noise or _ZERO_NOISE, self.sensor_rng)
        prev = self.state
        result = controller_step(prev, sample, t)
        if result.latched:
            raise EngineInvariantError(f"step scheduled after latched stop at t={t}")
        self.state = result.state
        self.builder.step(t, sample, result.state, result.actuators, result.alerts)

        self.new_recheck_at = None
        if (result.state.recheck_at is not None
                and result.state.recheck_at != prev.recheck_at):
            self.new_recheck_at = result.state.recheck_at
        self.new_ramp_ends_at = None
        if result.state.phase is Phase.RAMP_DOWN and prev.phase is not Phase.RAMP_DOWN:
            self.new_ramp_ends_at = result.state.ramp_ends_at
        self.new_deliveries = []
        self.new_alerts = result.alerts
        for msg in result.alerts:
            deliver_ms = self.channel.send(msg, t)
            if deliver_ms is not None:
                self.new_deliveries.append(deliver_ms)
        if result.state.phase is Phase.STOPPED:
            self.stopped = True

    def drain_deliveries(self, t: int) -> None:
        pending = self.channel.pending
        while (self.delivered_upto < len(pending)
               and pending[self.delivered_upto][0] <= t):
            deliver_ms, msg = pending[self.delivered_upto]
            self.builder.delivered(deliver_ms, msg)
            self.delivered_upto += 1

    def deliveries_drained(self) -> bool:
        return self.delivered_upto >= len(self.channel.pending)

    def finish(self) -> Trace:
        return Trace(records=tuple(self.builder.records),
                     transcript=self.channel.clipped_transcript(self.script.end_at_ms))


# ---------------------------------------------------------------------------
# discrete-event engine

_K_END = "SCENARIO_END"
_K_EYES = "SAMPLE_EYES"
_K_ALCOHOL = "SAMPLE_ALCOHOL"
_K_RECHECK = "RECHECK"
_K_RAMP = "RAMP_COMPLETE"
_K_DELIVERY = "CHANNEL_DELIVERY"
_STEP_KINDS = (_K_EYES, _K_ALCOHOL, _K_RECHECK, _K_RAMP)


@dataclass(frozen=True)
class SimEvent:
    at: int
    seq: int
    kind: str
    periodic: bool = False


def run(script: ScenarioScript, controller_cfg: ControllerConfig | None = None,
        channel_cfg: ChannelConfig | None = None) -> Trace:
    """Execute a scenario on the discrete-event engine."""
    cfg = controller_cfg or ControllerConfig()
    core = _SimCore(script, cfg, channel_cfg or ChannelConfig())

    heap: list[tuple[int, int, SimEvent]] = []
    seq_counter = 0
    now = 0

    def schedule(at: int, kind: str, periodic: bool = False) -> None:
        nonlocal seq_counter
        if at < now:
            raise EngineInvariantError(f"{kind} scheduled in the past: {at} < {now}")
        ev = SimEvent(at=at, seq=seq_counter, kind=kind, periodic=periodic)
        seq_counter += 1
        heapq.heappush(heap, (ev.at, ev.seq, ev))

    schedule(script.end_at_ms, _K_END)
    eye_changes, alcohol_changes = sensor_change_instants(script)
    for t in eye_changes:
        if t <= script.end_at_ms:
            schedule(t, _K_EYES)
    for t in alcohol_changes:
        if t <= script.end_at_ms:
            schedule(t, _K_ALCOHOL)
    schedule(0, _K_EYES, periodic=True)
    schedule(0, _K_ALCOHOL, periodic=True)

    scheduled_rechecks: set[int] = set()
    while heap:
        if core.stopped and core.deliveries_drained():
            break  # quiescent after the latched stop
        t = heap[0][0]
        batch: list[SimEvent] = []
        while heap and heap[0][0] == t:
            batch.append(heapq.heappop(heap)[2])
        now = t

        if any(ev.kind == _K_END for ev in batch):
            break
        step_events = [ev for ev in batch if ev.kind in _STEP_KINDS]
        if step_events and not core.stopped:
            core.step_at(t)
            for ev in step_events:
                if ev.periodic and not core.stopped:
                    period = (cfg.eye_period_ms if ev.kind == _K_EYES
                              else cfg.alcohol_period_ms)
                    schedule(t + period, ev.kind, periodic=True)
            if core.new_recheck_at is not None and core.new_recheck_at not in scheduled_rechecks:
                scheduled_rechecks.add(core.new_recheck_at)
                schedule(core.new_recheck_at, _K_RECHECK)
            if core.new_ramp_ends_at is not None:
                schedule(core.new_ramp_ends_at, _K_RAMP)
            for deliver_ms in core.new_deliveries:
                schedule(deliver_ms, _K_DELIVERY)
        core.drain_deliveries(t)

    return core.finish()


# ---------------------------------------------------------------------------
# fixed-step oracle

def oracle_run(script: ScenarioScript, controller_cfg: ControllerConfig | None = None,
               channel_cfg: ChannelConfig | None = None) -> Trace:
    """Reference interpretation: visit every millisecond and fire whatever
    is due. Slow but has no scheduler to get wrong."""
    cfg = controller_cfg or ControllerConfig()
    core = _SimCore(script, cfg, channel_cfg or ChannelConfig())

    eye_changes, alcohol_changes = sensor_change_instants(script)
    change_set = set(eye_changes) | set(alcohol_changes)
    eye_period = cfg.eye_period_ms
    alcohol_period = cfg.alcohol_period_ms
    next_eye = 0
    next_alcohol = 0
    recheck_due: set[int] = set()
    ramp_due: int | None = None
    end_ms = script.end_at_ms

    t = 0
    while t <= end_ms:
        if t == end_ms:
            break
        due = False
        if t == next_eye:
            due = True
            next_eye += eye_period
        if t == next_alcohol:
            due = True
            next_alcohol += alcohol_period
        if t in change_set:
            due = True
        if t in recheck_due:
            due = True
            recheck_due.discard(t)
        if ramp_due == t:
            due = True
            ramp_due = None
        if due and not core.stopped:
            core.step_at(t)
            if core.new_recheck_at is not None:
                recheck_due.add(core.new_recheck_at)
            if core.new_ramp_ends_at is not None:
                ramp_due = core.new_ramp_ends_at
        core.drain_deliveries(t)
        if core.stopped and core.deliveries_drained():
            break
        t += 1

    return core.finish()


# ---------------------------------------------------------------------------
# trace comparison and export

def compare_traces(a: Trace, b: Trace, tolerance_ms: int = 1) -> list[str]:
    """Differences between two traces; empty means equivalent. Timestamps
    may differ by up to tolerance_ms, every other field must match."""
    diffs: list[str] = []
    if len(a.records) != len(b.records):
        diffs.append(f"record count {len(a.records)} != {len(b.records)}")
    for i, (ra, rb) in enumerate(zip(a.records, b.records)):
        if abs(ra.t_ms - rb.t_ms) > tolerance_ms:
            diffs.append(f"record {i}: t_ms {ra.t_ms} vs {rb.t_ms}")
        da, db = ra.to_dict(), rb.to_dict()
        da.pop("t_ms"), db.pop("t_ms")
        if da != db:
            diffs.append(f"record {i}: {da} != {db}")
        if len(diffs) >= 20:
            diffs.append("...")
            return diffs
    if a.transcript != b.transcript:
        diffs.append("channel transcripts differ")
    return diffs


CSV_HEADER = "t_ms,kind,phase,speed,alarm,red,green,vibration,code,detail"


class ExportError(OSError):
    def __init__(self, message: str, bytes_written: int):
        super().__init__(f"{message} (after {bytes_written} bytes)")
        self.bytes_written = bytes_written


def _bool_str(b: bool) -> str:
    return "true" if b else "false"


def _csv_field(text: str) -> str:
    if any(c in text for c in ",\"\n"):
        return '"' + text.replace('"', '""') + '"'
    return text


def _record_lines(trace: Trace, fmt: str) -> Iterable[str]:
    if fmt == "jsonl":
        for r in trace.records:
            yield json.dumps(r.to_dict(), separators=(",", ":")) + "\n"
        return
    if fmt != "csv":
        raise ValueError(f"unknown trace format {fmt!r}")
    yield CSV_HEADER + "\n"
    for r in trace.records:
        yield ",".join((
            str(r.t_ms), r.kind, r.phase, str(r.speed), _bool_str(r.alarm),
            _bool_str(r.red), _bool_str(r.green), _bool_str(r.vibration),
            r.code, _csv_field(r.detail))) + "\n"


def export_trace(trace: Trace, fmt: str, sink) -> int:
    """Write a trace to a text sink; returns the byte count written.

    A sink failure surfaces as ExportError carrying how many bytes made it
    out before the failure.
    """
    written = 0
    for line in _record_lines(trace, fmt):
        try:
            sink.write(line)
        except OSError as exc:
            raise ExportError(f"trace export failed: {exc}", written) from exc
        written += len(line.encode("utf-8"))
    return written


def export_trace_to_path(trace: Trace, fmt: str, path) -> int:
    with io.open(path, "w", encoding="utf-8", newline="") as sink:
        return export_trace(trace, fmt, sink)


def trace_records_from_jsonl(text: str) -> tuple[TraceRecord, ...]:
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        records.append(TraceRecord(
            t_ms=d["t_ms"], kind=d["kind"], phase=d["phase"], speed=d["speed"],
            alarm=d["alarm"], red=d["red"], green=d["green"],
            vibration=d["vibration"], code=d["code"], detail=d["detail"],
            seq=d.get("seq")))
    return tuple(records)
