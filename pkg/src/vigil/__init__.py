"""Deterministic driver-safety controller simulator.

A pure state machine escalates drowsiness and alcohol hazards to a latched
motor stop; simulated sensors, a linear motor ramp, a framed alert channel,
a scenario DSL, and twin simulation engines (discrete-event plus a 1 ms
fixed-step reference) make every run reproducible and cross-checkable.
"""

from .channel import (
    AlertCode,
    AlertMessage,
    ChannelConfig,
    ChannelMetrics,
    DeliveryOutcome,
    FrameDecodeError,
    FrameEncodeError,
    FrameErrorKind,
    TranscriptRecord,
    compute_metrics,
    crc8,
    decode_frame,
    encode_frame,
    transmit,
)
from .controller import (
    ActuatorState,
    ConfigError,
    ControllerConfig,
    ControllerState,
    Phase,
    RampCause,
    StepResult,
    actuators_for,
    controller_init,
    controller_reset,
    controller_step,
)
from .engine import (
    EngineInvariantError,
    Trace,
    TraceRecord,
    compare_traces,
    export_trace,
    export_trace_to_path,
    oracle_run,
    run,
    trace_records_from_jsonl,
)
from .motor import (
    MotorCommand,
    MotorCommandKind,
    MotorState,
    apply_motor_command,
    command_speed,
    speed_at,
)
from .scenario import (
    Diagnostic,
    GroundTruth,
    ScenarioParseError,
    ScenarioScript,
    format_scenario,
    ground_truth_at,
    lint_scenario,
    parse_scenario,
)
from .sensors import (
    NoiseSpec,
    SensorSample,
    classify_alcohol,
    mq3_raw,
    sample_sensors,
)

__version__ = "0.1.0"
