"""Framed alert channel: the serial link carrying alerts to the driver's phone.

Frames are sync + length + payload + CRC-8. The link simulator corrupts
frames per a configured bit error rate; corruption is detected by the
receiver and recovered by stop-and-wait retransmission. Link metrics
(measured data rate, per-message delay, error-correction ratio) are
computed from a transcript of send/corrupt/deliver events.
"""

from __future__ import annotations

import json
import random
import struct
from dataclasses import dataclass
from enum import Enum

SYNC = b"\xaa\x55"
MAX_DETAIL_BYTES = 64
_PAYLOAD_HEADER = struct.Struct(">HIB")  # seq u16, at u32 ms, code u8
MAX_DATA_RATE_BPS = 262_500.0  # 2.1 Mb/s link ceiling


class AlertCode(Enum):
    STATUS_EYES_OPEN = 0
    ALERT_EYES_CLOSED = 1
    ALERT_DROWSY = 2
    ALERT_URGENT_SLEEP = 3
    ALERT_ALCOHOL = 4
    MOTOR_RAMP = 5
    MOTOR_STOPPED = 6


@dataclass(frozen=True)
class AlertMessage:
    seq: int
    at: int  # ms
    code: AlertCode
    detail: str = ""

    def to_dict(self) -> dict:
        return {"seq": self.seq, "at": self.at, "code": self.code.name,
                "detail": self.detail}


# ---------------------------------------------------------------------------
# framing

_CRC_TABLE = []
for _b in range(256):
    _crc = _b
    for _ in range(8):
        _crc = ((_crc << 1) ^ 0x07) & 0xFF if _crc & 0x80 else (_crc << 1) & 0xFF
    _CRC_TABLE.append(_crc)


def crc8(data: bytes) -> int:
    """CRC-8, polynomial 0x07, init 0x00, MSB first."""
    crc = 0x00
    for b in data:
        crc = _CRC_TABLE[crc ^ b]
    return crc


class FrameEncodeError(ValueError):
    pass


class FrameErrorKind(Enum):
    BAD_SYNC = "BAD_SYNC"
    BAD_LENGTH = "BAD_LENGTH"
    BAD_CRC = "BAD_CRC"
    BAD_PAYLOAD = "BAD_PAYLOAD"


class FrameDecodeError(ValueError):
    def __init__(self, kind: FrameErrorKind, message: str):
        super().__init__(f"{kind.value}: {message}")
        self.kind = kind


def encode_frame(msg: AlertMessage) -> bytes:
    detail = msg.detail.encode("utf-8")
    if len(detail) > MAX_DETAIL_BYTES:
        raise FrameEncodeError(f"detail exceeds {MAX_DETAIL_BYTES} bytes: {len(detail)}")
    if not 0 <= msg.seq <= 0xFFFF:
        raise FrameEncodeError(f"seq outside u16 range: {msg.seq}")
    if not 0 <= msg.at <= 0xFFFFFFFF:
        raise FrameEncodeError(f"timestamp outside u32 range: {msg.at}")
    payload = _PAYLOAD_HEADER.pack(msg.seq, msg.at, msg.code.value) + detail
    body = bytes([len(payload)]) + payload
    return SYNC + body + bytes([crc8(body)])


def decode_frame(data: bytes) -> AlertMessage:
    """Total over arbitrary byte strings: returns a message or raises a
    FrameDecodeError with a typed kind, never anything else."""
    if len(data) < 2 or data[0:2] != SYNC:
        raise FrameDecodeError(FrameErrorKind.BAD_SYNC, "missing sync word")
    if len(data) < 4:
        raise FrameDecodeError(FrameErrorKind.BAD_LENGTH, "frame truncated")
    length = data[2]
    if len(data) != length + 4:
        raise FrameDecodeError(
            FrameErrorKind.BAD_LENGTH,
            f"length byte {length} does not match {len(data) - 4} payload bytes")
    if length > _PAYLOAD_HEADER.size + MAX_DETAIL_BYTES:
        raise FrameDecodeError(FrameErrorKind.BAD_LENGTH, f"payload too long: {length}")
    body = data[2:-1]
    if crc8(body) != data[-1]:
        raise FrameDecodeError(FrameErrorKind.BAD_CRC, "checksum mismatch")
    payload = data[3:-1]
    if len(payload) < _PAYLOAD_HEADER.size:
        raise FrameDecodeError(FrameErrorKind.BAD_PAYLOAD, "payload too short")
    seq, at, code_val = _PAYLOAD_HEADER.unpack(payload[:_PAYLOAD_HEADER.size])
    try:
        code = AlertCode(code_val)
    except ValueError:
        raise FrameDecodeError(FrameErrorKind.BAD_PAYLOAD, f"unknown code {code_val}") from None
    try:
        detail = payload[_PAYLOAD_HEADER.size:].decode("utf-8")
    except UnicodeDecodeError:
        raise FrameDecodeError(FrameErrorKind.BAD_PAYLOAD, "detail is not UTF-8") from None
    return AlertMessage(seq=seq, at=at, code=code, detail=detail)


# ---------------------------------------------------------------------------
# link simulation

@dataclass(frozen=True)
class ChannelConfig:
    data_rate: float = 960.0        # bytes/second (9600-baud-equivalent)
    propagation_delay: float = 3.0  # ms, one way
    bit_error_rate: float = 0.0     # per bit
    seed: int = 0
    max_retries: int = 3

    def __post_init__(self) -> None:
        if not 0 < self.data_rate <= MAX_DATA_RATE_BPS:
            raise ValueError(f"data_rate outside (0, {MAX_DATA_RATE_BPS:.0f}]: {self.data_rate}")
        if self.propagation_delay < 0:
            raise ValueError(f"propagation_delay must be nonnegative: {self.propagation_delay}")
        if not 0.0 <= self.bit_error_rate <= 1.0:
            raise ValueError(f"bit_error_rate outside [0,1]: {self.bit_error_rate}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be nonnegative: {self.max_retries}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed outside [0, 2^64): {self.seed}")


@dataclass(frozen=True)
class TransmitAttempt:
    started_at: float  # ms
    arrived_at: float  # ms, when the receiver finished hearing it
    corrupted: bool


@dataclass(frozen=True)
class DeliveryOutcome:
    delivered: bool
    delivered_at: float | None  # ms
    retries: int
    attempts: tuple[TransmitAttempt, ...]
    channel_free_at: float  # ms, when the link is ready for the next frame


def transmit(frame: bytes, config: ChannelConfig, now: float,
             rng: random.Random | None = None) -> DeliveryOutcome:
    """Push one frame through the lossy link with stop-and-wait recovery.

    Each attempt takes serialization time plus propagation delay; a
    corrupted attempt costs a further delay for the NAK to come back before
    the retransmission starts. Corruption of an attempt is decided by one
    draw with probability 1-(1-BER)^bits, equivalent in distribution to
    flipping each bit independently.
    """
    ser_ms = len(frame) / config.data_rate * 1000.0
    nbits = len(frame) * 8
    ber = config.bit_error_rate
    if ber <= 0.0 or nbits == 0:
        p_corrupt = 0.0
    elif ber >= 1.0:
        p_corrupt = 1.0
    else:
        p_corrupt = 1.0 - (1.0 - ber) ** nbits

    attempts: list[TransmitAttempt] = []
    start = float(now)
    for attempt in range(config.max_retries + 1):
        arrived = start + ser_ms + config.propagation_delay
        if p_corrupt <= 0.0:
            corrupted = False
        elif p_corrupt >= 1.0:
            corrupted = True
        else:
            if rng is None:
                raise ValueError("a nonzero bit_error_rate requires an rng")
            corrupted = rng.random() < p_corrupt
        attempts.append(TransmitAttempt(start, arrived, corrupted))
        if not corrupted:
            return DeliveryOutcome(True, arrived, attempt, tuple(attempts), arrived)
        start = arrived + config.propagation_delay  # NAK returns, then resend
    return DeliveryOutcome(False, None, config.max_retries, tuple(attempts),
                           attempts[-1].arrived_at + config.propagation_delay)


# ---------------------------------------------------------------------------
# transcript and metrics

@dataclass(frozen=True)
class TranscriptRecord:
    t_ms: int
    dir: str  # "send" | "corrupt" | "deliver"
    seq: int
    bytes: int


_TRANSCRIPT_DIRS = ("send", "corrupt", "deliver")


def transcript_to_jsonl(records) -> str:
    lines = []
    for r in records:
        lines.append(json.dumps(
            {"t_ms": r.t_ms, "dir": r.dir, "seq": r.seq, "bytes": r.bytes},
            separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def transcript_record_from_dict(d: dict) -> TranscriptRecord:
    t_ms = d["t_ms"]
    direction = d["dir"]
    seq = d["seq"]
    nbytes = d["bytes"]
    if not isinstance(t_ms, int) or not isinstance(seq, int) or not isinstance(nbytes, int):
        raise ValueError("t_ms, seq and bytes must be integers")
    if direction not in _TRANSCRIPT_DIRS:
        raise ValueError(f"unknown dir {direction!r}")
    return TranscriptRecord(t_ms=t_ms, dir=direction, seq=seq, bytes=nbytes)


@dataclass(frozen=True)
class ChannelMetrics:
    bytes_delivered: int
    elapsed: float  # seconds spanned by the transcript
    measured_data_rate: float | None  # bytes/second; None when undefined
    delays: tuple[int, ...]  # ms, one per delivered message, in delivery order
    messages_delivered: int
    errors_total: int
    errors_corrected: int
    ec_ratio: float
    ec_vacuous: bool  # no errors occurred, so the ratio is 1.0 by convention


def compute_metrics(transcript) -> ChannelMetrics:
    """Rate, per-message delay, and error-correction ratio over a finished
    transcript.

    An error counts as corrected when the frame it hit was eventually
    delivered by a retransmission. With no errors at all the ratio is 1.0
    (flagged vacuous).
    """
    records = list(transcript)
    if not records:
        return ChannelMetrics(0, 0.0, None, (), 0, 0, 0, 1.0, True)

    last_t = records[0].t_ms
    sends: dict[int, int] = {}
    corrupt_counts: dict[int, int] = {}
    delivered: dict[int, int] = {}
    delays: list[int] = []
    bytes_delivered = 0
    for r in records:
        if r.t_ms < last_t:
            raise ValueError(f"transcript not time-ordered at t={r.t_ms}")
        last_t = r.t_ms
        if r.dir == "send":
            sends.setdefault(r.seq, r.t_ms)
        elif r.dir == "corrupt":
            corrupt_counts[r.seq] = corrupt_counts.get(r.seq, 0) + 1
        elif r.dir == "deliver":
            delivered[r.seq] = r.t_ms
            bytes_delivered += r.bytes
            if r.seq in sends:
                delays.append(r.t_ms - sends[r.seq])
        else:
            raise ValueError(f"unknown dir {r.dir!r}")

    elapsed = (records[-1].t_ms - records[0].t_ms) / 1000.0
    rate = bytes_delivered / elapsed if elapsed > 0 else None
    errors_total = sum(corrupt_counts.values())
    errors_corrected = sum(n for seq, n in corrupt_counts.items() if seq in delivered)
    vacuous = errors_total == 0
    ec_ratio = 1.0 if vacuous else errors_corrected / errors_total
    return ChannelMetrics(
        bytes_delivered=bytes_delivered,
        elapsed=elapsed,
        measured_data_rate=rate,
        delays=tuple(delays),
        messages_delivered=len(delivered),
        errors_total=errors_total,
        errors_corrected=errors_corrected,
        ec_ratio=ec_ratio,
        ec_vacuous=vacuous,
    )
