import random

import pytest
from hypothesis import given, settings, strategies as st

from vigil import (
    AlertCode,
    AlertMessage,
    ChannelConfig,
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


def msg(seq=0, at=0, code=AlertCode.STATUS_EYES_OPEN, detail=""):
    return AlertMessage(seq=seq, at=at, code=code, detail=detail)


# --- codec -------------------------------------------------------------------

def test_empty_detail_frame_layout():
    frame = encode_frame(msg())
    assert frame[:2] == b"\xaa\x55"
    assert frame[2] == len(frame) - 4  # length byte counts the payload
    assert crc8(frame[2:-1]) == frame[-1]


def test_round_trip_identity():
    m = msg(seq=7, code=AlertCode.ALERT_ALCOHOL, detail="raw=450")
    assert decode_frame(encode_frame(m)) == m


def test_oversize_detail_rejected():
    with pytest.raises(FrameEncodeError):
        encode_frame(msg(detail="x" * 65))
    encode_frame(msg(detail="x" * 64))


def test_bad_sync():
    with pytest.raises(FrameDecodeError) as exc:
        decode_frame(b"\x00\x00\x01\x02\x03")
    assert exc.value.kind is FrameErrorKind.BAD_SYNC


def test_bad_length():
    frame = bytearray(encode_frame(msg()))
    frame[2] ^= 0x01
    with pytest.raises(FrameDecodeError) as exc:
        decode_frame(bytes(frame))
    assert exc.value.kind is FrameErrorKind.BAD_LENGTH


def test_bad_crc():
    frame = bytearray(encode_frame(msg()))
    frame[-1] = (frame[-1] + 1) & 0xFF
    with pytest.raises(FrameDecodeError) as exc:
        decode_frame(bytes(frame))
    assert exc.value.kind is FrameErrorKind.BAD_CRC


def test_every_single_bit_flip_detected():
    # sync flips fail the sync check, length flips the length check, and
    # everything else lands on the CRC
    for detail in ("", "raw=450", "é" * 32):
        frame = encode_frame(msg(seq=99, at=123456, code=AlertCode.ALERT_DROWSY,
                                 detail=detail))
        for byte_index in range(len(frame)):
            for bit in range(8):
                corrupted = bytearray(frame)
                corrupted[byte_index] ^= 1 << bit
                with pytest.raises(FrameDecodeError) as exc:
                    decode_frame(bytes(corrupted))
                if byte_index < 2:
                    expected = FrameErrorKind.BAD_SYNC
                elif byte_index == 2:
                    expected = FrameErrorKind.BAD_LENGTH
                else:
                    expected = FrameErrorKind.BAD_CRC
                assert exc.value.kind is expected, (byte_index, bit)


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=0xFFFF),
       st.integers(min_value=0, max_value=0xFFFFFFFF),
       st.sampled_from(list(AlertCode)),
       st.text(max_size=21))
def test_round_trip_property(seq, at, code, detail):
    m = AlertMessage(seq=seq, at=at, code=code, detail=detail)
    if len(detail.encode("utf-8")) > 64:
        return
    assert decode_frame(encode_frame(m)) == m


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=90))
def test_decoder_total_over_arbitrary_bytes(data):
    try:
        decode_frame(data)
    except FrameDecodeError:
        pass


# --- link simulation ----------------------------------------------------------

def test_clean_delivery_timing():
    outcome = transmit(b"0123456789", ChannelConfig(), now=0.0)
    assert outcome.delivered
    assert outcome.retries == 0
    # 10 bytes at 960 B/s plus 3 ms propagation
    assert outcome.delivered_at == pytest.approx(10 / 960 * 1000 + 3, abs=1e-9)
    assert outcome.delivered_at == pytest.approx(13.41666, abs=1e-3)


def test_certain_corruption_loses_frame():
    cfg = ChannelConfig(bit_error_rate=1.0, max_retries=3)
    outcome = transmit(b"payload", cfg, now=0.0, rng=random.Random(0))
    assert not outcome.delivered
    assert outcome.retries == 3
    assert len(outcome.attempts) == 4
    assert all(a.corrupted for a in outcome.attempts)


def test_retry_recovers_and_counts():
    cfg = ChannelConfig(bit_error_rate=0.001, max_retries=5, seed=3)
    rng = random.Random(3)
    delivered = corrupted = 0
    for _ in range(300):
        outcome = transmit(b"x" * 16, cfg, now=0.0, rng=rng)
        if outcome.delivered:
            delivered += 1
        corrupted += sum(1 for a in outcome.attempts if a.corrupted)
    assert delivered > 250
    assert corrupted > 0


def test_retransmission_pushes_delivery_later():
    # ~30% of 80-bit frames corrupt at this BER, so a retry shows up quickly
    cfg = ChannelConfig(bit_error_rate=0.004, max_retries=10, seed=1)
    rng = random.Random(1)
    outcome = transmit(b"0123456789", cfg, now=0.0, rng=rng)
    while not (outcome.delivered and outcome.retries > 0):
        outcome = transmit(b"0123456789", cfg, now=0.0, rng=rng)
    clean = 10 / 960 * 1000 + 3
    assert outcome.delivered_at > clean


def test_transmit_deterministic_for_equal_seed():
    cfg = ChannelConfig(bit_error_rate=0.2, max_retries=4)
    a = [transmit(b"y" * 12, cfg, now=float(t), rng=random.Random(9)) for t in range(10)]
    b = [transmit(b"y" * 12, cfg, now=float(t), rng=random.Random(9)) for t in range(10)]
    assert a == b


def test_channel_config_validation():
    with pytest.raises(ValueError, match="data_rate"):
        ChannelConfig(data_rate=0.0)
    with pytest.raises(ValueError, match="data_rate"):
        ChannelConfig(data_rate=300_000.0)  # above the 2.1 Mb/s ceiling
    with pytest.raises(ValueError, match="bit_error_rate"):
        ChannelConfig(bit_error_rate=-0.1)
    with pytest.raises(ValueError, match="propagation_delay"):
        ChannelConfig(propagation_delay=-1.0)


# --- metrics -------------------------------------------------------------------

def rec(t, d, seq=0, nbytes=0):
    return TranscriptRecord(t_ms=t, dir=d, seq=seq, bytes=nbytes)


def test_data_rate_direct():
    transcript = [rec(0, "send", 0, 2100), rec(1000, "deliver", 0, 2100)]
    m = compute_metrics(transcript)
    assert m.bytes_delivered == 2100
    assert m.elapsed == 1.0
    assert m.measured_data_rate == 2100.0


def test_delay_direct():
    transcript = [rec(100, "send", 0, 10), rec(103, "deliver", 0, 10)]
    m = compute_metrics(transcript)
    assert m.delays == (3,)


def test_ec_ratio_three_of_four():
    transcript = [
        rec(0, "send", 0, 10), rec(5, "corrupt", 0, 10), rec(10, "corrupt", 0, 10),
        rec(15, "corrupt", 0, 10), rec(20, "deliver", 0, 10),
        rec(30, "send", 1, 10), rec(35, "corrupt", 1, 10),
    ]
    m = compute_metrics(transcript)
    assert m.errors_total == 4
    assert m.errors_corrected == 3
    assert m.ec_ratio == 0.75
    assert not m.ec_vacuous


def test_ec_ratio_vacuous_without_errors():
    m = compute_metrics([rec(0, "send", 0, 10), rec(13, "deliver", 0, 10)])
    assert m.ec_ratio == 1.0
    assert m.ec_vacuous


def test_empty_transcript_flagged_undefined():
    m = compute_metrics([])
    assert m.bytes_delivered == 0
    assert m.measured_data_rate is None
    assert m.errors_total == 0


def test_conservation_corrected_not_above_total():
    rng = random.Random(4)
    cfg = ChannelConfig(bit_error_rate=0.3, max_retries=2, seed=4)
    transcript = []
    t = 0
    for seq in range(50):
        outcome = transmit(b"z" * 10, cfg, now=float(t), rng=rng)
        transcript.append(rec(t, "send", seq, 10))
        for a in outcome.attempts:
            if a.corrupted:
                transcript.append(rec(int(a.arrived_at), "corrupt", seq, 10))
        if outcome.delivered:
            transcript.append(rec(int(outcome.delivered_at), "deliver", seq, 10))
        t = int(outcome.channel_free_at) + 1
    m = compute_metrics(transcript)
    assert m.errors_corrected <= m.errors_total
    delivered = sum(1 for r in transcript if r.dir == "deliver")
    assert m.messages_delivered == delivered


def test_out_of_order_transcript_rejected():
    with pytest.raises(ValueError, match="time-ordered"):
        compute_metrics([rec(10, "send"), rec(5, "deliver")])
