"""Simulated cabin sensors: MQ3-style alcohol sensor and IR eye monitor.

Ground truth (ppm, eye state) comes from the scenario; these functions turn
it into timestamped raw samples, optionally with seeded noise. All functions
are pure except for the RNG, which callers pass in as a `random.Random` that
is advanced in place.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

ADC_MAX = 1023
FULL_SCALE_PPM = 500.0  # physical detection band tops out here
PPM_MAX = 1000.0


@dataclass(frozen=True)
class NoiseSpec:
    """Opt-in sensor noise. Defaults are noise-free so runs replay exactly."""

    seed: int = 0
    alcohol_jitter: float = 0.0  # std-dev in ADC counts
    eye_flip_prob: float = 0.0   # per-sample probability of a flipped reading

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"noise seed outside [0, 2^64): {self.seed}")
        if self.alcohol_jitter < 0:
            raise ValueError(f"alcohol_jitter must be nonnegative: {self.alcohol_jitter}")
        if not 0.0 <= self.eye_flip_prob <= 1.0:
            raise ValueError(f"eye_flip_prob outside [0,1]: {self.eye_flip_prob}")

    @property
    def silent(self) -> bool:
        return self.alcohol_jitter == 0.0 and self.eye_flip_prob == 0.0


@dataclass(frozen=True)
class SensorSample:
    """One timestamped reading pair."""

    at: int  # virtual time, ms
    alcohol_raw: int  # ADC counts 0..1023
    eyes_closed: bool

    def __post_init__(self) -> None:
        if self.at < 0:
            raise ValueError(f"sample timestamp must be nonnegative: {self.at}")
        if not 0 <= self.alcohol_raw <= ADC_MAX:
            raise ValueError(f"alcohol_raw outside [0,{ADC_MAX}]: {self.alcohol_raw}")


def mq3_raw(ppm: float) -> int:
    """Map an alcohol concentration to a 10-bit ADC count.

    Linear over the sensor's 0..500 ppm span; concentrations beyond full
    scale saturate. Monotone nondecreasing in ppm.
    """
    if ppm < 0:
        raise ValueError(f"ppm must be nonnegative: {ppm}")
    clamped = min(ppm, FULL_SCALE_PPM)
    return int(math.floor(clamped * ADC_MAX / FULL_SCALE_PPM + 0.5))


def classify_alcohol(raw: int, threshold: int) -> bool:
    """Strict exceedance: a reading equal to the threshold does not trigger."""
    if not 0 <= raw <= ADC_MAX:
        raise ValueError(f"raw outside [0,{ADC_MAX}]: {raw}")
    if not 0 <= threshold <= ADC_MAX:
        raise ValueError(f"threshold outside [0,{ADC_MAX}]: {threshold}")
    return raw > threshold


def sample_sensors(
    ppm: float,
    eyes_closed: bool,
    at: int,
    noise: NoiseSpec,
    rng: random.Random | None = None,
) -> SensorSample:
    """Draw one sample from ground truth, applying any configured noise.

    The RNG is only consumed when the corresponding noise term is active,
    so noise-free runs never depend on it (rng may then be None).
    """
    raw = mq3_raw(ppm)
    if noise.alcohol_jitter > 0.0:
        if rng is None:
            raise ValueError("alcohol_jitter requires an rng")
        raw = int(math.floor(raw + rng.gauss(0.0, noise.alcohol_jitter) + 0.5))
        raw = max(0, min(ADC_MAX, raw))
    eyes = eyes_closed
    if noise.eye_flip_prob > 0.0:
        if rng is None:
            raise ValueError("eye_flip_prob requires an rng")
        if rng.random() < noise.eye_flip_prob:
            eyes = not eyes
    return SensorSample(at=at, alcohol_raw=raw, eyes_closed=eyes)
