"""Mapping from chewing rate to haptic pacing feedback.

The live rate is normalized against twice a personal reference rate, so
chewing at the reference lands at 0.5, and the normalized value selects one
of four pulse patterns. Faster chewing yields stronger patterns; the band
map is the core slow-down incentive.
"""

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

PULSE_PERIOD_S = 2.0


class FeedbackLevel(Enum):
    """Haptic patterns, ordered from no feedback to the strongest."""

    NO_PULSE = ("no_pulse", 0, "none")
    SINGLE_PULSE = ("single_pulse", 1, "normal")
    DOUBLE_PULSE = ("double_pulse", 2, "normal")
    INTENSE_DOUBLE = ("intense_double", 2, "high")

    def __init__(self, label, pulses, intensity):
        self.label = label
        self.pulses = pulses
        self.intensity = intensity

    @property
    def rank(self) -> int:
        return list(FeedbackLevel).index(self)


# Half-open normalized-rate bands, closed at the top of the scale.
BANDS = (
    (0.0, 0.3, FeedbackLevel.NO_PULSE),
    (0.3, 0.6, FeedbackLevel.SINGLE_PULSE),
    (0.6, 0.8, FeedbackLevel.DOUBLE_PULSE),
    (0.8, 1.0, FeedbackLevel.INTENSE_DOUBLE),
)


@dataclass(frozen=True)
class RateNormalizer:
    """Personal scale for the normalized rate: full scale is 2x reference."""

    reference_rate_hz: float

    def __post_init__(self):
        if self.reference_rate_hz <= 0:
            raise ValueError("reference rate must be positive")


class PulseEntry(NamedTuple):
    offset_s: float
    pulses: int
    intensity: str


def normalize_rate(rate_hz: float, normalizer: RateNormalizer) -> float:
    """Clamp rate / (2 * reference) into [0, 1]."""
    if rate_hz < 0:
        raise ValueError("rate must be non-negative")
    return min(1.0, max(0.0, rate_hz / (2.0 * normalizer.reference_rate_hz)))


def map_level(norm: float, prev: FeedbackLevel = None, dead_band: float = 0.0) -> FeedbackLevel:
    """Select the feedback level for a normalized rate.

    Values outside [0, 1] are clamped with a warning. With a previous level
    and a dead band, the level only changes once norm leaves the previous
    band by more than the dead band, which suppresses flapping right at a
    boundary.
    """
    if not 0.0 <= norm <= 1.0:
        warnings.warn(
            f"normalized rate {norm} outside [0, 1]; clamping", stacklevel=2
        )
        norm = min(1.0, max(0.0, norm))
    if prev is not None and dead_band > 0.0:
        lo, hi, _ = next(band for band in BANDS if band[2] is prev)
        if lo - dead_band <= norm < hi + dead_band:
            return prev
    for lo, hi, level in BANDS:
        if lo <= norm < hi:
            return level
    return FeedbackLevel.INTENSE_DOUBLE  # norm == 1.0


def pulse_schedule(
    level: FeedbackLevel, window_s: float, period_s: float = PULSE_PERIOD_S
) -> list:
    """Pulse timeline for holding a level over a window.

    One entry per pulse burst, every period_s starting at offset 0; NO_PULSE
    yields an empty schedule.
    """
    if window_s < 0:
        raise ValueError("window must be non-negative")
    if period_s <= 0:
        raise ValueError("period must be positive")
    if level is FeedbackLevel.NO_PULSE:
        return []
    out = []
    t = 0.0
    while t < window_s:
        out.append(PulseEntry(offset_s=t, pulses=level.pulses, intensity=level.intensity))
        t += period_s
    return out
