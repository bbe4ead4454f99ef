"""Core signal types and the amplitude-conditioning chain.

Raw two-channel recordings (masseter, submental) are conditioned in a fixed
order before any feature extraction: band-pass filter, full-wave
rectification, min-max normalization, decimation. The same chain, minus the
per-recording normalization, is reused by the streaming path.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, sosfilt

# Conditioning defaults. The band keeps the useful surface-EMG energy while
# removing motion drift below 20 Hz and out-of-band noise above 500 Hz.
DEFAULT_LOW_HZ = 20.0
DEFAULT_HIGH_HZ = 500.0
DEFAULT_ORDER = 5
DECIMATION_FACTOR = 10

# Annotation vocabulary used across the code base.
ANNOTATION_KINDS = ("chew", "swallow", "speech", "motion", "baseline")


@dataclass(frozen=True)
class Annotation:
    """Labelled time interval on a recording, in seconds from stream start."""

    kind: str
    onset_s: float
    termination_s: float

    def __post_init__(self):
        if self.kind not in ANNOTATION_KINDS:
            raise ValueError(f"unknown annotation kind {self.kind!r}")
        if self.onset_s < 0:
            raise ValueError(f"annotation onset {self.onset_s} is negative")
        if self.termination_s <= self.onset_s:
            raise ValueError(
                f"annotation termination {self.termination_s} not after onset {self.onset_s}"
            )

    @property
    def duration_s(self) -> float:
        return self.termination_s - self.onset_s


@dataclass
class RawRecording:
    """Multichannel EMG stream plus its ground-truth annotations.

    samples has shape (n_channels, n_samples); channel order matches
    channel_names.
    """

    participant_id: str
    sample_rate: float
    channel_names: tuple
    samples: np.ndarray
    annotations: list = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2:
            raise ValueError("samples must be 2-D (channels x samples)")
        if len(self.channel_names) != self.samples.shape[0]:
            raise ValueError("channel_names does not match samples shape")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        # Annotations are kept sorted so downstream sweeps can assume order.
        self.annotations = sorted(self.annotations, key=lambda a: (a.onset_s, a.termination_s))
        for ann in self.annotations:
            if ann.termination_s > self.duration_s + 1e-9:
                raise ValueError(
                    f"annotation {ann.kind} ends at {ann.termination_s}s, "
                    f"after the recording ({self.duration_s}s)"
                )

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channel_names:
            raise ValueError(f"no channel named {name!r}")
        return self.samples[self.channel_names.index(name)]

    def annotations_of(self, kind: str) -> list:
        return [a for a in self.annotations if a.kind == kind]


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass design parameters for one sampling rate."""

    low_hz: float = DEFAULT_LOW_HZ
    high_hz: float = DEFAULT_HIGH_HZ
    order: int = DEFAULT_ORDER
    sample_rate: float = 1024.0

    def __post_init__(self):
        nyquist = self.sample_rate / 2.0
        if not 0 < self.low_hz < self.high_hz:
            raise ValueError(
                f"invalid band edges low={self.low_hz} high={self.high_hz}"
            )
        if self.high_hz >= nyquist:
            raise ValueError(
                f"high cut {self.high_hz} Hz must stay below Nyquist ({nyquist} Hz)"
            )
        if self.order < 1:
            raise ValueError("filter order must be >= 1")


def design_bandpass(spec: FilterSpec) -> np.ndarray:
    """Design the Butterworth band-pass as second-order sections.

    The analog prototype of the given order is mapped with the bilinear
    transform, pre-warped so the digital response is -3 dB at both cut
    frequencies. Returns an sos array suitable for apply_filter.
    """
    nyquist = spec.sample_rate / 2.0
    low = spec.low_hz / nyquist
    high = spec.high_hz / nyquist
    return butter(spec.order, [low, high], btype="bandpass", output="sos")


def filter_poles(sos: np.ndarray) -> np.ndarray:
    """All poles of a cascaded-sections filter (for stability checks)."""
    poles = []
    for section in np.atleast_2d(sos):
        poles.extend(np.roots(section[3:]))
    return np.asarray(poles)


def apply_filter(x: np.ndarray, sos: np.ndarray) -> np.ndarray:
    """Run the filter causally over the samples (single forward pass).

    A forward pass keeps the path usable sample-by-sample in the streaming
    detector; no zero-phase (forward-backward) filtering is done anywhere.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D sample array")
    finite = np.isfinite(x)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise ValueError(f"non-finite sample at index {bad}")
    return sosfilt(sos, x)


def rectify(x: np.ndarray) -> np.ndarray:
    """Full-wave rectification."""
    return np.abs(np.asarray(x, dtype=float))


def normalize(x: np.ndarray) -> np.ndarray:
    """Min-max normalization of the whole recording to [0, 1].

    A constant signal has no usable dynamic range and maps to all zeros.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("cannot normalize an empty signal")
    lo = x.min()
    span = x.max() - lo
    if span == 0:
        return np.zeros_like(x)
    return (x - lo) / span


def downsample(x: np.ndarray, factor: int, mode: str = "mean") -> np.ndarray:
    """Reduce the rate by an integer factor.

    mode "mean" averages each block of `factor` samples (anti-alias smoothing
    of the rectified envelope); "stride" keeps every factor-th sample. A
    ragged final block is averaged over the samples it actually has.
    """
    x = np.asarray(x, dtype=float)
    if factor < 1 or int(factor) != factor:
        raise ValueError(f"decimation factor must be a positive integer, got {factor}")
    factor = int(factor)
    if x.size == 0:
        raise ValueError("cannot downsample an empty signal")
    if mode == "stride":
        return x[::factor].copy()
    if mode != "mean":
        raise ValueError(f"unknown downsample mode {mode!r}")
    n_full = x.size // factor
    out = np.empty(int(np.ceil(x.size / factor)))
    if n_full:
        out[:n_full] = x[: n_full * factor].reshape(n_full, factor).mean(axis=1)
    if x.size % factor:
        out[n_full] = x[n_full * factor :].mean()
    return out


@dataclass
class ProcessedSignal:
    """Conditioned single-channel envelope at the decimated rate."""

    samples: np.ndarray
    rate: float
    filter_spec: FilterSpec
    decimation: int

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.rate


def preprocess(
    x: np.ndarray,
    sample_rate: float,
    filter_spec: FilterSpec = None,
    decimation: int = DECIMATION_FACTOR,
    mode: str = "mean",
) -> ProcessedSignal:
    """Full conditioning chain: band-pass, rectify, normalize, decimate."""
    if filter_spec is None:
        filter_spec = FilterSpec(sample_rate=sample_rate)
    elif filter_spec.sample_rate != sample_rate:
        raise ValueError("filter_spec was designed for a different sample rate")
    sos = design_bandpass(filter_spec)
    y = apply_filter(x, sos)
    y = normalize(rectify(y))
    y = downsample(y, decimation, mode=mode)
    return ProcessedSignal(
        samples=y,
        rate=sample_rate / decimation,
        filter_spec=filter_spec,
        decimation=decimation,
    )


def preprocess_recording(recording: RawRecording, **kwargs) -> dict:
    """Condition every channel of a recording. Returns name -> ProcessedSignal."""
    return {
        name: preprocess(recording.channel(name), recording.sample_rate, **kwargs)
        for name in recording.channel_names
    }
