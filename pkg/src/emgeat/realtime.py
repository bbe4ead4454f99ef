"""Streaming chew detection with live rate tracking.

The streaming path mirrors the offline conditioning but swaps per-recording
min-max normalization (impossible on a live stream) for amplitude scaling
against a calibration reference recorded beforehand. Short overlapping
segments are classified by the linear model, smoothed by a majority vote
over the trailing predictions, and positive runs become chew events.

Timing uses the sample clock throughout, never the wall clock, so replaying
a stream reproduces the event log exactly regardless of pacing.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import sosfilt

from . import features as _features
from . import signal as _signal
from .events import baseline_stats, compute_threshold, detect_bursts
from .learn import LinearModel, decision_values
from .metrics import ChewEvent

RT_FEATURE_NAMES = ("mean", "sd", "peak_amp", "rms", "iemg", "mnf", "mnp")

# Reference amplitude = this percentile of per-burst envelope peaks.
CALIBRATION_PERCENTILE = 95.0

# Fraction of calibration chunks (quietest first) used for baseline stats.
_QUIET_FRACTION = 0.25
_CHUNK_S = 0.5


@dataclass(frozen=True)
class CalibrationProfile:
    """Per-session amplitude context captured before the meal."""

    reference_amplitude: float
    mu0: float
    delta0: float
    sample_rate: float
    effective_rate: float
    source: str = ""


@dataclass(frozen=True)
class StreamConfig:
    """Geometry of the streaming classifier.

    The hop is deliberately much finer than the segment so the 8-vote
    majority window stays shorter than the pause between consecutive chews;
    a coarser hop would fuse back-to-back chews into one event.
    """

    segment_s: float = 0.5
    hop_s: float = 0.03
    vote_window: int = 8
    rate_window_s: float = 5.0
    decimation: int = _signal.DECIMATION_FACTOR

    def __post_init__(self):
        if not 0 < self.hop_s <= self.segment_s:
            raise ValueError("hop must be positive and no longer than the segment")
        if self.vote_window < 1:
            raise ValueError("vote window must be >= 1")
        if self.rate_window_s <= 0:
            raise ValueError("rate window must be positive")


def calibrate(
    segments, sample_rate: float, source: str = ""
) -> CalibrationProfile:
    """Derive the amplitude reference from calibration recordings.

    Each raw segment is band-passed and rectified; baseline statistics come
    from the quietest chunks, bursts above mean + 5 sd are located, and the
    reference amplitude is the 95th percentile of the per-burst peaks.
    """
    if not segments:
        raise ValueError("no calibration segments")
    sos = _signal.design_bandpass(_signal.FilterSpec(sample_rate=sample_rate))
    rectified = [_signal.rectify(_signal.apply_filter(s, sos)) for s in segments]

    chunk = max(1, int(_CHUNK_S * sample_rate))
    chunk_rms = []
    for x in rectified:
        for i in range(0, x.size - chunk + 1, chunk):
            piece = x[i : i + chunk]
            chunk_rms.append((float(np.sqrt(np.mean(piece**2))), piece))
    if not chunk_rms:
        raise ValueError("calibration segments shorter than one chunk")
    chunk_rms.sort(key=lambda item: item[0])
    n_quiet = max(1, int(len(chunk_rms) * _QUIET_FRACTION))
    quiet = np.concatenate([piece for _, piece in chunk_rms[:n_quiet]])
    stats = baseline_stats(quiet)
    thr = compute_threshold(stats.mu, stats.sigma)

    peaks = []
    for x in rectified:
        for burst in detect_bursts(x, sample_rate, thr):
            lo = int(burst.onset_s * sample_rate)
            hi = int(burst.termination_s * sample_rate)
            peaks.append(float(x[lo:hi].max()))
    if not peaks:
        raise ValueError("no contractions detected in the calibration segments")

    return CalibrationProfile(
        reference_amplitude=float(np.percentile(peaks, CALIBRATION_PERCENTILE)),
        mu0=stats.mu,
        delta0=stats.sigma,
        sample_rate=sample_rate,
        effective_rate=sample_rate / _signal.DECIMATION_FACTOR,
        source=source,
    )


def rt_features(segment: np.ndarray, profile: CalibrationProfile) -> np.ndarray:
    """Seven features of one envelope segment, ordered as RT_FEATURE_NAMES.

    The segment is divided by the calibration reference first, which scales
    every amplitude feature by 1/reference; spectral shape is unaffected. On
    the non-negative envelope the "mean" entry equals the mean absolute
    value, so each entry matches its offline counterpart on the same input.
    """
    x = np.asarray(segment, dtype=float) / profile.reference_amplitude
    if x.size == 0:
        raise ValueError("empty segment")
    freqs, power = _features.periodogram(x, profile.effective_rate, taper=True)
    return np.array(
        [
            _features.mav(x),
            _features.sd(x),
            _features.peak_amp(x),
            _features.rms(x),
            _features.iemg(x),
            _features.mean_freq(freqs, power),
            _features.mean_power(power),
        ]
    )


def vote_filter(predictions, window: int = 8) -> np.ndarray:
    """Majority vote over the trailing `window` raw predictions.

    Position t looks at predictions[max(0, t-window+1) .. t]; a tie counts
    as negative, and early positions use however many predictions exist.
    """
    predictions = np.asarray(predictions, dtype=bool)
    out = np.empty(predictions.size, dtype=bool)
    for t in range(predictions.size):
        lo = max(0, t - window + 1)
        votes = predictions[lo : t + 1]
        out[t] = np.sum(votes) * 2 > votes.size
    return out


def assemble_events(
    votes, segment_s: float, hop_s: float, t0: float = 0.0
) -> list:
    """Turn the smoothed prediction stream into chew events.

    A maximal run of positive votes becomes one event spanning from the
    first positive segment's start to the last positive segment's end. When
    overlapping segments would make an event start before the previous one
    finished, the onset is clamped to the previous termination so the log
    stays non-overlapping.
    """
    votes = np.asarray(votes, dtype=bool)
    events = []
    run_start = None
    for k, v in enumerate(votes):
        if v and run_start is None:
            run_start = k
        elif not v and run_start is not None:
            events.append((run_start, k - 1))
            run_start = None
    if run_start is not None:
        events.append((run_start, votes.size - 1))

    out = []
    prev_term = -np.inf
    for first, last in events:
        onset = max(t0 + first * hop_s, prev_term)
        term = t0 + last * hop_s + segment_s
        out.append(ChewEvent(onset_s=onset, termination_s=term))
        prev_term = term
    return out


def live_rate(events, t: float, window_s: float = 5.0) -> float:
    """Chews per second over the trailing window at time t.

    Counts events lying wholly inside [t - window_s, t] and divides by the
    window length, so the rate ramps up over the first window of a session.
    """
    if window_s <= 0:
        raise ValueError("window must be positive")
    n = sum(1 for e in events if e.onset_s >= t - window_s and e.termination_s <= t)
    return n / window_s


@dataclass
class StreamState:
    """Mutable per-session detector state (one per live stream)."""

    raw_consumed: int = 0
    carry: np.ndarray = field(default_factory=lambda: np.zeros(0))
    envelope: list = field(default_factory=list)
    next_segment: int = 0
    raw_predictions: list = field(default_factory=list)
    prev_vote: bool = False
    run_start_s: float = None
    last_positive_end_s: float = None
    events: list = field(default_factory=list)


class StreamEngine:
    """Causal sample-in, event-out chew detector.

    push() accepts raw masseter samples in arrival order and returns any
    events that closed during that chunk. All state lives in a StreamState,
    and identical sample streams produce identical event logs no matter how
    the samples are chunked into pushes.
    """

    def __init__(
        self,
        model: LinearModel,
        profile: CalibrationProfile,
        config: StreamConfig = StreamConfig(),
    ):
        if tuple(model.feature_names) != RT_FEATURE_NAMES:
            raise ValueError("model was not trained on the streaming feature set")
        self.model = model
        self.profile = profile
        self.config = config
        self.sos = _signal.design_bandpass(
            _signal.FilterSpec(sample_rate=profile.sample_rate)
        )
        self._zi = np.zeros((self.sos.shape[0], 2))
        self.n_segment = int(config.segment_s * profile.effective_rate)
        self.n_hop = int(config.hop_s * profile.effective_rate)
        if self.n_segment < 1 or self.n_hop < 1:
            raise ValueError("segment or hop too short for the effective rate")
        self.state = StreamState()

    @property
    def current_time_s(self) -> float:
        return self.state.raw_consumed / self.profile.sample_rate

    @property
    def events(self) -> list:
        return list(self.state.events)

    def push(self, samples: np.ndarray) -> list:
        """Consume raw samples; return events closed by this chunk."""
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("expected a 1-D chunk of samples")
        if samples.size == 0:
            return []
        st = self.state
        filtered, self._zi = sosfilt(self.sos, samples, zi=self._zi)
        st.raw_consumed += samples.size

        # Decimate the rectified stream by block mean, carrying the ragged tail.
        buf = np.concatenate([st.carry, np.abs(filtered)])
        factor = self.config.decimation
        n_full = buf.size // factor
        if n_full:
            blocks = buf[: n_full * factor].reshape(n_full, factor).mean(axis=1)
            st.envelope.extend(blocks.tolist())
        st.carry = buf[n_full * factor :]

        return self._classify_ready_segments()

    def finalize(self) -> list:
        """Close a trailing open event at end of stream."""
        st = self.state
        if st.run_start_s is not None:
            event = ChewEvent(
                onset_s=self._clamped_onset(), termination_s=st.last_positive_end_s
            )
            st.events.append(event)
            st.run_start_s = None
            st.last_positive_end_s = None
            return [event]
        return []

    def rate_at(self, t: float) -> float:
        return live_rate(self.state.events, t, self.config.rate_window_s)

    def _clamped_onset(self) -> float:
        st = self.state
        onset = st.run_start_s
        if st.events and st.events[-1].termination_s > onset:
            onset = st.events[-1].termination_s
        return onset

    def _classify_ready_segments(self) -> list:
        st = self.state
        eff = self.profile.effective_rate
        closed = []
        while st.next_segment + self.n_segment <= len(st.envelope):
            start = st.next_segment
            segment = np.asarray(st.envelope[start : start + self.n_segment])
            feats = rt_features(segment, self.profile)
            positive = bool(decision_values(self.model, feats[None, :])[0] > 0)
            st.raw_predictions.append(positive)

            window = st.raw_predictions[-self.config.vote_window :]
            vote = sum(window) * 2 > len(window)

            start_s = start / eff
            end_s = (start + self.n_segment) / eff
            if vote:
                if st.run_start_s is None:
                    st.run_start_s = start_s
                st.last_positive_end_s = end_s
            elif st.run_start_s is not None:
                event = ChewEvent(
                    onset_s=self._clamped_onset(),
                    termination_s=st.last_positive_end_s,
                )
                st.events.append(event)
                closed.append(event)
                st.run_start_s = None
                st.last_positive_end_s = None
            st.prev_vote = vote
            st.next_segment += self.n_hop
        return closed


def rt_training_set(recording, profile: CalibrationProfile, config: StreamConfig = StreamConfig()):
    """Windowed streaming features for one recording, as a FeatureMatrix.

    Runs the exact streaming conditioning over the masseter channel offline
    and labels each segment positive when at least half of it overlaps a
    chew annotation.
    """
    sos = _signal.design_bandpass(_signal.FilterSpec(sample_rate=recording.sample_rate))
    env = _signal.downsample(
        _signal.rectify(_signal.apply_filter(recording.channel("masseter"), sos)),
        config.decimation,
    )
    eff = recording.sample_rate / config.decimation
    n_segment = int(config.segment_s * eff)
    n_hop = int(config.hop_s * eff)
    starts = _features.window_starts(env.size, n_segment, n_hop)
    chews = recording.annotations_of("chew")
    X = np.empty((starts.size, len(RT_FEATURE_NAMES)))
    labels = np.empty(starts.size, dtype=object)
    onsets = starts / eff
    terminations = (starts + n_segment) / eff
    for i, s in enumerate(starts):
        X[i] = rt_features(env[s : s + n_segment], profile)
        t0, t1 = onsets[i], terminations[i]
        covered = max(
            (
                min(t1, a.termination_s) - max(t0, a.onset_s)
                for a in chews
                if min(t1, a.termination_s) > max(t0, a.onset_s)
            ),
            default=0.0,
        )
        labels[i] = "C" if covered >= 0.5 * (t1 - t0) else _features.NEGATIVE_LABEL
    return _features.FeatureMatrix(
        feature_names=RT_FEATURE_NAMES,
        values=X,
        labels=labels,
        participants=np.full(starts.size, recording.participant_id, dtype=object),
        onsets_s=np.asarray(onsets, dtype=float),
        terminations_s=np.asarray(terminations, dtype=float),
    )
