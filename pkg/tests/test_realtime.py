"""Streaming detector tests: calibration, voting, event assembly, engine.

The engine checks run a trained model over a synthetic session and compare
against the session's own annotations, so they exercise the full causal
path (filter state, decimation carry, vote smoothing) rather than single
functions in isolation.
"""

import numpy as np
import pytest

import emgeat.learn as learn
import emgeat.realtime as rt
from emgeat.metrics import ChewEvent

FS = 1024.0


def tone_burst_recording(peak=0.8, n_bursts=10, seed=4):
    """Silence plus identical Hann-enveloped 80 Hz tone bursts.

    The soft envelope avoids filter-transient overshoot, so the rectified
    band-passed peak of every burst is the tone amplitude times the filter
    gain at 80 Hz (within a fraction of a percent of 1).
    """
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1e-3, int(20 * FS))
    n_b = int(0.4 * FS)
    env = np.hanning(n_b)
    for k in range(n_bursts):
        lo = int((1.0 + 2.0 * k) * FS)
        t = np.arange(lo, lo + n_b) / FS
        x[lo : lo + n_b] += peak * env * np.sin(2 * np.pi * 80.0 * t)
    return x


class TestCalibrate:
    def test_reference_matches_known_burst_peak(self):
        profile = rt.calibrate([tone_burst_recording(peak=0.8)], FS)
        assert profile.reference_amplitude == pytest.approx(0.8, rel=0.05)

    def test_reference_scales_linearly_with_amplitude(self):
        x = tone_burst_recording()
        a = rt.calibrate([x], FS)
        b = rt.calibrate([2.0 * x], FS)
        assert b.reference_amplitude == pytest.approx(
            2.0 * a.reference_amplitude, rel=1e-12
        )
        assert b.mu0 == pytest.approx(2.0 * a.mu0, rel=1e-12)
        assert b.delta0 == pytest.approx(2.0 * a.delta0, rel=1e-12)

    def test_profile_rates(self):
        profile = rt.calibrate([tone_burst_recording()], FS, source="desk")
        assert profile.sample_rate == FS
        assert profile.effective_rate == pytest.approx(FS / 10)
        assert profile.source == "desk"

    def test_silent_segments_rejected(self):
        with pytest.raises(ValueError, match="no contractions"):
            rt.calibrate([np.zeros(int(5 * FS))], FS)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError, match="no calibration segments"):
            rt.calibrate([], FS)

    def test_segment_shorter_than_chunk_rejected(self):
        with pytest.raises(ValueError, match="chunk"):
            rt.calibrate([np.ones(int(0.2 * FS))], FS)


def make_profile(reference=1.0):
    return rt.CalibrationProfile(
        reference_amplitude=reference,
        mu0=0.1,
        delta0=0.02,
        sample_rate=FS,
        effective_rate=FS / 10,
    )


class TestRtFeatures:
    def test_constant_segment(self):
        x = np.full(64, 0.5)
        f = rt.rt_features(x, make_profile(reference=1.0))
        by_name = dict(zip(rt.RT_FEATURE_NAMES, f))
        assert by_name["mean"] == pytest.approx(0.5)
        assert by_name["sd"] == pytest.approx(0.0, abs=1e-12)
        assert by_name["peak_amp"] == pytest.approx(0.5)
        assert by_name["rms"] == pytest.approx(0.5)
        assert by_name["iemg"] == pytest.approx(0.5 * 64)

    def test_independent_formulas(self):
        # Recompute all seven from first principles on the scaled segment.
        rng = np.random.default_rng(11)
        seg = rng.uniform(0.0, 1.0, 51)
        profile = make_profile(reference=0.7)
        f = rt.rt_features(seg, profile)
        x = seg / 0.7
        n = x.size
        eff = profile.effective_rate
        tapered = x * np.hamming(n)
        power = np.abs(np.fft.rfft(tapered)) ** 2 / n
        freqs = np.fft.rfftfreq(n, d=1.0 / eff)
        expected = [
            np.mean(np.abs(x)),
            np.std(x, ddof=1),
            np.max(np.abs(x)),
            np.sqrt(np.mean(x**2)),
            np.sum(np.abs(x)),
            np.sum(freqs * power) / np.sum(power),
            np.mean(power),
        ]
        assert np.allclose(f, expected, rtol=1e-9)

    def test_reference_scales_amplitude_features_only(self):
        rng = np.random.default_rng(12)
        seg = rng.uniform(0.0, 1.0, 51)
        f1 = rt.rt_features(seg, make_profile(reference=1.0))
        f2 = rt.rt_features(seg, make_profile(reference=0.5))
        names = list(rt.RT_FEATURE_NAMES)
        for name in ("mean", "sd", "peak_amp", "rms", "iemg"):
            i = names.index(name)
            assert f2[i] == pytest.approx(2.0 * f1[i], rel=1e-12)
        assert f2[names.index("mnf")] == pytest.approx(
            f1[names.index("mnf")], rel=1e-12
        )
        assert f2[names.index("mnp")] == pytest.approx(
            4.0 * f1[names.index("mnp")], rel=1e-12
        )

    def test_empty_segment_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            rt.rt_features(np.array([]), make_profile())


class TestVoteFilter:
    def test_all_positive(self):
        assert rt.vote_filter([True] * 8).all()

    def test_isolated_positive_suppressed(self):
        preds = np.zeros(12, dtype=bool)
        preds[5] = True
        assert not rt.vote_filter(preds, window=8).any()

    def test_tie_counts_negative(self):
        # 4 of 8 at the first full window is a tie -> negative.
        preds = [True] * 4 + [False] * 4
        out = rt.vote_filter(preds, window=8)
        assert not out[7]
        assert out[:7].all()  # early partial windows are majority-positive

    def test_startup_uses_partial_window(self):
        out = rt.vote_filter([True, False, False], window=8)
        assert out.tolist() == [True, False, False]

    def test_known_sequence(self):
        preds = [False, True, True, True, True, False, False, False, False, False]
        out = rt.vote_filter(preds, window=4)
        # t=1 sees [F,T]: a tie, so the run only opens at t=2.
        assert out.tolist() == [
            False, False, True, True, True, True, False, False, False, False,
        ]


class TestAssembleEvents:
    def test_single_run(self):
        events = rt.assemble_events(
            [False, True, True, True, False], segment_s=0.5, hop_s=0.25
        )
        assert len(events) == 1
        assert events[0].onset_s == pytest.approx(0.25)
        assert events[0].termination_s == pytest.approx(1.25)

    def test_all_negative(self):
        assert rt.assemble_events([False] * 6, 0.5, 0.25) == []

    def test_trailing_open_run_closes_at_end(self):
        events = rt.assemble_events([False, True, True], 0.5, 0.25)
        assert len(events) == 1
        assert events[0].termination_s == pytest.approx(2 * 0.25 + 0.5)

    def test_onset_clamped_to_previous_termination(self):
        # Long segments overlap across the one-vote gap; the log must not.
        events = rt.assemble_events(
            [True, True, False, True, True], segment_s=1.0, hop_s=0.25
        )
        assert len(events) == 2
        assert events[0].termination_s == pytest.approx(1.25)
        assert events[1].onset_s == pytest.approx(1.25)  # clamped up from 0.75
        assert events[1].termination_s == pytest.approx(2.0)

    def test_time_origin_offset(self):
        base = rt.assemble_events([True, True, False], 0.5, 0.25)
        shifted = rt.assemble_events([True, True, False], 0.5, 0.25, t0=10.0)
        assert shifted[0].onset_s == pytest.approx(base[0].onset_s + 10.0)
        assert shifted[0].termination_s == pytest.approx(
            base[0].termination_s + 10.0
        )


class TestLiveRate:
    def test_five_events_in_window(self):
        events = [
            ChewEvent(5.1, 5.4),
            ChewEvent(6.0, 6.3),
            ChewEvent(7.0, 7.3),
            ChewEvent(8.0, 8.3),
            ChewEvent(9.5, 9.8),
        ]
        assert rt.live_rate(events, t=10.0, window_s=5.0) == pytest.approx(1.0)

    def test_empty_log(self):
        assert rt.live_rate([], t=3.0) == 0.0

    def test_partial_overlap_excluded(self):
        # Only events lying wholly inside the window count.
        events = [ChewEvent(4.9, 5.2), ChewEvent(9.8, 10.2), ChewEvent(6.0, 6.4)]
        assert rt.live_rate(events, t=10.0, window_s=5.0) == pytest.approx(0.2)

    def test_boundary_event_included(self):
        assert rt.live_rate([ChewEvent(5.0, 10.0)], 10.0, 5.0) == pytest.approx(0.2)

    def test_bad_window(self):
        with pytest.raises(ValueError, match="window"):
            rt.live_rate([], 1.0, window_s=0.0)


class TestStreamConfig:
    def test_defaults(self):
        cfg = rt.StreamConfig()
        assert cfg.segment_s == 0.5
        assert cfg.vote_window == 8
        assert cfg.rate_window_s == 5.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"hop_s": 0.0},
            {"hop_s": 0.6},  # longer than the segment
            {"vote_window": 0},
            {"rate_window_s": 0.0},
        ],
    )
    def test_rejects_bad_geometry(self, kwargs):
        with pytest.raises(ValueError):
            rt.StreamConfig(**kwargs)


def run_engine(model, profile, raw, chunk):
    """Push `raw` in fixed-size chunks; return (events, closure log)."""
    engine = rt.StreamEngine(model, profile)
    closures = []
    for i in range(0, raw.size, chunk):
        for event in engine.push(raw[i : i + chunk]):
            closures.append((engine.current_time_s, event))
    for event in engine.finalize():
        closures.append((engine.current_time_s, event))
    return engine.events, closures


class TestStreamEngine:
    def test_rejects_offline_model(self, profile):
        names = ("mav", "iemg", "var", "rms", "sd", "wl", "zc")
        model = learn.LinearModel(
            feature_names=names,
            weights=np.zeros(7),
            bias=0.0,
            mean=np.zeros(7),
            scale=np.ones(7),
            positive_label="C",
        )
        with pytest.raises(ValueError, match="streaming feature set"):
            rt.StreamEngine(model, profile)

    def test_rejects_matrix_chunk(self, rt_model, profile):
        engine = rt.StreamEngine(rt_model, profile)
        with pytest.raises(ValueError, match="1-D"):
            engine.push(np.zeros((4, 4)))

    def test_empty_push_is_noop(self, rt_model, profile):
        engine = rt.StreamEngine(rt_model, profile)
        assert engine.push(np.array([])) == []
        assert engine.current_time_s == 0.0

    def test_hop_too_short_for_rate(self, rt_model, profile):
        with pytest.raises(ValueError, match="too short"):
            rt.StreamEngine(rt_model, profile, rt.StreamConfig(hop_s=0.004))

    def test_clock_tracks_samples(self, rt_model, profile):
        engine = rt.StreamEngine(rt_model, profile)
        engine.push(np.zeros(512))
        assert engine.current_time_s == pytest.approx(512 / FS)

    def test_events_property_returns_copy(self, rt_model, profile):
        engine = rt.StreamEngine(rt_model, profile)
        log = engine.events
        log.append("junk")
        assert engine.events == []

    def test_finalize_idle_is_noop(self, rt_model, profile):
        engine = rt.StreamEngine(rt_model, profile)
        engine.push(np.zeros(2048))
        assert engine.finalize() == []

    def test_chunking_invariance(self, rt_model, profile, test_session):
        raw = test_session.channel("masseter")
        whole, _ = run_engine(rt_model, profile, raw, raw.size)
        tiny, _ = run_engine(rt_model, profile, raw, 7)
        hop, _ = run_engine(rt_model, profile, raw, 32)
        assert len(whole) == len(tiny) == len(hop) > 0
        for a, b, c in zip(whole, tiny, hop):
            assert a.onset_s == b.onset_s == c.onset_s
            assert a.termination_s == b.termination_s == c.termination_s

    def test_event_log_ordered_and_disjoint(self, rt_model, profile, test_session):
        events, _ = run_engine(
            rt_model, profile, test_session.channel("masseter"), 1024
        )
        for prev, cur in zip(events, events[1:]):
            assert cur.onset_s >= prev.termination_s
        assert all(e.termination_s > e.onset_s for e in events)

    def test_event_count_near_truth(self, rt_model, profile, test_session):
        events, _ = run_engine(
            rt_model, profile, test_session.channel("masseter"), 1024
        )
        truth = len(test_session.annotations_of("chew"))
        assert abs(len(events) - truth) <= 0.10 * truth

    def test_closure_latency_bounded(self, rt_model, profile, test_session):
        # An event must close within one segment of look-back plus the vote
        # window's worth of hops plus one segment of decimation/fill delay.
        _, closures = run_engine(
            rt_model, profile, test_session.channel("masseter"), 32
        )
        cfg = rt.StreamConfig()
        bound = cfg.segment_s + cfg.vote_window * cfg.hop_s + cfg.segment_s
        assert closures, "no events closed"
        for closed_at, event in closures:
            assert closed_at - event.termination_s <= bound

    def test_live_rate_tracks_session_rate(self, rt_model, profile, test_session):
        events, _ = run_engine(
            rt_model, profile, test_session.channel("masseter"), 2048
        )
        span_rate = len(test_session.annotations_of("chew")) / 60.0
        rates = [
            rt.live_rate(events, t, 5.0) for t in np.arange(6.0, 59.0, 1.0)
        ]
        assert np.mean(rates) == pytest.approx(span_rate, rel=0.2)

    def test_rate_at_uses_engine_log(self, rt_model, profile, test_session):
        raw = test_session.channel("masseter")
        engine = rt.StreamEngine(rt_model, profile)
        engine.push(raw)
        t = engine.current_time_s
        assert engine.rate_at(t) == pytest.approx(
            rt.live_rate(engine.events, t, 5.0)
        )


class TestRtTrainingSet:
    def test_matrix_shape_and_geometry(self, profile, test_session):
        mat = rt.rt_training_set(test_session, profile)
        eff = test_session.sample_rate / 10
        n_env = test_session.channel("masseter").size // 10
        n_seg = int(0.5 * eff)
        n_hop = int(0.03 * eff)
        expected_rows = (n_env - n_seg) // n_hop + 1
        assert mat.feature_names == rt.RT_FEATURE_NAMES
        assert mat.values.shape == (expected_rows, 7)
        assert np.all(mat.participants == "E")
        assert np.allclose(mat.terminations_s - mat.onsets_s, n_seg / eff)

    def test_labels_follow_half_overlap_rule(self, profile, test_session):
        mat = rt.rt_training_set(test_session, profile)
        chews = test_session.annotations_of("chew")
        for i in range(0, mat.values.shape[0], 17):
            t0, t1 = mat.onsets_s[i], mat.terminations_s[i]
            covered = max(
                (
                    min(t1, a.termination_s) - max(t0, a.onset_s)
                    for a in chews
                    if min(t1, a.termination_s) > max(t0, a.onset_s)
                ),
                default=0.0,
            )
            expected = "C" if covered >= 0.5 * (t1 - t0) else "NA"
            assert mat.labels[i] == expected

    def test_has_both_classes(self, profile, test_session):
        mat = rt.rt_training_set(test_session, profile)
        assert set(mat.labels) == {"C", "NA"}

    def test_engine_predictions_match_batch_features(
        self, rt_model, profile, test_session
    ):
        # The engine's per-segment features must equal the batch extraction,
        # so predictions from either path agree segment by segment.
        mat = rt.rt_training_set(test_session, profile)
        batch_votes = learn.predict(rt_model, mat.values) == "C"
        engine = rt.StreamEngine(rt_model, profile)
        engine.push(test_session.channel("masseter"))
        raw = np.asarray(engine.state.raw_predictions, dtype=bool)
        n = min(raw.size, batch_votes.size)
        assert n > 100
        assert np.array_equal(raw[:n], batch_votes[:n])
