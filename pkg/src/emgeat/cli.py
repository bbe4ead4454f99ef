"""Command-line front end for the chewing-analysis pipeline.

One binary, subcommand per pipeline stage. Outputs are plain delimited text
so downstream scripts (and the test suite) can diff them directly.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import feedback as _feedback
from . import features as _features
from . import io as _io
from . import learn as _learn
from . import metrics as _metrics
from . import realtime as _realtime
from . import signal as _signal
from . import synth as _synth


def _parse_artifact(text: str):
    # kind:onset:termination, e.g. speech:10:12.5
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected kind:onset:termination, got {text!r}"
        )
    kind, onset, term = parts
    try:
        return (kind, float(onset), float(term))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad artifact interval {text!r}")


def _parse_grid(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad penalty grid {text!r}")


def cmd_generate(args) -> int:
    plan = _synth.SessionPlan(
        duration_s=args.duration,
        chew_rate_hz=args.rate,
        chew_duration_mean_s=args.chew_duration,
        swallow_every_n_chews=args.swallow_every,
        snr_db=args.snr,
        artifact_schedule=tuple(args.artifact),
        seed=args.seed,
        baseline_lead_s=args.baseline_lead,
        participant_id=args.participant,
    )
    recording = _synth.gen_session(plan)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = _io.write_recording(recording, out_dir / f"{args.participant}.csv")
    chews = len(recording.annotations_of("chew"))
    swallows = len(recording.annotations_of("swallow"))
    print(f"wrote {path} ({chews} chews, {swallows} swallows)")
    return 0


def cmd_preprocess(args) -> int:
    recording = _io.read_recording(args.infile)
    processed = _signal.preprocess(
        recording.channel(args.channel), recording.sample_rate, mode=args.mode
    )
    out = Path(args.out)
    with open(out, "w") as fh:
        fh.write("t_s,value\n")
        for i, v in enumerate(processed.samples):
            fh.write(f"{float(i / processed.rate)!r},{float(v)!r}\n")
    print(f"wrote {out} ({processed.samples.size} samples at {processed.rate} Hz)")
    return 0


def cmd_featurize(args) -> int:
    recording = _io.read_recording(args.infile)
    if args.realtime:
        profile = _realtime.calibrate(
            [recording.channel(args.channel)],
            recording.sample_rate,
            source=recording.participant_id,
        )
        matrix = _realtime.rt_training_set(recording, profile)
    else:
        length = (
            _features.CHEW_WINDOW_S
            if args.task == "chew"
            else _features.SWALLOW_WINDOW_S
        )
        spec = _features.WindowSpec(length_s=length, hop_s=args.hop)
        matrix = _features.build_feature_matrix(recording, spec, args.task)
    path = _io.write_dataset(matrix, args.out)
    positives = sum(1 for l in matrix.labels if l != _features.NEGATIVE_LABEL)
    print(f"wrote {path} ({matrix.n_rows} windows, {positives} positive)")
    return 0


def _load_matrices(paths) -> "_features.FeatureMatrix":
    return _features.concat_matrices([_io.read_dataset(p) for p in paths])


def cmd_train(args) -> int:
    matrix = _load_matrices(args.infile)
    labels = list(matrix.labels)
    weights = _learn.compute_class_weights(labels)
    base = _learn.TrainConfig(c=args.c, class_weights=weights, seed=args.seed)
    if args.grid:
        config, results = _learn.grid_search_cv(
            matrix.values,
            labels,
            matrix.feature_names,
            args.positive,
            {"c": args.grid},
            base_config=base,
            k=args.folds,
        )
        for candidate, mean_f1 in results:
            print(f"grid,c={candidate.c!r},mean_f1={mean_f1!r}")
        print(f"selected,c={config.c!r}")
    else:
        config = base
    model = _learn.train_linear_svm(
        matrix.values, labels, matrix.feature_names, args.positive, config
    )
    path = _io.save_model(model, args.out)
    info = model.train_info
    print(
        f"wrote {path} (converged={info['converged']}, epochs={info['epochs']},"
        f" objective={info['objective']!r})"
    )
    return 0


def cmd_eval_lopo(args) -> int:
    matrix = _load_matrices(args.infile)
    config = _learn.TrainConfig(c=args.c, seed=args.seed)
    report = _learn.lopo_evaluate(matrix, args.positive, config)
    print("participant,n_test,precision,recall,f1")
    for fold in report.folds:
        prf = fold.metrics[args.positive]
        print(
            f"{fold.participant},{fold.n_test},{prf.precision!r},"
            f"{prf.recall!r},{prf.f1!r}"
        )
    mean = report.mean[args.positive]
    print(f"average,,{mean.precision!r},{mean.recall!r},{mean.f1!r}")
    print(f"f1_std,,,,{report.f1_std[args.positive]!r}")
    return 0


def cmd_analyze(args) -> int:
    events = _io.read_event_log(args.infile)
    timeline = _metrics.correct_and_segment(events, gap_cap_s=args.gap_cap)
    report = _metrics.session_metrics(timeline)

    def fmt(value, defined=True):
        return repr(float(value)) if defined else "undefined"

    print(f"n_events,{report.n_events}")
    print(f"n_sequences,{report.n_sequences}")
    print(f"overall_rate_hz,{fmt(report.overall_rate_hz)}")
    print(f"mean_chew_period_s,{fmt(report.mean_chew_period_s)}")
    print(f"chew_duration_s,{fmt(report.chew_duration_s)}")
    print(f"chew_gap_s,{fmt(report.chew_gap_s, report.chew_gap_defined)}")
    print(f"sequence_duration_s,{fmt(report.sequence_duration_s)}")
    print(
        f"sequence_gap_s,{fmt(report.sequence_gap_s, report.sequence_gap_defined)}"
    )
    print(f"chews_per_sequence,{fmt(report.chews_per_sequence)}")
    return 0


def cmd_serve(args) -> int:
    model = _io.load_model(args.model)
    if tuple(model.feature_names) != _realtime.RT_FEATURE_NAMES:
        raise ValueError(
            "model was not trained on the streaming feature set; build one"
            " with `featurize --realtime` + `train`"
        )
    config = _io.ServerConfig(
        host=args.host,
        port=args.port,
        log_dir=Path(args.log_dir) if args.log_dir else None,
        reference_rate_hz=args.reference_rate,
    )
    server = _io.serve(model, config)
    print(f"listening on {config.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


def cmd_replay(args) -> int:
    recording = _io.read_recording(args.infile)
    result = _io.stream_client(
        recording,
        args.host,
        args.port,
        speed=args.speed,
        frame_s=args.frame,
        channel=args.channel,
        reference_rate_hz=args.reference_rate,
    )
    if args.transcript:
        with open(args.transcript, "w") as fh:
            fh.write("\n".join(result.transcript) + "\n")
    for t, rate in result.rates:
        print(f"rate,{float(t)!r},{float(rate)!r}")
    for t, label in result.levels:
        print(f"level,{float(t)!r},{label}")
    if result.errors:
        for reason in result.errors:
            print(f"error: {reason}", file=sys.stderr)
        return 1
    if result.reported_events is None:
        print("error: session closed without bye", file=sys.stderr)
        return 1
    print(f"events={result.reported_events}")
    return 0


def cmd_feedback_sim(args) -> int:
    series = _io.read_rate_series(args.infile)
    normalizer = _feedback.RateNormalizer(reference_rate_hz=args.reference_rate)
    level = None
    for t, rate in series:
        norm = _feedback.normalize_rate(rate, normalizer)
        new = _feedback.map_level(norm, prev=level, dead_band=args.dead_band)
        if new is not level:
            print(f"{float(t)!r},{new.label}")
        level = new
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emgeat",
        description="Synthetic chewing/swallowing pipeline: generate sessions,"
        " extract features, train and evaluate classifiers, analyze event"
        " logs, and stream live sessions.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="synthesize a session recording")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--participant", default="P00")
    p.add_argument("--duration", type=float, default=60.0, help="seconds")
    p.add_argument("--rate", type=float, default=1.5, help="chews per second")
    p.add_argument("--chew-duration", type=float, default=0.42, help="mean seconds")
    p.add_argument("--swallow-every", type=int, default=10, metavar="N")
    p.add_argument("--snr", type=float, default=20.0, help="dB")
    p.add_argument(
        "--artifact",
        action="append",
        default=[],
        type=_parse_artifact,
        metavar="KIND:ON:OFF",
        help="speech/motion interval, repeatable",
    )
    p.add_argument("--baseline-lead", type=float, default=0.75, help="seconds")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("preprocess", help="condition one channel to a text file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--channel", default="masseter")
    p.add_argument("--mode", choices=("mean", "stride"), default="mean")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("featurize", help="recording -> windowed feature dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--task", choices=sorted(_features.TASKS), default="chew")
    p.add_argument("--hop", type=float, default=0.25, help="seconds")
    p.add_argument(
        "--realtime",
        action="store_true",
        help="streaming 7-feature variant (self-calibrated, chew task only)",
    )
    p.add_argument("--channel", default="masseter", help="calibration channel")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit the linear classifier on datasets")
    p.add_argument("--in", dest="infile", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--positive", default="C", help="positive class label")
    p.add_argument("--c", type=float, default=_learn.DEFAULT_C, help="penalty")
    p.add_argument(
        "--grid",
        type=_parse_grid,
        default=None,
        metavar="C1,C2,...",
        help="grid-search the penalty by k-fold F1",
    )
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser(
        "eval-lopo", help="leave-one-participant-out evaluation table"
    )
    p.add_argument("--in", dest="infile", nargs="+", required=True)
    p.add_argument("--positive", default="C")
    p.add_argument("--c", type=float, default=_learn.DEFAULT_C)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval_lopo)

    p = sub.add_parser("analyze", help="event log -> session metrics report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--gap-cap", type=float, default=_metrics.DEFAULT_GAP_CAP_S)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="run the live classification server")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--log-dir", default=None)
    p.add_argument(
        "--reference-rate",
        type=float,
        default=_io.DEFAULT_REFERENCE_RATE_HZ,
        help="chews/s mapped to mid-scale feedback",
    )
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="stream a recording file to a server")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--speed", type=float, default=1.0, help="0 floods, 10 = x10")
    p.add_argument("--frame", type=float, default=0.125, help="seconds per frame")
    p.add_argument("--channel", default="masseter")
    p.add_argument("--reference-rate", type=float, default=None)
    p.add_argument("--transcript", default=None, help="write server replies here")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("feedback-sim", help="rate series -> level transitions")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument(
        "--reference-rate",
        type=float,
        default=_io.DEFAULT_REFERENCE_RATE_HZ,
    )
    p.add_argument("--dead-band", type=float, default=0.0)
    p.set_defaults(func=cmd_feedback_sim)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"emgeat: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
