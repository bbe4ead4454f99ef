"""End-to-end checks of the command-line front end.

Most tests drive main(argv) in-process and inspect stdout/stderr through
capsys; one test boots the real `serve` process to cover the console path.
"""

import signal as os_signal
import subprocess
import sys
import time

import numpy as np
import pytest

import emgeat.io as io
import emgeat.learn as learn
from emgeat.cli import main
from emgeat.metrics import ChewEvent


def run_cli(args, capsys):
    rc = main(args)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestGenerate:
    def test_writes_recording_and_prints_counts(self, tmp_path, capsys):
        rc, out, _ = run_cli(
            [
                "generate", "--out", str(tmp_path), "--participant", "P01",
                "--duration", "10", "--seed", "5",
            ],
            capsys,
        )
        assert rc == 0
        assert "P01.csv (14 chews, 1 swallows)" in out
        rec = io.read_recording(tmp_path / "P01.csv")
        assert rec.duration_s == pytest.approx(10.0)
        assert len(rec.annotations_of("chew")) == 14

    def test_deterministic_files(self, tmp_path, capsys):
        for sub in ("a", "b"):
            rc, _, _ = run_cli(
                [
                    "generate", "--out", str(tmp_path / sub), "--participant",
                    "P02", "--duration", "8", "--seed", "11",
                ],
                capsys,
            )
            assert rc == 0
        for name in ("P02.csv", "P02.csv.ann"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_bad_artifact_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--out", str(tmp_path), "--artifact", "speech:10"])
        assert exc.value.code == 2

    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2


@pytest.fixture()
def session_file(tmp_path, capsys):
    rc = main(
        [
            "generate", "--out", str(tmp_path), "--participant", "P01",
            "--duration", "10", "--seed", "5",
        ]
    )
    capsys.readouterr()
    assert rc == 0
    return tmp_path / "P01.csv"


class TestPreprocess:
    def test_writes_conditioned_channel(self, session_file, tmp_path, capsys):
        out_file = tmp_path / "env.csv"
        rc, out, _ = run_cli(
            ["preprocess", "--in", str(session_file), "--out", str(out_file)],
            capsys,
        )
        assert rc == 0
        assert "1024 samples at 102.4 Hz" in out
        lines = out_file.read_text().splitlines()
        assert lines[0] == "t_s,value"
        assert len(lines) == 1 + 1024
        values = np.array([float(l.split(",")[1]) for l in lines[1:]])
        assert values.min() >= 0.0 and values.max() <= 1.0

    def test_unknown_channel_is_domain_error(self, session_file, tmp_path, capsys):
        rc, _, err = run_cli(
            [
                "preprocess", "--in", str(session_file), "--channel", "tongue",
                "--out", str(tmp_path / "x.csv"),
            ],
            capsys,
        )
        assert rc == 1
        assert err.startswith("emgeat:")


class TestFeaturize:
    def test_offline_chew_dataset(self, session_file, tmp_path, capsys):
        out_file = tmp_path / "chew.csv"
        rc, out, _ = run_cli(
            ["featurize", "--in", str(session_file), "--out", str(out_file)],
            capsys,
        )
        assert rc == 0
        assert "39 windows" in out
        mat = io.read_dataset(out_file)
        assert mat.values.shape == (39, 36)  # 18 features x 2 channels
        assert mat.feature_names[0] == "masseter_mav"
        assert set(mat.labels) <= {"C", "NA"}

    def test_realtime_dataset(self, session_file, tmp_path, capsys):
        out_file = tmp_path / "rt.csv"
        rc, _, _ = run_cli(
            [
                "featurize", "--in", str(session_file), "--out", str(out_file),
                "--realtime",
            ],
            capsys,
        )
        assert rc == 0
        mat = io.read_dataset(out_file)
        assert mat.feature_names == ("mean", "sd", "peak_amp", "rms", "iemg", "mnf", "mnp")
        assert mat.values.shape[0] == 325


def featurize_sessions(tmp_path, capsys, seeds, duration=20.0):
    """Generate + featurize one offline chew dataset per seed."""
    paths = []
    for seed in seeds:
        pid = f"P{seed:02d}"
        assert main(
            [
                "generate", "--out", str(tmp_path), "--participant", pid,
                "--duration", str(duration), "--seed", str(seed),
            ]
        ) == 0
        out = tmp_path / f"{pid}.features.csv"
        assert main(
            ["featurize", "--in", str(tmp_path / f"{pid}.csv"), "--out", str(out)]
        ) == 0
        paths.append(out)
    capsys.readouterr()
    return paths


class TestTrainAndEval:
    def test_train_writes_loadable_model(self, tmp_path, capsys):
        datasets = featurize_sessions(tmp_path, capsys, seeds=(31, 32))
        model_path = tmp_path / "chew.model"
        rc, out, _ = run_cli(
            ["train", "--in", *map(str, datasets), "--out", str(model_path)],
            capsys,
        )
        assert rc == 0
        assert "converged=" in out and "epochs=" in out
        model = io.load_model(model_path)
        assert model.positive_label == "C"
        assert len(model.feature_names) == 36

    def test_grid_search_reports_candidates(self, tmp_path, capsys):
        datasets = featurize_sessions(tmp_path, capsys, seeds=(33, 34))
        rc, out, _ = run_cli(
            [
                "train", "--in", *map(str, datasets), "--out",
                str(tmp_path / "m.model"), "--grid", "0.1,1.0", "--folds", "2",
            ],
            capsys,
        )
        assert rc == 0
        lines = out.splitlines()
        grid_lines = [l for l in lines if l.startswith("grid,")]
        assert len(grid_lines) == 2
        assert grid_lines[0].startswith("grid,c=0.1,mean_f1=")
        assert any(l.startswith("selected,c=") for l in lines)

    def test_eval_lopo_table(self, tmp_path, capsys):
        datasets = featurize_sessions(tmp_path, capsys, seeds=(35, 36, 37))
        rc, out, _ = run_cli(
            ["eval-lopo", "--in", *map(str, datasets)], capsys
        )
        assert rc == 0
        lines = out.splitlines()
        assert lines[0] == "participant,n_test,precision,recall,f1"
        folds = [l for l in lines if l.startswith("P")]
        assert len(folds) == 3
        assert sorted(l.split(",")[0] for l in folds) == ["P35", "P36", "P37"]
        for line in folds:
            f1 = float(line.split(",")[4])
            assert 0.0 <= f1 <= 1.0
        assert lines[-2].startswith("average,,")
        assert lines[-1].startswith("f1_std,,,,")

    def test_single_participant_is_domain_error(self, tmp_path, capsys):
        datasets = featurize_sessions(tmp_path, capsys, seeds=(38,))
        rc, _, err = run_cli(["eval-lopo", "--in", str(datasets[0])], capsys)
        assert rc == 1
        assert "emgeat:" in err


class TestAnalyze:
    def test_hand_log_report(self, tmp_path, capsys):
        log = tmp_path / "hand.events"
        io.append_events(
            [ChewEvent(0.0, 0.5), ChewEvent(1.0, 1.5), ChewEvent(2.0, 2.5)], log
        )
        rc, out, _ = run_cli(["analyze", "--in", str(log)], capsys)
        assert rc == 0
        assert out.splitlines() == [
            "n_events,3",
            "n_sequences,1",
            "overall_rate_hz,1.2",
            "mean_chew_period_s,0.8333333333333334",
            "chew_duration_s,0.5",
            "chew_gap_s,0.5",
            "sequence_duration_s,2.5",
            "sequence_gap_s,undefined",
            "chews_per_sequence,3.0",
        ]

    def test_single_event_has_undefined_gaps(self, tmp_path, capsys):
        log = tmp_path / "one.events"
        io.append_events([ChewEvent(1.0, 1.4)], log)
        rc, out, _ = run_cli(["analyze", "--in", str(log)], capsys)
        assert rc == 0
        assert "chew_gap_s,undefined" in out.splitlines()
        assert "sequence_gap_s,undefined" in out.splitlines()

    def test_missing_file_is_domain_error(self, tmp_path, capsys):
        rc, _, err = run_cli(
            ["analyze", "--in", str(tmp_path / "nope.events")], capsys
        )
        assert rc == 1
        assert err.startswith("emgeat:")


class TestFeedbackSim:
    def test_transitions_only(self, tmp_path, capsys):
        series = tmp_path / "rates.csv"
        io.write_rate_series(
            [(1.0, 0.5), (2.0, 1.6), (3.0, 1.7), (4.0, 2.4)], series
        )
        rc, out, _ = run_cli(["feedback-sim", "--in", str(series)], capsys)
        assert rc == 0
        assert out.splitlines() == [
            "1.0,no_pulse",
            "2.0,single_pulse",
            "4.0,double_pulse",
        ]

    def test_dead_band_suppresses_flicker(self, tmp_path, capsys):
        # 1.6 chews/s normalizes to 0.5; +-0.16 wobbles across the 0.6 edge.
        series = tmp_path / "rates.csv"
        io.write_rate_series(
            [(1.0, 1.6), (2.0, 1.98), (3.0, 1.6), (4.0, 1.98)], series
        )
        rc, out, _ = run_cli(
            ["feedback-sim", "--in", str(series), "--dead-band", "0.05"], capsys
        )
        assert rc == 0
        assert out.splitlines() == ["1.0,single_pulse"]
        rc, out, _ = run_cli(["feedback-sim", "--in", str(series)], capsys)
        assert out.splitlines() == [
            "1.0,single_pulse",
            "2.0,double_pulse",
            "3.0,single_pulse",
            "4.0,double_pulse",
        ]


@pytest.fixture(scope="module")
def live_server(rt_model, tmp_path_factory):
    log_dir = tmp_path_factory.mktemp("cli_logs")
    srv = io.serve(rt_model, io.ServerConfig(log_dir=log_dir)).start_background()
    yield srv
    srv.shutdown()


class TestReplay:
    def test_round_trip(self, live_server, session_file, capsys):
        rc, out, _ = run_cli(
            [
                "replay", "--in", str(session_file), "--port",
                str(live_server.port), "--speed", "0",
            ],
            capsys,
        )
        assert rc == 0
        lines = out.splitlines()
        assert lines[-1].startswith("events=")
        assert int(lines[-1].split("=")[1]) > 0
        rate_lines = [l for l in lines if l.startswith("rate,")]
        assert len(rate_lines) == 10  # one per streamed second

    def test_transcript_file(self, live_server, session_file, tmp_path, capsys):
        transcript = tmp_path / "t.txt"
        rc, _, _ = run_cli(
            [
                "replay", "--in", str(session_file), "--port",
                str(live_server.port), "--speed", "0", "--transcript",
                str(transcript),
            ],
            capsys,
        )
        assert rc == 0
        lines = transcript.read_text().splitlines()
        assert lines[0].startswith("hello")
        assert lines[-1].startswith("bye events=")

    def test_server_error_reported(self, session_file, capsys):
        offline = learn.LinearModel(
            feature_names=("mav", "rms"),
            weights=np.zeros(2),
            bias=0.0,
            mean=np.zeros(2),
            scale=np.ones(2),
            positive_label="C",
        )
        srv = io.serve(offline, io.ServerConfig()).start_background()
        try:
            rc, _, err = run_cli(
                [
                    "replay", "--in", str(session_file), "--port",
                    str(srv.port), "--speed", "0",
                ],
                capsys,
            )
        finally:
            srv.shutdown()
        assert rc == 1
        assert "error" in err

    def test_no_server_is_domain_error(self, session_file, capsys):
        import socket

        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            free_port = probe.getsockname()[1]
        rc, _, err = run_cli(
            [
                "replay", "--in", str(session_file), "--port", str(free_port),
                "--speed", "0",
            ],
            capsys,
        )
        assert rc == 1
        assert err.startswith("emgeat:")


class TestServe:
    def test_rejects_offline_model(self, tmp_path, capsys):
        datasets = featurize_sessions(tmp_path, capsys, seeds=(41,), duration=10.0)
        model_path = tmp_path / "offline.model"
        assert main(["train", "--in", str(datasets[0]), "--out", str(model_path)]) == 0
        capsys.readouterr()
        rc, _, err = run_cli(["serve", "--model", str(model_path)], capsys)
        assert rc == 1
        assert "streaming feature set" in err

    def test_serve_process_end_to_end(self, rt_model, session_file, tmp_path, capsys):
        model_path = io.save_model(rt_model, tmp_path / "rt.model")
        proc = subprocess.Popen(
            [
                sys.executable, "-m", "emgeat.cli", "serve", "--model",
                str(model_path), "--port", "0", "--log-dir",
                str(tmp_path / "logs"),
            ],
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            banner = proc.stdout.readline().strip()
            assert banner.startswith("listening on 127.0.0.1:")
            port = int(banner.rsplit(":", 1)[1])
            rc, out, _ = run_cli(
                [
                    "replay", "--in", str(session_file), "--port", str(port),
                    "--speed", "0",
                ],
                capsys,
            )
            assert rc == 0
            assert out.splitlines()[-1].startswith("events=")
            assert len(list((tmp_path / "logs").glob("session_*.events"))) == 1
        finally:
            proc.send_signal(os_signal.SIGINT)
            assert proc.wait(timeout=10) == 0
