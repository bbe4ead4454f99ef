"""Shared fixtures: a calibration profile and a trained streaming model.

Training is deterministic, so every test module sees the same model; the
session scope just avoids refitting it per module.
"""

from pathlib import Path

import numpy as np
import pytest

import emgeat.learn as learn
import emgeat.realtime as rt
import emgeat.synth as synth


@pytest.fixture(scope="session")
def datadir():
    return Path(__file__).parent / "data"


# Verdict lines appended by test_acceptance, echoed after the run so they
# stay visible under default output capturing.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def profile():
    cal = synth.gen_session(
        synth.SessionPlan(duration_s=30.0, seed=77, participant_id="CAL")
    )
    return rt.calibrate([cal.channel("masseter")], cal.sample_rate, source="CAL")


@pytest.fixture(scope="session")
def rt_model(profile):
    mats = [
        rt.rt_training_set(
            synth.gen_session(
                synth.SessionPlan(duration_s=60.0, seed=seed, participant_id=f"T{seed}")
            ),
            profile,
        )
        for seed in (500, 501)
    ]
    X = np.vstack([m.values for m in mats])
    y = np.concatenate([m.labels for m in mats])
    return learn.train_linear_svm(
        X,
        y,
        feature_names=rt.RT_FEATURE_NAMES,
        positive_label="C",
        config=learn.TrainConfig(c=1.0, class_weights=learn.compute_class_weights(y)),
    )


@pytest.fixture(scope="session")
def test_session():
    return synth.gen_session(
        synth.SessionPlan(duration_s=60.0, seed=555, participant_id="E")
    )
