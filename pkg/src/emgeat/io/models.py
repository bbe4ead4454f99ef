"""Versioned, checksummed text serialization of trained linear models.

The payload is canonical JSON (sorted keys) carrying every field needed for
self-contained prediction; a sha256 of the payload guards against file
corruption. JSON float encoding round-trips exactly, so a saved model
reproduces bit-identical decision values.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from ..learn import LinearModel
from .recordings import FormatError

MODEL_MAGIC = "# emg-linear-model v1"

_REQUIRED = (
    "feature_names",
    "weights",
    "bias",
    "mean",
    "scale",
    "positive_label",
    "negative_label",
)


def save_model(model: LinearModel, path) -> Path:
    path = Path(path)
    # the per-epoch objective trace is diagnostic only; keep files small
    info = {k: v for k, v in model.train_info.items() if k != "objective_history"}
    payload = {
        "feature_names": list(model.feature_names),
        "weights": list(map(float, model.weights)),
        "bias": float(model.bias),
        "mean": list(map(float, model.mean)),
        "scale": list(map(float, model.scale)),
        "positive_label": model.positive_label,
        "negative_label": model.negative_label,
        "train_info": info,
    }
    body = json.dumps(payload, sort_keys=True)
    digest = hashlib.sha256(body.encode()).hexdigest()
    with open(path, "w") as fh:
        fh.write(MODEL_MAGIC + "\n")
        fh.write(f"# sha256={digest}\n")
        fh.write(body + "\n")
    return path


def load_model(path) -> LinearModel:
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise FormatError(f"{path}:1: not a model file (expected {MODEL_MAGIC!r})")
    if len(lines) < 3 or not lines[1].startswith("# sha256="):
        raise FormatError(f"{path}:2: missing checksum line")
    stored = lines[1][len("# sha256=") :]
    body = "\n".join(lines[2:])
    digest = hashlib.sha256(body.encode()).hexdigest()
    if digest != stored:
        raise FormatError(f"{path}: checksum mismatch; file corrupted")
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: unparseable payload: {exc}") from None
    for key in _REQUIRED:
        if key not in payload:
            raise FormatError(f"{path}: model payload missing field {key!r}")
    return LinearModel(
        feature_names=tuple(payload["feature_names"]),
        weights=np.asarray(payload["weights"], dtype=float),
        bias=float(payload["bias"]),
        mean=np.asarray(payload["mean"], dtype=float),
        scale=np.asarray(payload["scale"], dtype=float),
        positive_label=payload["positive_label"],
        negative_label=payload["negative_label"],
        train_info=payload.get("train_info", {}),
    )
