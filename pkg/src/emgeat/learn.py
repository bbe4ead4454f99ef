"""Linear max-margin window classifier, trained from scratch.

The model minimizes

    F(w, b) = 0.5 * ||w||^2 + C * sum_i cw(y_i) * max(0, 1 - y_i (w.x_i + b))^2

by deterministic full-batch gradient descent with backtracking (the step is
halved whenever a proposal fails to decrease the objective, so F is
non-increasing over accepted epochs). The squared hinge keeps the objective
differentiable; per-class weights cw compensate for label imbalance.
Features are standardized per column and the standardization is stored on
the model so prediction is self-contained.
"""

import itertools
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .features import FeatureMatrix, NEGATIVE_LABEL

DEFAULT_C = 5.0

# Columns with no variance carry no information; they are mapped to zero by
# standardizing with this floor instead of dividing by zero.
_SCALE_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    c: float = DEFAULT_C
    class_weights: dict = None  # label -> weight; None derives from the data
    max_epochs: int = 2000
    tol: float = 1e-10  # relative objective improvement considered converged
    seed: int = 0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("penalty C must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class LinearModel:
    feature_names: tuple
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    positive_label: str
    negative_label: str = NEGATIVE_LABEL
    train_info: dict = field(default_factory=dict)


class Prf(NamedTuple):
    precision: float
    recall: float
    f1: float


def compute_class_weights(labels) -> dict:
    """Inverse-frequency weights: w_c = N / (K * N_c)."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("no labels")
    classes, counts = np.unique(labels, return_counts=True)
    total = labels.size
    k = classes.size
    return {str(c): total / (k * n) for c, n in zip(classes, counts)}


def balance_test_set(labels, seed: int) -> np.ndarray:
    """Indices of a label-balanced subset (majorities downsampled).

    Every class is randomly subsampled to the minority count; returned
    indices are sorted so the original row order is preserved.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("no labels")
    classes, counts = np.unique(labels, return_counts=True)
    m = counts.min()
    rng = np.random.default_rng(seed)
    keep = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        if idx.size > m:
            idx = rng.choice(idx, size=m, replace=False)
        keep.append(idx)
    return np.sort(np.concatenate(keep))


def _check_features(X, feature_names):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    finite = np.isfinite(X)
    if not finite.all():
        col = int(np.argwhere(~finite)[0, 1])
        name = feature_names[col] if feature_names else str(col)
        raise ValueError(f"non-finite value in feature column {name}")
    return X


def _objective(Z, y, sw, c, w, b):
    margin = np.maximum(0.0, 1.0 - y * (Z @ w + b))
    return 0.5 * float(w @ w) + c * float(sw @ margin**2)


def _gradient(Z, y, sw, c, w, b):
    margin = np.maximum(0.0, 1.0 - y * (Z @ w + b))
    coeff = sw * y * margin  # zero outside the active margin
    grad_w = w - 2.0 * c * (Z.T @ coeff)
    grad_b = -2.0 * c * float(coeff.sum())
    return grad_w, grad_b


def train_linear_svm(
    X,
    labels,
    feature_names: tuple,
    positive_label: str,
    config: TrainConfig = TrainConfig(),
) -> LinearModel:
    """Fit the weighted squared-hinge linear classifier.

    Deterministic: zero initialization, full-batch descent, no randomness.
    """
    X = _check_features(X, feature_names)
    labels = np.asarray(labels)
    if X.shape[0] != labels.size:
        raise ValueError("row count mismatch between features and labels")
    present = set(str(l) for l in np.unique(labels))
    if len(present) < 2:
        raise ValueError(f"training data has a single class: {sorted(present)}")
    if positive_label not in present:
        raise ValueError(f"positive label {positive_label!r} absent from training data")

    weights_by_class = (
        dict(config.class_weights)
        if config.class_weights is not None
        else compute_class_weights(labels)
    )
    sw = np.array([weights_by_class[str(l)] for l in labels], dtype=float)
    y = np.where(labels == positive_label, 1.0, -1.0)

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < _SCALE_FLOOR] = 1.0
    Z = (X - mean) / scale

    w = np.zeros(X.shape[1])
    b = 0.0
    eta = 1.0
    f_old = _objective(Z, y, sw, config.c, w, b)
    history = [float(f_old)]
    converged = False
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        grad_w, grad_b = _gradient(Z, y, sw, config.c, w, b)
        accepted = False
        for _ in range(60):
            w_new = w - eta * grad_w
            b_new = b - eta * grad_b
            f_new = _objective(Z, y, sw, config.c, w_new, b_new)
            if f_new <= f_old:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            converged = True  # no descent step exists at float resolution
            break
        w, b = w_new, b_new
        improvement = f_old - f_new
        f_old = f_new
        history.append(float(f_new))
        eta *= 1.25
        if improvement <= config.tol * max(1.0, f_new):
            converged = True
            break

    return LinearModel(
        feature_names=tuple(feature_names),
        weights=w,
        bias=float(b),
        mean=mean,
        scale=scale,
        positive_label=positive_label,
        train_info={
            "converged": converged,
            "epochs": epoch,
            "objective": float(f_old),
            "objective_history": history,
            "c": config.c,
            "class_weights": {k: float(v) for k, v in weights_by_class.items()},
        },
    )


def decision_values(model: LinearModel, X) -> np.ndarray:
    X = _check_features(X, model.feature_names)
    if X.shape[1] != model.weights.size:
        raise ValueError("feature count does not match the model")
    Z = (X - model.mean) / model.scale
    return Z @ model.weights + model.bias


def predict(model: LinearModel, X) -> np.ndarray:
    """Labels for each row; the positive class requires margin strictly > 0."""
    dec = decision_values(model, X)
    out = np.where(dec > 0, model.positive_label, model.negative_label)
    return out.astype(object)


def prf_metrics(y_true, y_pred) -> dict:
    """Per-class precision/recall/F1, zero where a denominator is zero."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.size != y_pred.size:
        raise ValueError("length mismatch")
    out = {}
    for label in sorted(set(map(str, y_true)) | set(map(str, y_pred))):
        tp = float(np.sum((y_true == label) & (y_pred == label)))
        fp = float(np.sum((y_true != label) & (y_pred == label)))
        fn = float(np.sum((y_true == label) & (y_pred != label)))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        out[label] = Prf(precision, recall, f1)
    return out


def build_stratified_folds(labels, k: int, seed: int) -> list:
    """k folds with every class present in each; (train_idx, test_idx) pairs.

    Class members are shuffled then dealt round-robin. When some class is too
    small to reach every fold, reshuffling is retried with stepped seeds and
    the attempt gives up after five tries.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("need at least 2 folds")
    classes = np.unique(labels)
    for attempt in range(5):
        rng = np.random.default_rng(seed + attempt)
        fold_of = np.empty(labels.size, dtype=int)
        for c in classes:
            idx = rng.permutation(np.flatnonzero(labels == c))
            fold_of[idx] = np.arange(idx.size) % k
        ok = all(
            set(map(str, np.unique(labels[fold_of == j]))) == set(map(str, classes))
            for j in range(k)
        )
        if ok:
            return [
                (np.flatnonzero(fold_of != j), np.flatnonzero(fold_of == j))
                for j in range(k)
            ]
    raise ValueError(f"could not stratify {k} folds: some class has fewer than {k} rows")


def grid_search_cv(
    X,
    labels,
    feature_names: tuple,
    positive_label: str,
    grid: dict,
    base_config: TrainConfig = TrainConfig(),
    k: int = 3,
):
    """Pick the best TrainConfig over a parameter grid by k-fold mean F1.

    The score is the positive-class F1 averaged over stratified folds (folds
    fixed across candidates). Ties go to the smaller penalty C, then to the
    earlier grid position. Returns (best_config, results) where results is a
    list of (config, mean_f1) in grid order.
    """
    X = _check_features(X, feature_names)
    labels = np.asarray(labels)
    folds = build_stratified_folds(labels, k, base_config.seed)
    names = list(grid.keys())
    results = []
    best = None
    for combo in itertools.product(*(grid[n] for n in names)):
        config = replace(base_config, **dict(zip(names, combo)))
        scores = []
        for train_idx, test_idx in folds:
            model = train_linear_svm(
                X[train_idx], labels[train_idx], feature_names, positive_label, config
            )
            pred = predict(model, X[test_idx])
            scores.append(prf_metrics(labels[test_idx], pred)[positive_label].f1)
        mean_f1 = float(np.mean(scores))
        results.append((config, mean_f1))
        if best is None or mean_f1 > best[1] or (mean_f1 == best[1] and config.c < best[0].c):
            best = (config, mean_f1)
    return best[0], results


@dataclass
class FoldResult:
    participant: str
    n_test: int
    metrics: dict  # label -> Prf


@dataclass
class EvalReport:
    positive_label: str
    folds: list
    mean: dict  # label -> Prf of per-fold means
    f1_std: dict  # label -> std of F1 across folds


def lopo_evaluate(
    matrix: FeatureMatrix,
    positive_label: str,
    config: TrainConfig = TrainConfig(),
) -> EvalReport:
    """Leave-one-participant-out evaluation with balanced test folds.

    Each fold trains on all other participants (class weights derived from
    that training split unless fixed in config) and tests on the held-out
    participant after majority downsampling. Deterministic given config.seed.
    """
    participants = sorted(set(map(str, matrix.participants)))
    if len(participants) < 2:
        raise ValueError("leave-one-participant-out needs at least 2 participants")
    for participant in participants:
        mask = matrix.participants == participant
        if not np.any(matrix.labels[mask] == positive_label):
            raise ValueError(
                f"participant {participant} has no {positive_label} windows"
            )
    folds = []
    for i, participant in enumerate(participants):
        test_mask = matrix.participants == participant
        train_idx = np.flatnonzero(~test_mask)
        test_idx = np.flatnonzero(test_mask)
        test_labels = matrix.labels[test_idx]
        model = train_linear_svm(
            matrix.values[train_idx],
            matrix.labels[train_idx],
            matrix.feature_names,
            positive_label,
            config,
        )
        keep = balance_test_set(test_labels, seed=config.seed + i)
        test_idx = test_idx[keep]
        pred = predict(model, matrix.values[test_idx])
        folds.append(
            FoldResult(
                participant=participant,
                n_test=test_idx.size,
                metrics=prf_metrics(matrix.labels[test_idx], pred),
            )
        )
    labels_seen = sorted({label for fold in folds for label in fold.metrics})
    mean = {}
    f1_std = {}
    for label in labels_seen:
        per_fold = [fold.metrics.get(label, Prf(0.0, 0.0, 0.0)) for fold in folds]
        mean[label] = Prf(*(float(np.mean([getattr(m, f) for m in per_fold]))
                            for f in Prf._fields))
        f1_std[label] = float(np.std([m.f1 for m in per_fold]))
    return EvalReport(
        positive_label=positive_label, folds=folds, mean=mean, f1_std=f1_std
    )
