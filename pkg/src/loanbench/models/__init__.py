"""
Twelve classifier families behind one fit/score/predict contract.

Kind codes: LR logistic regression, MDA quadratic discriminant analysis,
NB naive Bayes, DT decision tree, RF random forest, ET extremely randomized
trees, AB AdaBoost, GB gradient boosting, SVM linear support vector
machine, ANN feed-forward net, RS rough k-means, GA genetic feature search
feeding a forest.

Every score-capable model returns class-1 scores in [0, 1] and predicts 1
exactly when the score clears 0.5. RS is the lone exception: it yields only
the binary decision, and asking it for scores raises CapabilityError.
"""

from __future__ import annotations

import inspect
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import CapabilityError, ConfigError, DataError
from ..loan_data import Dataset
from .bayes import NaiveBayes, QuadraticDiscriminant
from .boosting import AdaBoost, GradientBoosting
from .ga_rf import GASelectedForest
from .linear import LinearSVM, LogisticRegression
from .neural import NeuralNet
from .rough import RoughKMeans
from .trees import BinnedMatrix, DecisionTree, ExtraTrees, RandomForest

MODEL_KINDS = ("LR", "MDA", "NB", "DT", "RF", "ET", "AB", "GB", "SVM", "ANN", "RS", "GA")

_MODEL_CLASSES = {
    "LR": LogisticRegression,
    "MDA": QuadraticDiscriminant,
    "NB": NaiveBayes,
    "DT": DecisionTree,
    "RF": RandomForest,
    "ET": ExtraTrees,
    "AB": AdaBoost,
    "GB": GradientBoosting,
    "SVM": LinearSVM,
    "ANN": NeuralNet,
    "RS": RoughKMeans,
    "GA": GASelectedForest,
}


def allowed_hyper_params(kind: str) -> tuple[str, ...]:
    """Constructor keywords a kind accepts (minus the seed, which is
    supplied by ClassifierSpec.seed)."""
    params = inspect.signature(_MODEL_CLASSES[kind].__init__).parameters
    return tuple(p for p in params if p not in ("self", "random_state"))


@dataclass(frozen=True)
class ClassifierSpec:
    """What to train: a kind, its hyper-parameters, and a seed.

    Unknown kinds and unknown hyper-parameter keys are rejected here, at
    construction, so a bad experiment config fails before any data loads.
    """

    kind: str
    hyper_params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(
                f"unknown model kind {self.kind!r}; expected one of {', '.join(MODEL_KINDS)}"
            )
        allowed = allowed_hyper_params(self.kind)
        unknown = [k for k in self.hyper_params if k not in allowed]
        if unknown:
            raise ConfigError(
                f"{self.kind} does not accept hyper-parameters {unknown}; allowed: {list(allowed)}"
            )

    def with_params(self, **overrides) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, {**self.hyper_params, **overrides}, self.seed)


@dataclass
class TrainedModel:
    """Fitted classifier plus the metadata the evaluation layer needs."""

    spec: ClassifierSpec
    model: object
    score_capability: bool
    converged: bool
    feature_names: tuple[str, ...]


def build_model(spec: ClassifierSpec):
    """Instantiate the underlying (unfitted) model for a spec."""
    cls = _MODEL_CLASSES[spec.kind]
    hp = dict(spec.hyper_params)
    if spec.kind == "ANN" and "hidden" in hp:
        hp["hidden"] = tuple(hp["hidden"])
    return cls(**hp, random_state=spec.seed)


def fit(spec: ClassifierSpec, train: Dataset) -> TrainedModel:
    """Train one model on one dataset.

    Non-clustering kinds require both classes in the training labels. The
    rows are used provenance-free; resampling bookkeeping never reaches a
    model.
    """
    train = train.strip_provenance()
    X, y = train.rows, train.labels
    if spec.kind != "RS":
        n0, n1 = train.class_counts()
        if n0 == 0 or n1 == 0:
            raise DataError(
                f"{spec.kind} needs both classes in training data "
                f"(got {n0} negatives, {n1} positives)"
            )
    model = build_model(spec)
    if spec.kind == "NB":
        model.fit(X, y, categorical_mask=train.categorical_mask, code_counts=train.code_counts)
    elif spec.kind == "GA":
        model.fit_dataset(train)
    else:
        model.fit(X, y)
    return TrainedModel(
        spec=spec,
        model=model,
        score_capability=spec.kind != "RS",
        converged=bool(getattr(model, "converged_", True)),
        feature_names=train.feature_names,
    )


def _as_matrix(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def score(trained: TrainedModel, x):
    """Class-1 score in [0, 1]; scalar for a single vector, array for rows."""
    if not trained.score_capability:
        raise CapabilityError(
            f"{trained.spec.kind} yields only binary decisions, not scores"
        )
    X, single = _as_matrix(x)
    s = trained.model.predict_score(X)
    return float(s[0]) if single else s


def predict(trained: TrainedModel, x):
    """Hard 0/1 decision; score >= 0.5 for score-capable kinds."""
    X, single = _as_matrix(x)
    p = trained.model.predict(X)
    return int(p[0]) if single else p


def grid_search(spec: ClassifierSpec, train: Dataset, grid: dict, folds: int = 3) -> dict:
    """Exhaustive search over the cartesian product of grid values.

    Each combination is scored by mean validation recall over stratified
    folds; folds whose validation slice has no positives are skipped in the
    mean. Strictly-better wins, so ties keep the earliest combination in
    grid order. Returns the winning hyper-parameter map (spec defaults
    merged with the winning combination).
    """
    if not grid:
        raise ConfigError("empty hyper-parameter grid")
    if folds < 2:
        raise ConfigError(f"folds must be >= 2, got {folds}")
    names = list(grid)
    combos = list(itertools.product(*(grid[n] for n in names)))
    fold_sets = _stratified_folds(train.labels, folds, spec.seed)

    best_combo = None
    best_recall = -np.inf
    for values in combos:
        candidate = spec.with_params(**dict(zip(names, values)))
        recalls = []
        for fold in range(folds):
            val_idx = fold_sets[fold]
            tr_idx = np.sort(np.concatenate([fold_sets[i] for i in range(folds) if i != fold]))
            if train.labels[val_idx].sum() == 0 or len(set(train.labels[tr_idx])) < 2:
                continue
            trained = fit(candidate, train.take(tr_idx))
            preds = predict(trained, train.rows[val_idx])
            tp = int(((preds == 1) & (train.labels[val_idx] == 1)).sum())
            fn = int(((preds == 0) & (train.labels[val_idx] == 1)).sum())
            recalls.append(tp / (tp + fn))
        mean_recall = float(np.mean(recalls)) if recalls else -np.inf
        if mean_recall > best_recall:
            best_recall = mean_recall
            best_combo = dict(zip(names, values))
    if best_combo is None:
        best_combo = dict(zip(names, combos[0]))
    return {**spec.hyper_params, **best_combo}


def _stratified_folds(labels: np.ndarray, folds: int, seed) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    for c in (0, 1):
        rows = rng.permutation(np.flatnonzero(labels == c))
        for i, r in enumerate(rows):
            buckets[i % folds].append(int(r))
    return [np.sort(np.array(b, dtype=np.intp)) for b in buckets]


MODEL_FORMAT = "loanbench-model"
MODEL_FORMAT_VERSION = 1


def save_model(trained: TrainedModel, path) -> None:
    """Self-describing JSON snapshot; load_model restores a working model."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "kind": trained.spec.kind,
        "hyper_params": _jsonable(trained.spec.hyper_params),
        "seed": trained.spec.seed,
        "feature_names": list(trained.feature_names),
        "score_capability": trained.score_capability,
        "converged": trained.converged,
        "state": trained.model.get_state(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> TrainedModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"not a model document: {path}")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model document version {doc.get('version')}")
    spec = ClassifierSpec(doc["kind"], doc["hyper_params"], doc["seed"])
    model = build_model(spec)
    model.set_state(doc["state"])
    return TrainedModel(
        spec=spec,
        model=model,
        score_capability=bool(doc["score_capability"]),
        converged=bool(doc["converged"]),
        feature_names=tuple(doc["feature_names"]),
    )


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


__all__ = [
    "MODEL_KINDS",
    "ClassifierSpec",
    "TrainedModel",
    "fit",
    "score",
    "predict",
    "grid_search",
    "save_model",
    "load_model",
    "build_model",
    "allowed_hyper_params",
    "BinnedMatrix",
    "DecisionTree",
    "RandomForest",
    "ExtraTrees",
    "AdaBoost",
    "GradientBoosting",
    "LogisticRegression",
    "LinearSVM",
    "QuadraticDiscriminant",
    "NaiveBayes",
    "NeuralNet",
    "RoughKMeans",
    "GASelectedForest",
]
