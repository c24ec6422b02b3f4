"""
feature_selection.py
--------------------
Three independent views on feature usefulness, and the crosscheck that
discards a feature only when every view deems it unimportant:

  * correlation_filter: |Pearson r| of each column against the label
  * rf_importance: normalized impurity-decrease share from a forest
  * ga_select: genetic search over feature masks, fitness = validation
    recall of a forest trained on the masked columns

Discard requires all three votes (importance below threshold, not a GA
survivor, correlation under 0.1), so adding evidence can only rescue a
feature, never condemn it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .loan_data import Dataset
from .models.trees import RandomForest

CORR_THRESHOLD = 0.1
IMPORTANCE_THRESHOLD = 1e-6


@dataclass(slots=True)
class FeatureVerdict:
    feature: str
    rf_importance: float
    ga_survived: bool
    corr_with_target: float
    discarded: bool


def correlation_filter(data: Dataset) -> dict[str, float]:
    """Absolute Pearson correlation of each column with the binary label.

    Zero-variance columns get 0.0 by convention (no signal, no vote).
    """
    y = data.labels.astype(np.float64)
    yc = y - y.mean()
    sy = np.sqrt((yc * yc).sum())
    out: dict[str, float] = {}
    for j, name in enumerate(data.feature_names):
        x = data.rows[:, j]
        xc = x - x.mean()
        sx = np.sqrt((xc * xc).sum())
        if sx == 0.0 or sy == 0.0:
            out[name] = 0.0
        else:
            out[name] = float(abs((xc * yc).sum() / (sx * sy)))
    return out


def rf_importance(data: Dataset, forest_params: dict | None = None) -> dict[str, float]:
    """Impurity-decrease importance share per feature from one forest fit.

    Shares are normalized to sum to 1 across features the forest ever
    split on; never-used features score exactly 0.
    """
    params = dict(forest_params or {})
    forest = RandomForest(**params)
    forest.fit(data.rows, data.labels)
    shares = forest.feature_importances()
    return {name: float(shares[j]) for j, name in enumerate(data.feature_names)}


@dataclass
class GAParams:
    """Genetic search settings.

    elitism_fraction of the population (rounded up, floor 1) survives each
    generation unchanged. The search stops early when the best mask's bits
    have not changed for stall_generations consecutive generations.
    fitness_subsample caps the rows used inside fitness evaluation so wide
    searches stay affordable; None uses everything.
    """

    population_size: int = 30
    generations: int = 30
    crossover_rate: float = 0.8
    mutation_rate: float = 0.02
    elitism_fraction: float = 0.005
    stall_generations: int = 5
    validation_fraction: float = 0.25
    fitness_subsample: int | None = None
    rf_params: dict = field(default_factory=lambda: {"n_trees": 15})
    seed: int | None = None

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError("crossover_rate must be in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must be in [0, 1]")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must be in (0, 1)")

    @property
    def elite_count(self) -> int:
        return max(1, int(np.ceil(self.elitism_fraction * self.population_size)))


def _stratified_row_split(labels: np.ndarray, fraction: float, rng):
    """Row indices for (train, validation), validation holding `fraction`
    of each class (at least one positive)."""
    val: list[np.ndarray] = []
    train: list[np.ndarray] = []
    for c in (0, 1):
        rows = np.flatnonzero(labels == c)
        if len(rows) == 0:
            raise DataError(f"class {c} absent; cannot build a validation fold")
        rows = rng.permutation(rows)
        n_val = max(1, int(round(fraction * len(rows)))) if len(rows) > 1 else 0
        n_val = min(n_val, len(rows) - 1)
        val.append(rows[:n_val])
        train.append(rows[n_val:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


def _recall(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = int(((y_pred == 1) & (y_true == 1)).sum())
    fn = int(((y_pred == 0) & (y_true == 1)).sum())
    if tp + fn == 0:
        return 0.0
    return tp / (tp + fn)


def ga_select(data: Dataset, params: GAParams | None = None, seed=None) -> tuple[str, ...]:
    """Evolve feature masks toward high validation recall; return the best
    mask's features (in dataset column order).

    Each generation: fitness-proportional parent selection, single-point
    crossover, per-bit mutation, elite carryover. Masks that mutate to
    all-zero are repaired to a single random feature. The search is
    stochastic by design; different seeds may legitimately return
    different sets.
    """
    params = params or GAParams()
    rng = np.random.default_rng(seed if seed is not None else params.seed)
    d = data.n_features
    X, y = data.rows, data.labels

    if params.fitness_subsample and params.fitness_subsample < len(y):
        keep = _stratified_cap(y, params.fitness_subsample, rng)
        X, y = X[keep], y[keep]
    train_idx, val_idx = _stratified_row_split(y, params.validation_fraction, rng)
    if y[val_idx].sum() == 0:
        raise DataError("validation fold has no positive rows; recall fitness undefined")
    Xtr, ytr = X[train_idx], y[train_idx]
    Xval, yval = X[val_idx], y[val_idx]

    cache: dict[bytes, float] = {}
    fit_seeds = iter(np.random.SeedSequence(rng.integers(2**63)).spawn(
        params.population_size * (params.generations + 1)
    ))

    def fitness(mask: np.ndarray) -> float:
        key = mask.tobytes()
        if key not in cache:
            cols = np.flatnonzero(mask)
            forest = RandomForest(**params.rf_params, random_state=next(fit_seeds))
            forest.fit(Xtr[:, cols], ytr)
            cache[key] = _recall(yval, forest.predict(Xval[:, cols]))
        return cache[key]

    def repair(mask: np.ndarray) -> np.ndarray:
        if not mask.any():
            mask[rng.integers(d)] = True
        return mask

    population = [repair(rng.random(d) < 0.5) for _ in range(params.population_size)]
    scores = np.array([fitness(m) for m in population])
    order = np.argsort(-scores, kind="stable")
    best_mask = population[order[0]].copy()
    best_score = scores[order[0]]
    stall = 0

    for _ in range(params.generations):
        elites = [population[i].copy() for i in order[: params.elite_count]]
        total = scores.sum()
        probs = scores / total if total > 0 else np.full(len(scores), 1.0 / len(scores))
        children = list(elites)
        while len(children) < params.population_size:
            pa, pb = rng.choice(len(population), size=2, p=probs)
            a, b = population[pa].copy(), population[pb].copy()
            if d > 1 and rng.random() < params.crossover_rate:
                point = rng.integers(1, d)
                a = np.concatenate([a[:point], b[point:]])
            flips = rng.random(d) < params.mutation_rate
            a ^= flips
            children.append(repair(a))
        population = children[: params.population_size]
        scores = np.array([fitness(m) for m in population])
        order = np.argsort(-scores, kind="stable")
        if scores[order[0]] > best_score:
            best_score = scores[order[0]]
            best_mask = population[order[0]].copy()
            stall = 0
        else:
            stall += 1
        if stall >= params.stall_generations:
            break

    return tuple(name for name, keep in zip(data.feature_names, best_mask) if keep)


def _stratified_cap(labels: np.ndarray, cap: int, rng) -> np.ndarray:
    """Row subsample of size <= cap that never loses a class.

    Positives are kept whole while they fit in half the cap (they are the
    scarce class on raw data); on balanced data both classes are capped.
    """
    if len(labels) <= cap:
        return np.arange(len(labels))
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) <= cap // 2:
        take_pos = pos
    else:
        take_pos = rng.choice(pos, size=cap // 2, replace=False)
    n_neg = max(1, cap - len(take_pos))
    take_neg = rng.choice(neg, size=min(n_neg, len(neg)), replace=False)
    return np.sort(np.concatenate([take_pos, take_neg]))


def crosscheck_discard(
    corr: dict[str, float],
    rf_imp: dict[str, float],
    ga_set,
    corr_threshold: float = CORR_THRESHOLD,
    importance_threshold: float = IMPORTANCE_THRESHOLD,
) -> list[FeatureVerdict]:
    """One verdict per feature; discarded only when all three approaches
    call it unimportant."""
    if set(corr) != set(rf_imp):
        raise DataError("correlation and importance maps cover different features")
    unknown = set(ga_set) - set(corr)
    if unknown:
        raise DataError(f"GA survivors not in the feature list: {sorted(unknown)}")
    ga_set = set(ga_set)
    verdicts = []
    for name, c in corr.items():
        imp = rf_imp[name]
        survived = name in ga_set
        verdicts.append(
            FeatureVerdict(
                feature=name,
                rf_importance=imp,
                ga_survived=survived,
                corr_with_target=c,
                discarded=imp < importance_threshold and not survived and c < corr_threshold,
            )
        )
    return verdicts


def run_feature_selection(
    data: Dataset,
    rf_params: dict | None = None,
    ga_params: GAParams | None = None,
    seed=None,
    corr_threshold: float = CORR_THRESHOLD,
    importance_threshold: float = IMPORTANCE_THRESHOLD,
) -> tuple[Dataset, list[FeatureVerdict]]:
    """Full crosscheck; returns the dataset minus discarded columns plus the
    verdict table. If everything would be discarded the dataset is returned
    unchanged (a degenerate signal is still a dataset)."""
    corr = correlation_filter(data)
    imp = rf_importance(data, rf_params)
    ga = ga_select(data, ga_params, seed=seed)
    verdicts = crosscheck_discard(corr, imp, ga, corr_threshold, importance_threshold)
    kept = [v.feature for v in verdicts if not v.discarded]
    if not kept:
        return data, verdicts
    return data.select_features(kept), verdicts


def write_verdicts_csv(verdicts: list[FeatureVerdict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "rfImportance", "gaSurvived", "corrWithTarget", "discarded"])
        for v in verdicts:
            writer.writerow(
                [
                    v.feature,
                    repr(v.rf_importance),
                    int(v.ga_survived),
                    repr(v.corr_with_target),
                    int(v.discarded),
                ]
            )
