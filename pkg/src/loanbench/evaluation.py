"""
evaluation.py
-------------
Holdout management, metric computation, the original-vs-resampled protocol,
and ranking.

The split is customer-level and stratified: every monthly row of a customer
lands on one side, customers are stratified by whether they ever defaulted,
and the holdout side is flagged so the resampler will refuse it. One split
is made per vintage and shared by every model and both training variants,
which is what makes Original/Resampled rows comparable: they are always
scored against the byte-identical holdout.

Undefined metrics stay None. A classifier that never predicts positive has
no precision, and reporting 0 would flatter it; None cells are skipped when
averaging and sink to the bottom of rankings.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import models as model_api
from .errors import ConfigError, DataError
from .loan_data import Dataset, largest_remainder_quotas
from .models import ClassifierSpec
from .resampling import ResampleConfig, smote

VARIANT_ORIGINAL = "Original"
VARIANT_RESAMPLED = "Resampled"
ENTIRE_PERIOD = "EntirePeriod"

# accuracy is deliberately absent: under extreme imbalance it rewards the
# all-negative predictor, so it is computed and reported but never ranked on
RANKABLE_METRICS = {
    "precision": "precision",
    "recall": "recall",
    "rocAuc": "roc_auc",
    "roc_auc": "roc_auc",
}


@dataclass(frozen=True)
class SplitPlan:
    holdout_fraction: float = 0.30
    stratified: bool = True
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ConfigError(
                f"holdout_fraction must be in (0, 1), got {self.holdout_fraction}"
            )


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricValues:
    precision: float | None
    recall: float | None
    fpr: float | None
    accuracy: float | None


@dataclass
class MetricsReport:
    """One experiment cell: (vintage, model, variant) against the holdout."""

    model_kind: str
    variant: str
    vintage_year: int
    regime: str
    confusion: ConfusionMatrix | None
    precision: float | None
    recall: float | None
    fpr: float | None
    accuracy: float | None
    roc_auc: float | None
    fit_seconds: float | None
    converged: bool | None
    holdout_checksum: str | None
    error: str | None = None

    @property
    def name(self) -> str:
        suffix = "-R" if self.variant == VARIANT_RESAMPLED else ""
        return f"{self.model_kind}{suffix}"


def split(data: Dataset, plan: SplitPlan) -> tuple[Dataset, Dataset]:
    """70/30-style customer-level stratified split.

    Returns (train, holdout); the holdout carries the refuse-resampling
    flag. Raises when stratification is impossible (fewer than two
    customers in a stratum means one side must lose the class).
    """
    n0, n1 = data.class_counts()
    if n0 == 0 or n1 == 0:
        raise DataError("cannot split single-class data")

    customers: dict[str, int] = {}
    order: list[str] = []
    for cid, label in zip(data.customer_ids, data.labels):
        if cid not in customers:
            customers[cid] = 0
            order.append(cid)
        customers[cid] |= int(label)

    strata = [
        sorted(c for c, s in customers.items() if s == 1),
        sorted(c for c, s in customers.items() if s == 0),
    ]
    if plan.stratified and min(len(s) for s in strata) < 2:
        raise DataError(
            "cannot stratify: a stratum has fewer than 2 customers "
            f"(defaulters={len(strata[0])}, others={len(strata[1])})"
        )
    rng = np.random.default_rng(plan.seed)
    take_total = int(round(plan.holdout_fraction * len(customers)))
    if plan.stratified:
        quotas = largest_remainder_quotas([len(s) for s in strata], take_total)
        # both sides must keep both strata
        for i, (ids, q) in enumerate(zip(strata, quotas)):
            if q == 0 or q == len(ids):
                raise DataError(
                    f"holdout fraction {plan.holdout_fraction} leaves stratum {i} "
                    "empty on one side"
                )
        holdout_ids: set[str] = set()
        for ids, q in zip(strata, quotas):
            picks = rng.choice(len(ids), size=q, replace=False)
            holdout_ids.update(ids[i] for i in picks)
    else:
        everyone = sorted(customers)
        picks = rng.choice(len(everyone), size=take_total, replace=False)
        holdout_ids = {everyone[i] for i in picks}

    hold_mask = np.array([cid in holdout_ids for cid in data.customer_ids])
    train = data.take(np.flatnonzero(~hold_mask))
    holdout = data.take(np.flatnonzero(hold_mask)).with_holdout_flag(True)
    return train, holdout


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) != len(y_pred):
        raise DataError(f"length mismatch: {len(y_true)} truths vs {len(y_pred)} predictions")
    return ConfusionMatrix(
        tp=int(((y_pred == 1) & (y_true == 1)).sum()),
        fp=int(((y_pred == 1) & (y_true == 0)).sum()),
        fn=int(((y_pred == 0) & (y_true == 1)).sum()),
        tn=int(((y_pred == 0) & (y_true == 0)).sum()),
    )


def metrics(cm: ConfusionMatrix) -> MetricValues:
    """precision, recall, fpr, accuracy; None wherever the denominator is 0."""

    def ratio(num: int, den: int) -> float | None:
        return num / den if den > 0 else None

    return MetricValues(
        precision=ratio(cm.tp, cm.tp + cm.fp),
        recall=ratio(cm.tp, cm.tp + cm.fn),
        fpr=ratio(cm.fp, cm.fp + cm.tn),
        accuracy=ratio(cm.tp + cm.tn, cm.total),
    )


def roc_auc(y_true, scores) -> float:
    """Area under the ROC curve by trapezoid over tie-grouped thresholds.

    Accumulates the doubled area as exact integers (sum of
    delta_FP * (TP + previous TP) over descending score groups) and divides
    once, which is algebraically the concordant-pair probability with ties
    counted half.
    """
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    if len(y_true) != len(scores):
        raise DataError(f"length mismatch: {len(y_true)} truths vs {len(scores)} scores")
    P = int((y_true == 1).sum())
    N = int((y_true == 0).sum())
    if P == 0 or N == 0:
        raise DataError("roc_auc needs both classes present")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = y_true[order]
    twice_area = 0
    tp_prev = 0
    fp_prev = 0
    tp = 0
    fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        tp += int((t[i:j] == 1).sum())
        fp += j - i - int((t[i:j] == 1).sum())
        twice_area += (fp - fp_prev) * (tp + tp_prev)
        tp_prev, fp_prev = tp, fp
        i = j
    return twice_area / (2 * P * N)


def _evaluate(trained, holdout: Dataset) -> tuple[ConfusionMatrix, MetricValues, float | None]:
    preds = model_api.predict(trained, holdout.rows)
    cm = confusion(holdout.labels, preds)
    vals = metrics(cm)
    auc = None
    if trained.score_capability:
        h0, h1 = holdout.class_counts()
        if h0 > 0 and h1 > 0:
            auc = roc_auc(holdout.labels, model_api.score(trained, holdout.rows))
    return cm, vals, auc


def _run_cell(
    spec: ClassifierSpec,
    train: Dataset,
    holdout: Dataset,
    variant: str,
) -> MetricsReport:
    checksum = holdout.checksum()
    base = dict(
        model_kind=spec.kind,
        variant=variant,
        vintage_year=holdout.vintage_year,
        regime=holdout.regime,
        holdout_checksum=checksum,
    )
    try:
        t0 = time.perf_counter()
        trained = model_api.fit(spec, train)
        fit_seconds = time.perf_counter() - t0
        cm, vals, auc = _evaluate(trained, holdout)
        return MetricsReport(
            confusion=cm,
            precision=vals.precision,
            recall=vals.recall,
            fpr=vals.fpr,
            accuracy=vals.accuracy,
            roc_auc=auc,
            fit_seconds=fit_seconds,
            converged=trained.converged,
            **base,
        )
    except Exception as exc:  # per-cell isolation: the run must go on
        return MetricsReport(
            confusion=None,
            precision=None,
            recall=None,
            fpr=None,
            accuracy=None,
            roc_auc=None,
            fit_seconds=None,
            converged=None,
            error=f"{type(exc).__name__}: {exc}",
            **base,
        )


def run_experiment(
    datasets: Sequence[Dataset],
    specs: Sequence[ClassifierSpec],
    resample_cfg: ResampleConfig,
    split_plan: SplitPlan | None = None,
    jobs: int = 1,
) -> list[MetricsReport]:
    """The full protocol over every (vintage, model) pair.

    Per vintage: one stratified split; the training side is resampled once;
    every model trains on both the original and resampled training sets and
    both are scored against the identical holdout. Cell failures are
    captured in their report rather than aborting the run. Reports come
    back sorted by (vintage, model order, variant) regardless of jobs.
    """
    if not datasets:
        raise ConfigError("no datasets supplied")
    if not specs:
        raise ConfigError("no model specs supplied")
    plan = split_plan or SplitPlan()

    cells = []
    for data in datasets:
        train, holdout = split(data, plan)
        resampled = smote(train, resample_cfg).strip_provenance()
        for spec in specs:
            cells.append((spec, train, holdout, VARIANT_ORIGINAL))
            cells.append((spec, resampled, holdout, VARIANT_RESAMPLED))

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(lambda c: _run_cell(*c), cells))
    else:
        reports = [_run_cell(*c) for c in cells]
    return reports


def _in_scope(report: MetricsReport, scope: str) -> bool:
    if scope == ENTIRE_PERIOD:
        return True
    return report.regime == scope


@dataclass(frozen=True)
class RankedRow:
    rank: int
    name: str
    value: float | None


def rank(reports: Iterable[MetricsReport], metric: str, scope: str = ENTIRE_PERIOD) -> list[RankedRow]:
    """Average `metric` per (model, variant) over the scope, best first.

    Only precision, recall, and ROC-AUC are rankable; asking for accuracy
    is rejected because it is meaningless under this imbalance. Models with
    the metric undefined everywhere sink to the bottom with value None.
    Ties order by name.
    """
    if metric == "accuracy":
        raise ConfigError(
            "ranking by accuracy is disabled: with default rates this low the "
            "all-negative predictor scores ~1.0; rank by precision, recall, or rocAuc"
        )
    if metric not in RANKABLE_METRICS:
        raise ConfigError(
            f"unrankable metric {metric!r}; choose one of precision, recall, rocAuc"
        )
    attr = RANKABLE_METRICS[metric]
    reports = [r for r in reports if _in_scope(r, scope)]
    if not reports:
        raise DataError(f"no reports in scope {scope!r}")

    by_name: dict[str, list[float]] = {}
    for r in reports:
        values = by_name.setdefault(r.name, [])
        v = getattr(r, attr)
        if v is not None:
            values.append(v)
    averaged: list[tuple[str, float | None]] = [
        (name, float(np.mean(vs)) if vs else None) for name, vs in by_name.items()
    ]
    averaged.sort(key=lambda nv: (nv[1] is None, -(nv[1] or 0.0), nv[0]))
    return [RankedRow(rank=i + 1, name=name, value=value) for i, (name, value) in enumerate(averaged)]


def compare_variants(reports: Iterable[MetricsReport]) -> dict[str, dict[str, float | None]]:
    """Grand mean of every metric per variant over all (model, vintage)
    cells, skipping undefined cells."""
    sums: dict[str, dict[str, list[float]]] = {
        VARIANT_ORIGINAL: {},
        VARIANT_RESAMPLED: {},
    }
    seen = {VARIANT_ORIGINAL: False, VARIANT_RESAMPLED: False}
    for r in reports:
        if r.variant not in sums:
            continue
        seen[r.variant] = True
        for metric_name in ("precision", "recall", "fpr", "accuracy", "roc_auc"):
            v = getattr(r, metric_name)
            if v is not None:
                sums[r.variant].setdefault(metric_name, []).append(v)
    if not (seen[VARIANT_ORIGINAL] and seen[VARIANT_RESAMPLED]):
        raise DataError("compare_variants needs reports from both variants")
    return {
        variant: {
            metric_name: (float(np.mean(vs)) if (vs := table.get(metric_name)) else None)
            for metric_name in ("precision", "recall", "fpr", "accuracy", "roc_auc")
        }
        for variant, table in sums.items()
    }
