"""Split, metric, protocol, and ranking tests."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build_dataset, gaussian_blobs, make_report
from loanbench.errors import ConfigError, DataError
from loanbench.evaluation import (
    ENTIRE_PERIOD,
    VARIANT_ORIGINAL,
    VARIANT_RESAMPLED,
    ConfusionMatrix,
    MetricsReport,
    SplitPlan,
    compare_variants,
    confusion,
    metrics,
    rank,
    roc_auc,
    run_experiment,
    split,
)
from loanbench.models import ClassifierSpec
from loanbench.resampling import ResampleConfig


def split_population(n_defaulters=10, n_healthy=90, rows_per=1, seed=0):
    rng = np.random.default_rng(seed)
    rows, labels, cids = [], [], []
    for i in range(n_defaulters + n_healthy):
        is_def = i < n_defaulters
        for _ in range(rows_per):
            rows.append(rng.normal(size=2))
            labels.append(int(is_def))
            cids.append(f"cust{i:04d}")
    return build_dataset(np.array(rows), labels, customer_ids=cids)


# -- confusion and point metrics ------------------------------------------------


@given(
    y=st.lists(st.integers(0, 1), min_size=1, max_size=60),
    p=st.lists(st.integers(0, 1), min_size=60, max_size=60),
)
def test_confusion_counts_match_manual_tally(y, p):
    p = p[: len(y)]
    cm = confusion(y, p)
    assert cm.tp == sum(1 for a, b in zip(y, p) if a == 1 and b == 1)
    assert cm.fp == sum(1 for a, b in zip(y, p) if a == 0 and b == 1)
    assert cm.fn == sum(1 for a, b in zip(y, p) if a == 1 and b == 0)
    assert cm.tn == sum(1 for a, b in zip(y, p) if a == 0 and b == 0)
    assert cm.total == len(y)


def test_confusion_length_mismatch():
    with pytest.raises(DataError, match="length mismatch"):
        confusion([0, 1], [0])


def test_metrics_hand_case():
    vals = metrics(ConfusionMatrix(tp=3, fp=1, fn=2, tn=4))
    assert vals.precision == pytest.approx(0.75)
    assert vals.recall == pytest.approx(0.6)
    assert vals.fpr == pytest.approx(0.2)
    assert vals.accuracy == pytest.approx(0.7)


def test_metrics_undefined_ratios_are_none_not_zero():
    vals = metrics(ConfusionMatrix(tp=0, fp=0, fn=0, tn=10))
    assert vals.precision is None
    assert vals.recall is None
    assert vals.fpr == 0.0
    assert vals.accuracy == 1.0
    empty = metrics(ConfusionMatrix(0, 0, 0, 0))
    assert (empty.precision, empty.recall, empty.fpr, empty.accuracy) == (None,) * 4


# -- ROC-AUC ------------------------------------------------------------------------


def pair_count_auc(y, s):
    """Independent oracle: P(score_pos > score_neg) with ties counted half."""
    y = np.asarray(y)
    s = np.asarray(s, dtype=float)
    pos, neg = s[y == 1], s[y == 0]
    gt = (pos[:, None] > neg[None, :]).sum()
    eq = (pos[:, None] == neg[None, :]).sum()
    return (gt + 0.5 * eq) / (len(pos) * len(neg))


def test_roc_auc_extremes():
    assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
    assert roc_auc([0, 0, 1, 1], [0.9, 0.8, 0.2, 0.1]) == 0.0
    assert roc_auc([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5]) == 0.5


def test_roc_auc_known_value():
    # pairs: (.8 vs .1)=1, (.8 vs .4)=1, (.3 vs .1)=1, (.3 vs .4)=0 -> 3/4
    assert roc_auc([1, 0, 1, 0], [0.8, 0.1, 0.3, 0.4]) == pytest.approx(0.75)


@settings(max_examples=200, deadline=None)
@given(
    labels=st.lists(st.integers(0, 1), min_size=2, max_size=80).filter(
        lambda ls: 0 < sum(ls) < len(ls)
    ),
    data=st.data(),
)
def test_roc_auc_matches_pair_counting(labels, data):
    # discrete scores force heavy ties; the tie path must stay exact
    scores = data.draw(
        st.lists(
            st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]),
            min_size=len(labels),
            max_size=len(labels),
        )
    )
    assert abs(roc_auc(labels, scores) - pair_count_auc(labels, scores)) <= 1e-12


def test_roc_auc_validation():
    with pytest.raises(DataError, match="both classes"):
        roc_auc([1, 1], [0.1, 0.2])
    with pytest.raises(DataError, match="both classes"):
        roc_auc([0, 0], [0.1, 0.2])
    with pytest.raises(DataError, match="length mismatch"):
        roc_auc([0, 1], [0.5])


# -- split -------------------------------------------------------------------------


def test_split_plan_validation():
    with pytest.raises(ConfigError, match="holdout_fraction"):
        SplitPlan(holdout_fraction=0.0)
    with pytest.raises(ConfigError, match="holdout_fraction"):
        SplitPlan(holdout_fraction=1.0)


def test_split_takes_stratified_customer_quotas():
    data = split_population(n_defaulters=10, n_healthy=90)
    train, holdout = split(data, SplitPlan(holdout_fraction=0.30, seed=1))
    assert len(set(holdout.customer_ids)) == 30
    assert int(holdout.labels.sum()) == 3
    assert len(set(train.customer_ids)) == 70
    assert int(train.labels.sum()) == 7
    assert holdout.is_holdout and not train.is_holdout


def test_split_never_splits_a_customer():
    data = split_population(n_defaulters=4, n_healthy=16, rows_per=5)
    train, holdout = split(data, SplitPlan(holdout_fraction=0.30, seed=2))
    assert set(train.customer_ids).isdisjoint(set(holdout.customer_ids))
    assert train.n_rows + holdout.n_rows == data.n_rows
    counts = {}
    for cid in holdout.customer_ids:
        counts[cid] = counts.get(cid, 0) + 1
    assert all(c == 5 for c in counts.values())


def test_split_deterministic_and_seed_sensitive():
    data = split_population(n_defaulters=10, n_healthy=40)
    _, h1 = split(data, SplitPlan(seed=3))
    _, h2 = split(data, SplitPlan(seed=3))
    assert h1.checksum() == h2.checksum()
    _, h3 = split(data, SplitPlan(seed=4))
    assert h1.checksum() != h3.checksum()


def test_split_errors():
    lonely = build_dataset([[0.0], [1.0]], [0, 0])
    with pytest.raises(DataError, match="single-class"):
        split(lonely, SplitPlan())
    one_defaulter = split_population(n_defaulters=1, n_healthy=9)
    with pytest.raises(DataError, match="fewer than 2"):
        split(one_defaulter, SplitPlan())
    tiny = split_population(n_defaulters=2, n_healthy=2)
    with pytest.raises(DataError, match="leaves stratum"):
        split(tiny, SplitPlan(holdout_fraction=0.9))


def test_split_unstratified_ignores_strata():
    data = split_population(n_defaulters=1, n_healthy=9)
    train, holdout = split(data, SplitPlan(holdout_fraction=0.3, stratified=False, seed=0))
    assert len(set(holdout.customer_ids)) == 3
    assert train.n_rows + holdout.n_rows == data.n_rows


# -- full protocol --------------------------------------------------------------------


def protocol_dataset(year=2005, regime="High", seed=0):
    X, y = gaussian_blobs(n_per_class=30, gap=2.5, seed=seed)
    return build_dataset(X, y, vintage_year=year, regime=regime)


def test_run_experiment_emits_ordered_cells():
    datasets = [protocol_dataset(2005, "High", 0), protocol_dataset(2012, "Low", 1)]
    specs = [
        ClassifierSpec("DT", {"max_depth": 3}, seed=1),
        ClassifierSpec("NB", seed=2),
    ]
    reports = run_experiment(datasets, specs, ResampleConfig(k=3, seed=5), SplitPlan(seed=7))
    assert len(reports) == 8
    assert [r.model_kind for r in reports] == ["DT", "DT", "NB", "NB"] * 2
    assert [r.variant for r in reports] == [VARIANT_ORIGINAL, VARIANT_RESAMPLED] * 4
    assert [r.vintage_year for r in reports] == [2005] * 4 + [2012] * 4
    assert all(r.error is None for r in reports)


def test_run_experiment_shares_one_holdout_per_vintage():
    datasets = [protocol_dataset(2005, "High", 3)]
    specs = [ClassifierSpec("DT", {"max_depth": 3}, seed=1), ClassifierSpec("LR", {"epochs": 40}, seed=2)]
    reports = run_experiment(datasets, specs, ResampleConfig(k=3, seed=5), SplitPlan(seed=9))
    checksums = {r.holdout_checksum for r in reports}
    assert len(checksums) == 1


def test_run_experiment_isolates_cell_failures():
    datasets = [protocol_dataset(2005, "High", 4)]
    specs = [
        ClassifierSpec("RS", {"k": 50_000}, seed=0),  # cannot have 50k distinct points
        ClassifierSpec("DT", {"max_depth": 3}, seed=1),
    ]
    reports = run_experiment(datasets, specs, ResampleConfig(k=3, seed=5), SplitPlan(seed=9))
    failed = [r for r in reports if r.error]
    healthy = [r for r in reports if not r.error]
    assert len(failed) == 2 and all(r.model_kind == "RS" for r in failed)
    assert all("DataError" in r.error for r in failed)
    assert all(r.confusion is None for r in failed)
    assert len(healthy) == 2 and all(r.confusion is not None for r in healthy)


def test_run_experiment_jobs_parity():
    datasets = [protocol_dataset(2005, "High", 5)]
    specs = [ClassifierSpec("DT", {"max_depth": 3}, seed=1), ClassifierSpec("NB", seed=2)]
    serial = run_experiment(datasets, specs, ResampleConfig(k=3, seed=5), SplitPlan(seed=9), jobs=1)
    threaded = run_experiment(datasets, specs, ResampleConfig(k=3, seed=5), SplitPlan(seed=9), jobs=4)
    strip = lambda r: dataclasses.replace(r, fit_seconds=None)
    assert [strip(r) for r in serial] == [strip(r) for r in threaded]


def test_run_experiment_input_validation():
    with pytest.raises(ConfigError, match="no datasets"):
        run_experiment([], [ClassifierSpec("DT")], ResampleConfig())
    with pytest.raises(ConfigError, match="no model specs"):
        run_experiment([protocol_dataset()], [], ResampleConfig())


# -- ranking and comparison --------------------------------------------------------------


def test_rank_averages_and_orders():
    reports = [
        make_report("DT", recall=0.2, year=2005),
        make_report("DT", recall=0.4, year=2006),
        make_report("NB", recall=0.9),
        make_report("DT", VARIANT_RESAMPLED, recall=0.8),
    ]
    rows = rank(reports, "recall")
    assert [(r.rank, r.name) for r in rows] == [(1, "NB"), (2, "DT-R"), (3, "DT")]
    assert rows[2].value == pytest.approx(0.3)


def test_rank_none_everywhere_sinks_to_bottom():
    reports = [
        make_report("DT", precision=None),
        make_report("NB", precision=0.1),
    ]
    rows = rank(reports, "precision")
    assert rows[-1].name == "DT" and rows[-1].value is None
    assert rows[0].name == "NB"


def test_rank_scope_filters_by_regime():
    reports = [
        make_report("DT", regime="High", recall=0.9),
        make_report("DT", regime="Low", recall=0.1),
    ]
    high = rank(reports, "recall", scope="High")
    assert high[0].value == pytest.approx(0.9)
    both = rank(reports, "recall", scope=ENTIRE_PERIOD)
    assert both[0].value == pytest.approx(0.5)
    with pytest.raises(DataError, match="no reports in scope"):
        rank(reports, "recall", scope="Medium")


def test_rank_rejects_accuracy_with_an_explanation():
    with pytest.raises(ConfigError, match="all-negative predictor"):
        rank([make_report()], "accuracy")
    with pytest.raises(ConfigError, match="unrankable"):
        rank([make_report()], "f1")


def test_rank_ties_order_by_name():
    reports = [make_report("NB", recall=0.5), make_report("DT", recall=0.5)]
    rows = rank(reports, "recall")
    assert [r.name for r in rows] == ["DT", "NB"]


def test_compare_variants_grand_means_skip_none():
    reports = [
        make_report("DT", VARIANT_ORIGINAL, recall=0.0, precision=None),
        make_report("NB", VARIANT_ORIGINAL, recall=0.2, precision=0.5),
        make_report("DT", VARIANT_RESAMPLED, recall=0.8, precision=0.25),
        make_report("NB", VARIANT_RESAMPLED, recall=0.6, precision=0.75),
    ]
    table = compare_variants(reports)
    assert table[VARIANT_ORIGINAL]["recall"] == pytest.approx(0.1)
    assert table[VARIANT_ORIGINAL]["precision"] == pytest.approx(0.5)  # None skipped
    assert table[VARIANT_RESAMPLED]["recall"] == pytest.approx(0.7)
    assert table[VARIANT_RESAMPLED]["precision"] == pytest.approx(0.5)


def test_compare_variants_requires_both_sides():
    with pytest.raises(DataError, match="both variants"):
        compare_variants([make_report(variant=VARIANT_ORIGINAL)])
