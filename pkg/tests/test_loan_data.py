"""Join/label, cleaning, sampling, and encoding tests."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import build_dataset, make_orig, make_perf
from loanbench.errors import ConfigError, DataError
from loanbench.loan_data import (
    DATE_FIELDS,
    FEATURE_FIELDS,
    NOT_AVAILABLE,
    DatasetEncoder,
    assign_regime,
    clean,
    customer_default_status,
    encode,
    join_and_label,
    largest_remainder_quotas,
    stratified_sample,
)
from loanbench.schema import ORIGINATION_FIELDS, PERFORMANCE_FIELDS


def customer_rows(lsn, n_rows, terminal=None, **orig_overrides):
    """One origination record plus n_rows monthly rows; terminal is the
    zeroBalanceCode stamped on the last row ('' leaves it open)."""
    orig = make_orig(lsn, **orig_overrides)
    perfs = []
    for j in range(n_rows):
        zbc = terminal if (terminal and j == n_rows - 1) else ""
        perfs.append(
            make_perf(lsn, loanAge=float(j), monthlyReportingPeriod=200504.0 + j, zeroBalanceCode=zbc)
        )
    return orig, perfs


def small_population(n_defaulters=3, n_healthy=7, rows_each=4, year=2006):
    orig, perf = [], []
    for i in range(n_defaulters + n_healthy):
        terminal = "03" if i < n_defaulters else None
        o, ps = customer_rows(f"F06Q1{i:06d}", rows_each, terminal=terminal)
        orig.append(o)
        perf.extend(ps)
    records, _ = join_and_label(orig, perf, year)
    return records


# -- regimes -----------------------------------------------------------------


def test_regime_map_exhaustive():
    expected = {}
    expected.update({y: "Medium" for y in range(1999, 2005)})
    expected.update({y: "High" for y in range(2005, 2011)})
    expected.update({y: "Low" for y in range(2011, 2018)})
    assert len(expected) == 19
    for year, regime in expected.items():
        assert assign_regime(year) == regime


@pytest.mark.parametrize("year", [1998, 2018, 0, -1, 3000])
def test_regime_rejects_out_of_range(year):
    with pytest.raises(DataError):
        assign_regime(year)


# -- join and label ----------------------------------------------------------


def test_join_labels_each_row_by_its_own_code():
    orig, perfs = customer_rows("F06Q1000001", 4, terminal="03")
    records, diag = join_and_label([orig], perfs, 2006)
    assert [r.defaulted for r in records] == [0, 0, 0, 1]
    assert diag.orphan_performance_rows == 0
    assert all(r.regime == "High" and r.vintageYear == 2006 for r in records)


@pytest.mark.parametrize("code,label", [("", 0), ("01", 0), ("03", 1), ("06", 1), ("09", 1)])
def test_join_label_per_code(code, label):
    orig = make_orig("F06Q1000001")
    perf = make_perf("F06Q1000001", zeroBalanceCode=code)
    records, _ = join_and_label([orig], [perf], 2006)
    assert records[0].defaulted == label


def test_join_feature_map_contents():
    orig, perfs = customer_rows("F06Q1000001", 1, creditScore=700.0)
    records, _ = join_and_label([orig], perfs, 2006)
    features = records[0].features
    assert "loanSequenceNumber" not in features
    assert "zeroBalanceCode" not in features
    assert features["creditScore"] == 700.0
    assert features["loanAge"] == 0.0
    # one entry per origination + performance column minus the two exclusions
    assert len(features) == len(ORIGINATION_FIELDS) + len(PERFORMANCE_FIELDS) - 3


def test_join_counts_orphan_performance_rows():
    orig = make_orig("F06Q1000001")
    perfs = [make_perf("F06Q1000001"), make_perf("F06Q1999999"), make_perf("F06Q1999998")]
    records, diag = join_and_label([orig], perfs, 2006)
    assert len(records) == 1
    assert diag.orphan_performance_rows == 2


# -- clean -------------------------------------------------------------------


@pytest.mark.parametrize(
    "field",
    ["creditScore", "originalLoanToValue", "originalDebtToIncomeRatio", "originalInterestRate"],
)
def test_clean_drops_rows_missing_critical_field(field):
    orig, perfs = customer_rows("F06Q1000001", 2, **{field: None})
    keep_orig, keep_perfs = customer_rows("F06Q1000002", 1)
    records, _ = join_and_label([orig, keep_orig], perfs + keep_perfs, 2006)
    cleaned, diag = clean(records)
    assert diag.rows_dropped_missing_critical == 2
    assert [r.loanSequenceNumber for r in cleaned] == ["F06Q1000002"]


def test_clean_imputes_blanks():
    orig, perfs = customer_rows(
        "F06Q1000001", 1, numberOfBorrowers=None, firstTimeHomeBuyerFlag=""
    )
    records, _ = join_and_label([orig], perfs, 2006)
    # make_perf already leaves the loss columns None; count them as the oracle
    n_none = sum(1 for v in records[0].features.values() if v is None)
    cleaned, diag = clean(records)
    f = cleaned[0].features
    assert f["numberOfBorrowers"] == 0.0
    assert f["firstTimeHomeBuyerFlag"] == NOT_AVAILABLE
    assert diag.numeric_cells_imputed == n_none
    assert diag.nominal_cells_imputed >= 1
    assert all(v is not None and v != "" for v in f.values())


def test_clean_leaves_present_values_alone():
    orig, perfs = customer_rows("F06Q1000001", 1)
    records, _ = join_and_label([orig], perfs, 2006)
    cleaned, _ = clean(records)
    assert cleaned[0].features["creditScore"] == 751.0
    assert cleaned[0].features["propertyState"] == "CA"
    assert cleaned[0].defaulted == records[0].defaulted


# -- customer status and sampling --------------------------------------------


def test_customer_default_status_is_or_over_rows():
    records = small_population(n_defaulters=1, n_healthy=1, rows_each=3)
    status = customer_default_status(records)
    assert status == {"F06Q1000000": 1, "F06Q1000001": 0}


def test_largest_remainder_hand_cases():
    assert largest_remainder_quotas([1, 9], 3) == [0, 3]
    assert largest_remainder_quotas([5, 5], 5) == [3, 2]  # tie goes to the earlier stratum
    assert largest_remainder_quotas([10, 90], 50) == [5, 45]
    assert largest_remainder_quotas([7, 3], 0) == [0, 0]


def test_largest_remainder_overask_raises():
    with pytest.raises(DataError, match="only 10 available"):
        largest_remainder_quotas([7, 3], 11)


@given(
    sizes=st.lists(st.integers(min_value=1, max_value=500), min_size=1, max_size=6),
    frac=st.floats(min_value=0.0, max_value=1.0),
)
def test_largest_remainder_quota_properties(sizes, frac):
    total = sum(sizes)
    take = int(frac * total)
    quotas = largest_remainder_quotas(sizes, take)
    assert sum(quotas) == take
    assert all(q >= 0 for q in quotas)
    for q, s in zip(quotas, sizes):
        assert abs(q - take * s / total) < 1.0


def test_stratified_sample_keeps_whole_customers():
    records = small_population(n_defaulters=2, n_healthy=8, rows_each=5)
    sampled = stratified_sample(records, 5, seed=11)
    by_customer = {}
    for r in sampled:
        by_customer.setdefault(r.loanSequenceNumber, []).append(r)
    assert len(by_customer) == 5
    assert all(len(rows) == 5 for rows in by_customer.values())


def test_stratified_sample_preserves_defaulter_share():
    records = small_population(n_defaulters=10, n_healthy=90, rows_each=2)
    sampled = stratified_sample(records, 50, seed=0)
    status = customer_default_status(sampled)
    assert sum(status.values()) == 5
    assert len(status) == 50


def test_stratified_sample_deterministic():
    records = small_population(n_defaulters=4, n_healthy=16, rows_each=3)
    a = stratified_sample(records, 10, seed=42)
    b = stratified_sample(records, 10, seed=42)
    assert [r.loanSequenceNumber for r in a] == [r.loanSequenceNumber for r in b]
    c = stratified_sample(records, 10, seed=43)
    assert sum(customer_default_status(c).values()) == sum(customer_default_status(a).values())


def test_stratified_sample_arg_validation():
    records = small_population()
    assert stratified_sample(records, 0, seed=0) == []
    with pytest.raises(ConfigError):
        stratified_sample(records, -1, seed=0)
    with pytest.raises(DataError):
        stratified_sample(records, 10_000, seed=0)


# -- encoding ----------------------------------------------------------------


def test_feature_fields_exclude_key_label_and_dates():
    assert "loanSequenceNumber" not in FEATURE_FIELDS
    assert "zeroBalanceCode" not in FEATURE_FIELDS
    assert not set(FEATURE_FIELDS) & set(DATE_FIELDS)
    expected = (
        len(ORIGINATION_FIELDS) + len(PERFORMANCE_FIELDS) - 3 - len(DATE_FIELDS)
    )
    assert len(FEATURE_FIELDS) == expected


@pytest.mark.parametrize("field", sorted(DATE_FIELDS))
def test_encoder_rejects_date_fields(field):
    with pytest.raises(ConfigError, match=field):
        DatasetEncoder(["creditScore", field])


@pytest.mark.parametrize("field", ["loanSequenceNumber", "zeroBalanceCode", "notAColumn"])
def test_encoder_rejects_non_features(field):
    with pytest.raises(ConfigError):
        DatasetEncoder([field])


def test_encoder_unknown_category_falls_back_to_not_available():
    fit_records, _ = clean(small_population(rows_each=1))
    enc = DatasetEncoder(["creditScore", "propertyState"]).fit(fit_records)
    orig, perfs = customer_rows("F06Q1000099", 1, propertyState="WA")
    new_records, _ = join_and_label([orig], perfs, 2006)
    new_records, _ = clean(new_records)
    ds = enc.transform(new_records)
    assert ds.rows[0, 1] == enc.vocab["propertyState"][NOT_AVAILABLE]


def test_encoder_vocab_always_contains_not_available():
    records, _ = clean(small_population(rows_each=1))
    enc = DatasetEncoder(["propertyState"]).fit(records)
    assert NOT_AVAILABLE in enc.vocab["propertyState"]


def test_encoder_unfitted_transform_raises():
    records, _ = clean(small_population(rows_each=1))
    with pytest.raises(ConfigError, match="not fitted"):
        DatasetEncoder(["propertyState"]).transform(records)
    # all-numeric encoders have no vocabulary to fit
    ds = DatasetEncoder(["creditScore"]).transform(records)
    assert ds.n_features == 1


def test_encode_rejects_unclean_numeric():
    orig, perfs = customer_rows("F06Q1000001", 1)
    records, _ = join_and_label([orig], perfs, 2006)  # loss columns still None
    with pytest.raises(DataError, match="clean"):
        encode(records, ["miRecoveries"])


def test_encode_rejects_empty_and_mixed_vintages():
    a = small_population(n_defaulters=1, n_healthy=1, rows_each=1)
    b, _ = join_and_label([make_orig("F07Q1000001")], [make_perf("F07Q1000001")], 2007)
    a, _ = clean(a)
    b, _ = clean(b)
    enc = DatasetEncoder(["creditScore"])
    with pytest.raises(DataError, match="zero records"):
        enc.transform([])
    with pytest.raises(DataError, match="2006, 2007"):
        enc.transform(a + b)


def test_encode_matrix_and_metadata():
    records, _ = clean(small_population(n_defaulters=2, n_healthy=3, rows_each=2))
    ds = encode(records, ["creditScore", "propertyState", "loanAge"])
    assert ds.rows.shape == (10, 3)
    assert ds.rows.dtype == np.float64
    assert list(ds.categorical_mask) == [False, True, False]
    assert ds.code_counts[0] == 0 and ds.code_counts[2] == 0
    assert ds.code_counts[1] == 2  # CA plus Not Available
    assert ds.labels.sum() == 2
    assert ds.customer_ids == tuple(r.loanSequenceNumber for r in records)
    assert ds.vintage_year == 2006 and ds.regime == "High"
    np.testing.assert_array_equal(ds.rows[:, 2], [r.features["loanAge"] for r in records])


def test_encode_default_features_cover_everything():
    records, _ = clean(small_population(rows_each=1))
    ds = encode(records)
    assert ds.feature_names == FEATURE_FIELDS
    assert np.isfinite(ds.rows).all()


# -- Dataset -----------------------------------------------------------------


def test_dataset_take_and_select():
    ds = build_dataset([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]], [0, 1, 0])
    sub = ds.take([2, 0])
    np.testing.assert_array_equal(sub.rows, [[3.0, 30.0], [1.0, 10.0]])
    np.testing.assert_array_equal(sub.labels, [0, 0])
    assert sub.customer_ids == ("c00002", "c00000")

    swapped = ds.select_features(["f1", "f0"])
    np.testing.assert_array_equal(swapped.rows[:, 0], [10.0, 20.0, 30.0])
    assert swapped.feature_names == ("f1", "f0")
    with pytest.raises(ConfigError, match="nope"):
        ds.select_features(["nope"])


def test_dataset_checksum_tracks_content_not_flags():
    ds = build_dataset([[1.0], [2.0]], [0, 1])
    assert ds.checksum() == ds.with_holdout_flag(True).checksum()
    bumped = build_dataset([[1.0], [2.5]], [0, 1])
    assert ds.checksum() != bumped.checksum()
    relabeled = build_dataset([[1.0], [2.0]], [1, 0])
    assert ds.checksum() != relabeled.checksum()


def test_dataset_validation():
    with pytest.raises(DataError, match="labels"):
        build_dataset([[1.0], [2.0]], [0])
    with pytest.raises(DataError, match="non-finite"):
        build_dataset([[np.nan], [2.0]], [0, 1])
    with pytest.raises(DataError, match="binary"):
        build_dataset([[1.0], [2.0]], [0, 2])


def test_dataset_to_csv(tmp_path):
    ds = build_dataset([[1.0, 2.5], [3.0, 4.0]], [0, 1])
    path = tmp_path / "snap.csv"
    ds.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "loanSequenceNumber,f0,f1,defaulted"
    assert lines[1] == "c00000,1,2.5,0"
    assert lines[2] == "c00001,3,4,1"
