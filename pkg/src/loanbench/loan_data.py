"""
loan_data.py
------------
Clean, join, label, sample, and encode parsed vintage records.

Pipeline order: schema.parse_vintage -> join_and_label -> clean ->
stratified_sample -> encode. Every step is a pure function of its inputs;
dropped and imputed counts come back as Diagnostics values instead of being
logged from inside.

A "customer" here is one loan: loanSequenceNumber identifies the borrower
relationship and the performance file holds that customer's monthly rows.
Sampling and train/holdout splitting both operate at customer granularity so
near-duplicate monthly rows never straddle a boundary.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .schema import (
    CRITICAL_ORIGINATION_FIELDS,
    DATE_FIELDS,
    DEFAULT_ZERO_BALANCE_CODES,
    ORIGINATION_FIELDS,
    PERFORMANCE_FIELDS,
    OriginationRecord,
    PerformanceRecord,
)

NOT_AVAILABLE = "Not Available"

REGIME_LOW = "Low"
REGIME_MEDIUM = "Medium"
REGIME_HIGH = "High"
REGIMES = (REGIME_LOW, REGIME_MEDIUM, REGIME_HIGH)

VINTAGE_YEARS = tuple(range(1999, 2018))

# field -> "num" | "str" for every joined column
FIELD_KINDS: dict[str, str] = {
    name: kind for name, kind in (*ORIGINATION_FIELDS, *PERFORMANCE_FIELDS)
}

# Columns eligible for a feature matrix: everything except the join key,
# the label source, and calendar fields.
FEATURE_FIELDS: tuple[str, ...] = tuple(
    name
    for name, _ in (*ORIGINATION_FIELDS, *PERFORMANCE_FIELDS)
    if name not in DATE_FIELDS and name not in ("loanSequenceNumber", "zeroBalanceCode")
)


def default_feature_names() -> tuple[str, ...]:
    """All model-eligible columns, origination first, in file order."""
    return FEATURE_FIELDS


def assign_regime(vintage_year: int) -> str:
    """Map an origination vintage year to its default-rate regime."""
    if 1999 <= vintage_year <= 2004:
        return REGIME_MEDIUM
    if 2005 <= vintage_year <= 2010:
        return REGIME_HIGH
    if 2011 <= vintage_year <= 2017:
        return REGIME_LOW
    raise DataError(f"vintage year {vintage_year} outside supported range 1999-2017")


@dataclass(slots=True)
class LoanRecord:
    """One performance row joined with its origination row, plus the label.

    ``features`` maps every joined column except loanSequenceNumber and
    zeroBalanceCode to its value. Date columns stay in the map (cleaning
    imputes them like any numeric) but the encoder refuses to emit them.
    """

    loanSequenceNumber: str
    vintageYear: int
    regime: str
    defaulted: int
    features: dict


@dataclass(slots=True)
class Diagnostics:
    """Dropped/imputed counts, merged across pipeline stages."""

    orphan_performance_rows: int = 0
    rows_dropped_missing_critical: int = 0
    nominal_cells_imputed: int = 0
    numeric_cells_imputed: int = 0

    def merge(self, other: "Diagnostics") -> "Diagnostics":
        return Diagnostics(
            self.orphan_performance_rows + other.orphan_performance_rows,
            self.rows_dropped_missing_critical + other.rows_dropped_missing_critical,
            self.nominal_cells_imputed + other.nominal_cells_imputed,
            self.numeric_cells_imputed + other.numeric_cells_imputed,
        )

    def as_rows(self) -> list[tuple[str, int]]:
        return [
            ("orphanPerformanceRows", self.orphan_performance_rows),
            ("rowsDroppedMissingCritical", self.rows_dropped_missing_critical),
            ("nominalCellsImputed", self.nominal_cells_imputed),
            ("numericCellsImputed", self.numeric_cells_imputed),
        ]


def join_and_label(
    orig: Sequence[OriginationRecord],
    perf: Sequence[PerformanceRecord],
    vintage_year: int,
) -> tuple[list[LoanRecord], Diagnostics]:
    """Concatenate each performance row with its origination row and label it.

    defaulted is 1 exactly when the row's own zeroBalanceCode is a default
    termination (03, 06, 09); blank and 01 are 0. The code itself never
    enters the feature map because it defines the target. Performance rows
    with no matching origination row are dropped and counted.
    """
    regime = assign_regime(vintage_year)
    by_id = {o.loanSequenceNumber: o for o in orig}
    diag = Diagnostics()
    records: list[LoanRecord] = []
    orig_names = [name for name, _ in ORIGINATION_FIELDS if name != "loanSequenceNumber"]
    perf_names = [
        name
        for name, _ in PERFORMANCE_FIELDS
        if name not in ("loanSequenceNumber", "zeroBalanceCode")
    ]
    for p in perf:
        o = by_id.get(p.loanSequenceNumber)
        if o is None:
            diag.orphan_performance_rows += 1
            continue
        features = {name: getattr(o, name) for name in orig_names}
        for name in perf_names:
            features[name] = getattr(p, name)
        records.append(
            LoanRecord(
                loanSequenceNumber=p.loanSequenceNumber,
                vintageYear=vintage_year,
                regime=regime,
                defaulted=int(p.zeroBalanceCode in DEFAULT_ZERO_BALANCE_CODES),
                features=features,
            )
        )
    return records, diag


def clean(records: Iterable[LoanRecord]) -> tuple[list[LoanRecord], Diagnostics]:
    """Drop rows missing a critical origination field, then impute blanks.

    Rows lacking creditScore, originalLoanToValue, originalDebtToIncomeRatio,
    or originalInterestRate are removed outright: those absences usually mean
    reporting errors, and imputing them would invent credit signal. Remaining
    blanks are mechanical: nominal "" becomes the category "Not Available",
    numeric None becomes 0. Cleaning is total; it never raises.
    """
    diag = Diagnostics()
    out: list[LoanRecord] = []
    for r in records:
        if any(r.features[name] is None for name in CRITICAL_ORIGINATION_FIELDS):
            diag.rows_dropped_missing_critical += 1
            continue
        fixed = {}
        for name, value in r.features.items():
            if FIELD_KINDS[name] == "num":
                if value is None:
                    value = 0.0
                    diag.numeric_cells_imputed += 1
            elif value == "":
                value = NOT_AVAILABLE
                diag.nominal_cells_imputed += 1
            fixed[name] = value
        out.append(dataclasses.replace(r, features=fixed))
    return out, diag


def customer_default_status(records: Iterable[LoanRecord]) -> dict[str, int]:
    """Per-customer label: 1 if any of the customer's rows defaulted."""
    status: dict[str, int] = {}
    for r in records:
        status[r.loanSequenceNumber] = status.get(r.loanSequenceNumber, 0) | r.defaulted
    return status


def largest_remainder_quotas(sizes: Sequence[int], total_take: int) -> list[int]:
    """Split total_take across strata proportionally to sizes.

    Floors the exact quotas, then hands the leftover units to the largest
    fractional remainders (ties to the earlier stratum). Each quota differs
    from the exact proportional share by less than 1.
    """
    population = sum(sizes)
    if total_take > population:
        raise DataError(f"requested {total_take} customers, only {population} available")
    exact = [total_take * s / population for s in sizes]
    quotas = [int(e) for e in exact]
    leftover = total_take - sum(quotas)
    by_remainder = sorted(range(len(sizes)), key=lambda i: (quotas[i] - exact[i], i))
    for i in by_remainder[:leftover]:
        quotas[i] += 1
    return quotas


def stratified_sample(
    records: Sequence[LoanRecord],
    customer_count: int,
    seed,
) -> list[LoanRecord]:
    """Sample whole customers, preserving the defaulter share.

    Strata are customer-level default status; every monthly row of a sampled
    customer is kept. Largest-remainder quotas keep the sampled ratio within
    one customer per stratum of the population ratio, at any sample size.
    Same seed, same records -> identical output.
    """
    if customer_count < 0:
        raise ConfigError(f"customer_count must be non-negative, got {customer_count}")
    if customer_count == 0:
        return []
    status = customer_default_status(records)
    strata = [
        sorted(cid for cid, s in status.items() if s == 1),
        sorted(cid for cid, s in status.items() if s == 0),
    ]
    quotas = largest_remainder_quotas([len(s) for s in strata], customer_count)
    rng = np.random.default_rng(seed)
    chosen: set[str] = set()
    for ids, quota in zip(strata, quotas):
        picks = rng.choice(len(ids), size=quota, replace=False)
        chosen.update(ids[i] for i in picks)
    return [r for r in records if r.loanSequenceNumber in chosen]


@dataclass(frozen=True)
class Dataset:
    """Dense numeric view of one vintage's labeled rows.

    categorical_mask marks ordinal-encoded columns; code_counts gives each
    one's vocabulary size (0 for numeric columns) so downstream interpolation
    can round back to valid codes. is_holdout tags evaluation data that the
    resampler must refuse. provenance is only ever non-empty on resampled
    outputs and is stripped before any model sees the rows.
    """

    feature_names: tuple[str, ...]
    rows: np.ndarray
    labels: np.ndarray
    vintage_year: int
    regime: str
    customer_ids: tuple[str, ...]
    categorical_mask: np.ndarray
    code_counts: tuple[int, ...]
    is_holdout: bool = False
    provenance: tuple = ()

    def __post_init__(self):
        n, d = self.rows.shape
        if len(self.labels) != n:
            raise DataError(f"{n} rows but {len(self.labels)} labels")
        if len(self.customer_ids) != n:
            raise DataError(f"{n} rows but {len(self.customer_ids)} customer ids")
        if len(self.feature_names) != d or len(self.categorical_mask) != d or len(self.code_counts) != d:
            raise DataError("feature metadata length does not match column count")
        if not np.isfinite(self.rows).all():
            raise DataError("feature matrix contains non-finite cells; clean first")
        bad = set(np.unique(self.labels)) - {0, 1}
        if bad:
            raise DataError(f"labels must be binary, found {sorted(bad)}")

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def class_counts(self) -> tuple[int, int]:
        pos = int(self.labels.sum())
        return len(self.labels) - pos, pos

    def take(self, indices) -> "Dataset":
        """Row subset (provenance does not survive subsetting)."""
        indices = np.asarray(indices)
        return dataclasses.replace(
            self,
            rows=self.rows[indices],
            labels=self.labels[indices],
            customer_ids=tuple(self.customer_ids[i] for i in indices),
            provenance=(),
        )

    def select_features(self, names: Sequence[str]) -> "Dataset":
        index = {name: j for j, name in enumerate(self.feature_names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise ConfigError(f"unknown features requested: {', '.join(missing)}")
        cols = [index[n] for n in names]
        return dataclasses.replace(
            self,
            feature_names=tuple(names),
            rows=self.rows[:, cols],
            categorical_mask=self.categorical_mask[cols],
            code_counts=tuple(self.code_counts[j] for j in cols),
            provenance=(),
        )

    def with_holdout_flag(self, flag: bool = True) -> "Dataset":
        return dataclasses.replace(self, is_holdout=flag)

    def strip_provenance(self) -> "Dataset":
        if not self.provenance:
            return self
        return dataclasses.replace(self, provenance=())

    def checksum(self) -> str:
        """Content hash of rows, labels, and customer ids (not flags)."""
        h = hashlib.sha256()
        h.update("|".join(self.feature_names).encode())
        h.update(np.ascontiguousarray(self.rows, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype=np.int64).tobytes())
        h.update("|".join(self.customer_ids).encode())
        return h.hexdigest()

    def to_csv(self, path) -> None:
        """Columnar snapshot: customer id, features, label."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["loanSequenceNumber", *self.feature_names, "defaulted"])
            for cid, row, label in zip(self.customer_ids, self.rows, self.labels):
                writer.writerow([cid, *(_fmt_cell(v) for v in row), int(label)])


def _fmt_cell(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


class DatasetEncoder:
    """Freezes a categorical vocabulary and emits dense matrices.

    Nominal columns become dense integer codes from a vocabulary built once
    (on training-side records). The vocabulary always contains the
    "Not Available" category, and values unseen at transform time fall back
    to its code instead of inventing a new one.
    """

    def __init__(self, feature_names: Sequence[str] | None = None):
        names = tuple(feature_names) if feature_names is not None else FEATURE_FIELDS
        dates = [n for n in names if n in DATE_FIELDS]
        if dates:
            raise ConfigError(
                "date fields are excluded from modeling (calendar positions, "
                f"not credit signal): {', '.join(dates)}"
            )
        bad = [
            n
            for n in names
            if n not in FIELD_KINDS or n in ("loanSequenceNumber", "zeroBalanceCode")
        ]
        if bad:
            raise ConfigError(f"not encodable features: {', '.join(bad)}")
        self.feature_names = names
        self.nominal = tuple(n for n in names if FIELD_KINDS[n] == "str")
        self.vocab: dict[str, dict[str, int]] = {}

    def fit(self, records: Sequence[LoanRecord]) -> "DatasetEncoder":
        for name in self.nominal:
            values = {str(r.features[name]) for r in records}
            values.add(NOT_AVAILABLE)
            self.vocab[name] = {v: i for i, v in enumerate(sorted(values))}
        return self

    def transform(self, records: Sequence[LoanRecord]) -> Dataset:
        if not self.vocab and self.nominal:
            raise ConfigError("encoder not fitted")
        if not records:
            raise DataError("cannot encode zero records")
        years = {r.vintageYear for r in records}
        if len(years) != 1:
            raise DataError(f"records span multiple vintages: {sorted(years)}")
        n, d = len(records), len(self.feature_names)
        rows = np.empty((n, d), dtype=np.float64)
        for j, name in enumerate(self.feature_names):
            if name in self.vocab:
                codes = self.vocab[name]
                na = codes[NOT_AVAILABLE]
                col = [codes.get(str(r.features[name]), na) for r in records]
            else:
                col = []
                for r in records:
                    v = r.features[name]
                    if v is None:
                        raise DataError(f"unclean record: {name} missing; run clean() first")
                    col.append(float(v))
            rows[:, j] = col
        year = records[0].vintageYear
        return Dataset(
            feature_names=self.feature_names,
            rows=rows,
            labels=np.array([r.defaulted for r in records], dtype=np.int64),
            vintage_year=year,
            regime=records[0].regime,
            customer_ids=tuple(r.loanSequenceNumber for r in records),
            categorical_mask=np.array([n in self.vocab for n in self.feature_names]),
            code_counts=tuple(len(self.vocab.get(n, ())) for n in self.feature_names),
        )


def encode(records: Sequence[LoanRecord], feature_names: Sequence[str] | None = None) -> Dataset:
    """Fit a fresh encoder on these records and transform them in place."""
    return DatasetEncoder(feature_names).fit(records).transform(records)


def write_diagnostics_csv(diag: Diagnostics, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["counter", "count"])
        writer.writerows(diag.as_rows())
