"""
schema.py
---------
Record layout and parser for per-vintage loan files.

The dataset ships as one pair of pipe-delimited text files per origination
vintage year: an origination file (one row per loan) and a performance file
(one row per loan per monthly reporting period). Neither file carries a
header row, so column meaning is positional. This module pins that layout.

Field order
    Origination: 27 fields, in the order listed in ORIGINATION_FIELDS.
    Performance: 23 fields, in the order listed in PERFORMANCE_FIELDS.

Value conventions
    - Blank ("") means "not reported". Blank numerics parse to None and are
      resolved later by cleaning; blank strings are kept as "".
    - A non-blank numeric field that does not parse as a number makes the
      whole line malformed. Malformed lines never yield records: they are
      skipped and reported with their line number (or raised in strict mode).
    - zeroBalanceCode is restricted to {"", "01", "03", "06", "09"}; any
      other code marks the line malformed.
    - currentLoanDelinquencyStatus is numeric here; servicer letter codes
      (e.g. "R") are treated as not reported.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, fields as dataclass_fields
from typing import IO, Iterable

from .errors import ParseError

# Reasons a loan's balance went to zero. Codes 03/06/09 are the
# default-related terminations; "" means the loan is still active.
ZERO_BALANCE_CODES = ("", "01", "03", "06", "09")
DEFAULT_ZERO_BALANCE_CODES = ("03", "06", "09")

# On-disk naming for a vintage's file pair, relative to the data directory.
ORIGINATION_FILE_TEMPLATE = "sample_orig_{year}.txt"
PERFORMANCE_FILE_TEMPLATE = "sample_svcg_{year}.txt"


def vintage_file_names(year: int) -> tuple[str, str]:
    """(origination, performance) file names for one vintage year."""
    return (
        ORIGINATION_FILE_TEMPLATE.format(year=year),
        PERFORMANCE_FILE_TEMPLATE.format(year=year),
    )

# (name, type) pairs in file column order. Type "num" parses to float|None,
# "str" is kept verbatim (stripped).
ORIGINATION_FIELDS = (
    ("creditScore", "num"),
    ("firstPaymentDate", "num"),
    ("firstTimeHomeBuyerFlag", "str"),
    ("maturityDate", "num"),
    ("metropolitanDivisionOrMSA", "str"),
    ("mortgageInsurancePercentage", "num"),
    ("numberOfUnits", "num"),
    ("occupancyStatus", "str"),
    ("originalCombinedLoanToValue", "num"),
    ("originalDebtToIncomeRatio", "num"),
    ("originalUPB", "num"),
    ("originalLoanToValue", "num"),
    ("originalInterestRate", "num"),
    ("channel", "str"),
    ("prepaymentPenaltyMortgageFlag", "str"),
    ("productType", "str"),
    ("propertyState", "str"),
    ("propertyType", "str"),
    ("postalCode", "str"),
    ("loanSequenceNumber", "str"),
    ("loanPurpose", "str"),
    ("originalLoanTerm", "num"),
    ("numberOfBorrowers", "num"),
    ("sellerName", "str"),
    ("servicerName", "str"),
    ("superConformingFlag", "str"),
    ("preHarpLoanSequenceNumber", "str"),
)

PERFORMANCE_FIELDS = (
    ("loanSequenceNumber", "str"),
    ("monthlyReportingPeriod", "num"),
    ("currentActualUPB", "num"),
    ("currentLoanDelinquencyStatus", "num"),
    ("loanAge", "num"),
    ("remainingMonthToLegalMaturity", "num"),
    ("repurchaseFlag", "str"),
    ("modificationFlag", "str"),
    ("zeroBalanceCode", "str"),
    ("zeroBalanceEffectiveDate", "num"),
    ("currentInterestRate", "num"),
    ("currentDeferredUPB", "num"),
    ("dueDateOfLastPaidInstallment", "num"),
    ("miRecoveries", "num"),
    ("netSalesProceeds", "num"),
    ("nonMiRecoveries", "num"),
    ("expenses", "num"),
    ("legalCosts", "num"),
    ("maintenanceAndPreservationCosts", "num"),
    ("taxesAndInsurance", "num"),
    ("miscellaneousExpenses", "num"),
    ("actualLossCalculation", "num"),
    ("modificationCost", "num"),
)

# Calendar fields (YYYYMM). Excluded from every feature matrix: the pipeline
# does no time-series modeling, so they would only invite overfitting.
DATE_FIELDS = frozenset(
    {
        "firstPaymentDate",
        "maturityDate",
        "monthlyReportingPeriod",
        "dueDateOfLastPaidInstallment",
        "zeroBalanceEffectiveDate",
    }
)

# Join key; never a feature.
KEY_FIELDS = frozenset({"loanSequenceNumber"})

# Origination fields whose absence makes a loan unusable (dropped by
# cleaning rather than imputed).
CRITICAL_ORIGINATION_FIELDS = (
    "creditScore",
    "originalLoanToValue",
    "originalDebtToIncomeRatio",
    "originalInterestRate",
)

_ORIG_NAMES = tuple(name for name, _ in ORIGINATION_FIELDS)
_PERF_NAMES = tuple(name for name, _ in PERFORMANCE_FIELDS)


@dataclass(slots=True)
class OriginationRecord:
    creditScore: float | None
    firstPaymentDate: float | None
    firstTimeHomeBuyerFlag: str
    maturityDate: float | None
    metropolitanDivisionOrMSA: str
    mortgageInsurancePercentage: float | None
    numberOfUnits: float | None
    occupancyStatus: str
    originalCombinedLoanToValue: float | None
    originalDebtToIncomeRatio: float | None
    originalUPB: float | None
    originalLoanToValue: float | None
    originalInterestRate: float | None
    channel: str
    prepaymentPenaltyMortgageFlag: str
    productType: str
    propertyState: str
    propertyType: str
    postalCode: str
    loanSequenceNumber: str
    loanPurpose: str
    originalLoanTerm: float | None
    numberOfBorrowers: float | None
    sellerName: str
    servicerName: str
    superConformingFlag: str
    preHarpLoanSequenceNumber: str


@dataclass(slots=True)
class PerformanceRecord:
    loanSequenceNumber: str
    monthlyReportingPeriod: float | None
    currentActualUPB: float | None
    currentLoanDelinquencyStatus: float | None
    loanAge: float | None
    remainingMonthToLegalMaturity: float | None
    repurchaseFlag: str
    modificationFlag: str
    zeroBalanceCode: str
    zeroBalanceEffectiveDate: float | None
    currentInterestRate: float | None
    currentDeferredUPB: float | None
    dueDateOfLastPaidInstallment: float | None
    miRecoveries: float | None
    netSalesProceeds: float | None
    nonMiRecoveries: float | None
    expenses: float | None
    legalCosts: float | None
    maintenanceAndPreservationCosts: float | None
    taxesAndInsurance: float | None
    miscellaneousExpenses: float | None
    actualLossCalculation: float | None
    modificationCost: float | None


@dataclass(slots=True)
class ParseIssue:
    """One malformed input line, identified by file role and line number."""

    file: str  # "origination" | "performance"
    line: int  # 1-based
    reason: str

    def __str__(self) -> str:
        return f"{self.file} line {self.line}: {self.reason}"


@dataclass(slots=True)
class ParsedVintage:
    originations: list[OriginationRecord]
    performances: list[PerformanceRecord]
    issues: list[ParseIssue]


def _parse_lines(
    stream: IO[str] | Iterable[str],
    layout: tuple[tuple[str, str], ...],
    record_type: type,
    file_role: str,
    issues: list[ParseIssue],
    strict: bool,
) -> list:
    n_fields = len(layout)
    check_zbc = file_role == "performance"
    records = []
    seen_ids: set[str] = set() if file_role == "origination" else None

    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line:
            continue
        parts = line.split("|")
        if len(parts) != n_fields:
            issue = ParseIssue(
                file_role,
                line_no,
                f"expected {n_fields} fields, found {len(parts)}",
            )
            if strict:
                raise ParseError(str(issue))
            issues.append(issue)
            continue

        values = []
        bad_reason = None
        for (name, kind), raw in zip(layout, parts):
            raw = raw.strip()
            if kind == "str":
                values.append(raw)
                continue
            if raw == "":
                values.append(None)
                continue
            try:
                values.append(float(raw))
            except ValueError:
                if name == "currentLoanDelinquencyStatus":
                    # Servicer letter codes: not reported, not malformed.
                    values.append(None)
                else:
                    bad_reason = f"field {name!r}: unparseable numeric {raw!r}"
                    break

        if bad_reason is None:
            rec = record_type(*values)
            lsn = rec.loanSequenceNumber
            if not lsn:
                bad_reason = "empty loanSequenceNumber"
            elif seen_ids is not None:
                if lsn in seen_ids:
                    bad_reason = f"duplicate loanSequenceNumber {lsn!r}"
                else:
                    seen_ids.add(lsn)
            if bad_reason is None and check_zbc and rec.zeroBalanceCode not in ZERO_BALANCE_CODES:
                bad_reason = f"unknown zeroBalanceCode {rec.zeroBalanceCode!r}"

        if bad_reason is not None:
            issue = ParseIssue(file_role, line_no, bad_reason)
            if strict:
                raise ParseError(str(issue))
            issues.append(issue)
            continue

        records.append(rec)
    return records


def parse_vintage(
    origination_file: IO[str] | Iterable[str] | str | bytes,
    performance_file: IO[str] | Iterable[str] | str | bytes,
    strict: bool = False,
) -> ParsedVintage:
    """Parse one vintage's origination and performance streams.

    Accepts open text streams, raw str/bytes content, or iterables of lines.
    Every well-formed line yields one record; malformed lines (wrong field
    count, unparseable numerics, blank or duplicate loanSequenceNumber,
    unknown zeroBalanceCode) are collected into ``issues`` with their line
    number, or raised as ParseError when ``strict`` is set.
    """
    issues: list[ParseIssue] = []
    orig = _parse_lines(
        _as_lines(origination_file),
        ORIGINATION_FIELDS,
        OriginationRecord,
        "origination",
        issues,
        strict,
    )
    perf = _parse_lines(
        _as_lines(performance_file),
        PERFORMANCE_FIELDS,
        PerformanceRecord,
        "performance",
        issues,
        strict,
    )
    return ParsedVintage(orig, perf, issues)


def _as_lines(source):
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def record_to_line(record) -> str:
    """Render a record back to its pipe-delimited file form."""
    parts = []
    for f in dataclass_fields(record):
        value = getattr(record, f.name)
        if value is None:
            parts.append("")
        elif isinstance(value, float):
            parts.append(_format_number(value))
        else:
            parts.append(str(value))
    return "|".join(parts)


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return format(value, ".6f").rstrip("0").rstrip(".")


def origination_field_names() -> tuple[str, ...]:
    return _ORIG_NAMES


def performance_field_names() -> tuple[str, ...]:
    return _PERF_NAMES
