"""Parser and layout tests for the pipe-delimited vintage files."""

import io

import pytest

from conftest import make_orig, make_perf
from loanbench.errors import ParseError
from loanbench.schema import (
    ORIGINATION_FIELDS,
    PERFORMANCE_FIELDS,
    OriginationRecord,
    PerformanceRecord,
    origination_field_names,
    parse_vintage,
    performance_field_names,
    record_to_line,
    vintage_file_names,
)


def test_layout_field_counts():
    assert len(ORIGINATION_FIELDS) == 27
    assert len(PERFORMANCE_FIELDS) == 23
    assert origination_field_names()[0] == "creditScore"
    assert origination_field_names()[19] == "loanSequenceNumber"
    assert performance_field_names()[0] == "loanSequenceNumber"
    assert performance_field_names()[8] == "zeroBalanceCode"


def test_roundtrip_is_lossless():
    origs = [make_orig(f"F05Q1{i:06d}", creditScore=600.0 + i) for i in range(5)]
    perfs = [
        make_perf("F05Q1000000", zeroBalanceCode="03", zeroBalanceEffectiveDate=200711.0),
        make_perf("F05Q1000001", currentActualUPB=1234.56),
        make_perf("F05Q1000002", actualLossCalculation=-876.54),
    ]
    otext = "\n".join(record_to_line(r) for r in origs)
    ptext = "\n".join(record_to_line(r) for r in perfs)
    parsed = parse_vintage(otext, ptext)
    assert parsed.issues == []
    assert parsed.originations == origs
    assert parsed.performances == perfs


def test_accepts_streams_bytes_and_iterables():
    line = record_to_line(make_orig())
    for source in (line, line.encode(), io.StringIO(line), iter([line])):
        parsed = parse_vintage(source, "")
        assert len(parsed.originations) == 1


def test_blank_numeric_parses_to_none_blank_string_kept():
    parts = record_to_line(make_orig()).split("|")
    parts[0] = ""  # creditScore
    parts[2] = ""  # firstTimeHomeBuyerFlag
    parsed = parse_vintage("|".join(parts), "")
    rec = parsed.originations[0]
    assert rec.creditScore is None
    assert rec.firstTimeHomeBuyerFlag == ""


def test_wrong_field_count_is_an_issue_with_line_number():
    good = record_to_line(make_orig("F05Q1000001"))
    bad = "only|three|fields"
    parsed = parse_vintage("\n".join([good, bad]), "")
    assert len(parsed.originations) == 1
    assert len(parsed.issues) == 1
    assert parsed.issues[0].line == 2
    assert "27" in parsed.issues[0].reason


def test_unparseable_numeric_rejects_line():
    parts = record_to_line(make_orig()).split("|")
    parts[0] = "seven"
    parsed = parse_vintage("|".join(parts), "")
    assert parsed.originations == []
    assert "creditScore" in parsed.issues[0].reason


def test_delinquency_letter_code_means_not_reported():
    parts = record_to_line(make_perf()).split("|")
    parts[3] = "RA"
    parsed = parse_vintage("", "|".join(parts))
    assert len(parsed.performances) == 1
    assert parsed.performances[0].currentLoanDelinquencyStatus is None
    assert parsed.issues == []


def test_unknown_zero_balance_code_rejected():
    for code in ("02", "15", "96", "9"):
        parts = record_to_line(make_perf()).split("|")
        parts[8] = code
        parsed = parse_vintage("", "|".join(parts))
        assert parsed.performances == [], code
        assert "zeroBalanceCode" in parsed.issues[0].reason


def test_known_zero_balance_codes_accepted():
    for code in ("", "01", "03", "06", "09"):
        parts = record_to_line(make_perf()).split("|")
        parts[8] = code
        parsed = parse_vintage("", "|".join(parts))
        assert parsed.performances[0].zeroBalanceCode == code


def test_duplicate_loan_id_rejected_in_origination_only():
    o = record_to_line(make_orig("F05Q1000001"))
    parsed = parse_vintage("\n".join([o, o]), "")
    assert len(parsed.originations) == 1
    assert "duplicate" in parsed.issues[0].reason
    # performance files legitimately repeat the id monthly
    p = record_to_line(make_perf("F05Q1000001"))
    parsed = parse_vintage("", "\n".join([p, p, p]))
    assert len(parsed.performances) == 3
    assert parsed.issues == []


def test_empty_loan_id_rejected():
    parsed = parse_vintage(record_to_line(make_orig("")), "")
    assert parsed.originations == []
    assert "loanSequenceNumber" in parsed.issues[0].reason


def test_strict_mode_raises_with_location():
    bad = "x|y"
    with pytest.raises(ParseError, match="line 1"):
        parse_vintage(bad, "", strict=True)


def test_blank_lines_skipped():
    text = "\n\n" + record_to_line(make_orig()) + "\n\n"
    parsed = parse_vintage(text, "")
    assert len(parsed.originations) == 1
    assert parsed.issues == []


def test_vintage_file_names():
    orig, perf = vintage_file_names(2007)
    assert "2007" in orig and "2007" in perf
    assert orig != perf
