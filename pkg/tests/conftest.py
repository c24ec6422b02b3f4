"""Shared builders for the test suite."""

import numpy as np
import pytest

from loanbench.evaluation import VARIANT_ORIGINAL, ConfusionMatrix, MetricsReport
from loanbench.loan_data import Dataset
from loanbench.schema import OriginationRecord, PerformanceRecord


def make_report(kind="DT", variant=VARIANT_ORIGINAL, year=2005, regime="High", **over):
    values = dict(
        model_kind=kind,
        variant=variant,
        vintage_year=year,
        regime=regime,
        confusion=ConfusionMatrix(1, 1, 1, 1),
        precision=0.5,
        recall=0.5,
        fpr=0.5,
        accuracy=0.5,
        roc_auc=0.5,
        fit_seconds=0.1,
        converged=True,
        holdout_checksum="x",
    )
    values.update(over)
    return MetricsReport(**values)


def make_orig(lsn="F05Q1000001", **overrides):
    values = {
        "creditScore": 751.0,
        "firstPaymentDate": 200503.0,
        "firstTimeHomeBuyerFlag": "N",
        "maturityDate": 203502.0,
        "metropolitanDivisionOrMSA": "31080",
        "mortgageInsurancePercentage": 0.0,
        "numberOfUnits": 1.0,
        "occupancyStatus": "P",
        "originalCombinedLoanToValue": 80.0,
        "originalDebtToIncomeRatio": 34.0,
        "originalUPB": 240000.0,
        "originalLoanToValue": 78.0,
        "originalInterestRate": 5.25,
        "channel": "R",
        "prepaymentPenaltyMortgageFlag": "N",
        "productType": "FRM",
        "propertyState": "CA",
        "propertyType": "SF",
        "postalCode": "94100",
        "loanSequenceNumber": lsn,
        "loanPurpose": "P",
        "originalLoanTerm": 360.0,
        "numberOfBorrowers": 2.0,
        "sellerName": "BIGBANK",
        "servicerName": "SERVCO",
        "superConformingFlag": "",
        "preHarpLoanSequenceNumber": "",
    }
    values.update(overrides)
    return OriginationRecord(**values)


def make_perf(lsn="F05Q1000001", **overrides):
    values = {
        "loanSequenceNumber": lsn,
        "monthlyReportingPeriod": 200504.0,
        "currentActualUPB": 239000.5,
        "currentLoanDelinquencyStatus": 0.0,
        "loanAge": 1.0,
        "remainingMonthToLegalMaturity": 359.0,
        "repurchaseFlag": "",
        "modificationFlag": "",
        "zeroBalanceCode": "",
        "zeroBalanceEffectiveDate": None,
        "currentInterestRate": 5.25,
        "currentDeferredUPB": 0.0,
        "dueDateOfLastPaidInstallment": None,
        "miRecoveries": None,
        "netSalesProceeds": None,
        "nonMiRecoveries": None,
        "expenses": None,
        "legalCosts": None,
        "maintenanceAndPreservationCosts": None,
        "taxesAndInsurance": None,
        "miscellaneousExpenses": None,
        "actualLossCalculation": None,
        "modificationCost": None,
    }
    values.update(overrides)
    return PerformanceRecord(**values)


def build_dataset(
    rows,
    labels,
    customer_ids=None,
    categorical_mask=None,
    code_counts=None,
    vintage_year=2005,
    regime="High",
    is_holdout=False,
):
    """Dataset from plain arrays with sensible metadata defaults."""
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, d = rows.shape
    if customer_ids is None:
        customer_ids = tuple(f"c{i:05d}" for i in range(n))
    if categorical_mask is None:
        categorical_mask = np.zeros(d, dtype=bool)
    if code_counts is None:
        code_counts = tuple(
            int(rows[:, j].max()) + 1 if categorical_mask[j] else 0 for j in range(d)
        )
    return Dataset(
        feature_names=tuple(f"f{j}" for j in range(d)),
        rows=rows,
        labels=labels,
        vintage_year=vintage_year,
        regime=regime,
        customer_ids=tuple(customer_ids),
        categorical_mask=np.asarray(categorical_mask, dtype=bool),
        code_counts=tuple(code_counts),
        is_holdout=is_holdout,
    )


def gaussian_blobs(n_per_class=60, d=4, gap=3.0, seed=0):
    """Two separated Gaussian clouds; labels 1 for the shifted cloud."""
    rng = np.random.default_rng(seed)
    X = np.vstack(
        [rng.normal(size=(n_per_class, d)) - gap / 2, rng.normal(size=(n_per_class, d)) + gap / 2]
    )
    y = np.array([0] * n_per_class + [1] * n_per_class, dtype=np.int64)
    perm = rng.permutation(len(y))
    return X[perm], y[perm]


@pytest.fixture
def blob_dataset():
    X, y = gaussian_blobs(seed=3)
    return build_dataset(X, y)
