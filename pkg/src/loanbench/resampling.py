"""
resampling.py
-------------
Synthetic minority oversampling. New points are drawn on the segments
between a minority row and one of its k nearest minority neighbors:
s = x + u * (nb - x), u uniform in [0, 1).

Neighbor search is exact brute force over minority rows only. Distances use
a z-scored copy of the numeric columns (minority-row statistics) so loan
scale differences do not swamp the geometry; ordinal categorical codes enter
distances unscaled, and interpolated categorical values are rounded back to
the nearest valid code afterwards. Interpolation itself always happens in
the original encoded space.

Every synthetic row keeps (source row, neighbor row, u) provenance so the
segment property can be audited per run; the provenance is stripped before
any model trains. Holdout-flagged datasets are refused outright.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, HoldoutLeakageError
from .loan_data import Dataset


@dataclass(frozen=True)
class ResampleConfig:
    """k neighbors, desired minority/majority ratio, and the seed."""

    k: int = 5
    target_ratio: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ConfigError(f"target_ratio must be in (0, 1], got {self.target_ratio}")


@dataclass(frozen=True)
class NeighborIndex:
    """k-nearest minority neighbors per minority row.

    minority_rows[i] is a dataset row index; neighbors[i] holds the dataset
    row indices of its nearest minority peers, ascending by distance with
    ties broken toward the lower row index, never including the row itself.
    """

    minority_rows: np.ndarray
    neighbors: list[np.ndarray]
    minority_label: int


@dataclass(frozen=True)
class SyntheticProvenance:
    """How one synthetic row came to be (all three fields auditable)."""

    output_row: int
    source_row: int
    neighbor_row: int
    u: float


def _minority_label(labels: np.ndarray) -> int:
    pos = int(labels.sum())
    neg = len(labels) - pos
    return 1 if pos <= neg else 0


def _distance_view(data: Dataset, rows: np.ndarray) -> np.ndarray:
    """Minority rows with numeric columns z-scored (minority statistics)."""
    Z = data.rows[rows].astype(np.float64).copy()
    numeric = ~data.categorical_mask
    if numeric.any():
        block = Z[:, numeric]
        mu = block.mean(axis=0)
        sigma = block.std(axis=0)
        sigma = np.where(sigma == 0.0, 1.0, sigma)
        Z[:, numeric] = (block - mu) / sigma
    return Z


def knn_minority(data: Dataset, k: int) -> NeighborIndex:
    """Exact k nearest neighbors within the minority class.

    With m minority rows and k > m - 1, lists clamp to length m - 1. Fewer
    than two minority rows leaves no segments to interpolate on, so that is
    an error.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    label = _minority_label(data.labels)
    rows = np.flatnonzero(data.labels == label)
    m = len(rows)
    if m < 2:
        raise DataError(f"SMOTE undefined with {m} minority row(s); need at least 2")
    Z = _distance_view(data, rows)
    diff = Z[:, None, :] - Z[None, :, :]
    D = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(D, np.inf)
    order = np.argsort(D, axis=1, kind="stable")
    width = min(k, m - 1)
    neighbors = [rows[order[i, :width]] for i in range(m)]
    return NeighborIndex(minority_rows=rows, neighbors=neighbors, minority_label=label)


def smote(data: Dataset, cfg: ResampleConfig) -> Dataset:
    """Oversample the minority class to cfg.target_ratio of the majority.

    Returns data unchanged when the ratio is already met. Original rows are
    never altered or reordered; synthetic rows are appended with labels of
    the minority class, fresh synthetic customer ids, and full provenance.
    Generation walks the minority rows round-robin, drawing one random
    neighbor and one u per synthetic point.
    """
    if data.is_holdout:
        raise HoldoutLeakageError(
            "refusing to resample a holdout-flagged dataset; the holdout "
            "must stay exactly as observed"
        )
    label = _minority_label(data.labels)
    n_min = int((data.labels == label).sum())
    n_maj = len(data.labels) - n_min
    needed = int(round(cfg.target_ratio * n_maj)) - n_min
    if needed <= 0:
        return data

    index = knn_minority(data, cfg.k)
    rng = np.random.default_rng(cfg.seed)
    m = len(index.minority_rows)
    width = len(index.neighbors[0])

    src_slots = np.tile(np.arange(m), needed // m + 1)[:needed]
    sources = index.minority_rows[src_slots]
    slot = rng.integers(0, width, size=needed)
    neighbor_table = np.stack(index.neighbors)  # (m, width), aligned with minority_rows
    nb = neighbor_table[src_slots, slot]
    u = rng.random(needed)

    Xs = data.rows[sources]
    Xn = data.rows[nb]
    synth = Xs + u[:, None] * (Xn - Xs)
    for j in np.flatnonzero(data.categorical_mask):
        hi = max(data.code_counts[j] - 1, 0)
        synth[:, j] = np.clip(np.rint(synth[:, j]), 0, hi)

    n0 = data.n_rows
    provenance = tuple(
        SyntheticProvenance(
            output_row=n0 + i,
            source_row=int(sources[i]),
            neighbor_row=int(nb[i]),
            u=float(u[i]),
        )
        for i in range(needed)
    )
    return dataclasses.replace(
        data,
        rows=np.vstack([data.rows, synth]),
        labels=np.concatenate([data.labels, np.full(needed, label, dtype=data.labels.dtype)]),
        customer_ids=data.customer_ids + tuple(f"synthetic-{i:06d}" for i in range(needed)),
        provenance=provenance,
    )


def verify_segment_property(resampled: Dataset, rtol: float = 1e-9) -> bool:
    """Audit every synthetic row against its recorded source/neighbor.

    Numeric columns must match x + u * (nb - x) within rtol; categorical
    columns must equal the rounded interpolation. Raises on any violation
    so the failure names the offending row.
    """
    numeric = ~resampled.categorical_mask
    for p in resampled.provenance:
        x = resampled.rows[p.source_row]
        nbr = resampled.rows[p.neighbor_row]
        s = resampled.rows[p.output_row]
        expected = x + p.u * (nbr - x)
        scale = np.maximum(np.abs(expected), 1.0)
        if numeric.any() and (np.abs(s[numeric] - expected[numeric]) > rtol * scale[numeric]).any():
            raise DataError(f"synthetic row {p.output_row} is off its generating segment")
        if (~numeric).any():
            cats = np.flatnonzero(~numeric)
            hi = np.array([max(resampled.code_counts[j] - 1, 0) for j in cats])
            want = np.clip(np.rint(expected[cats]), 0, hi)
            if (s[cats] != want).any():
                raise DataError(f"synthetic row {p.output_row} has mis-rounded codes")
        if not 0.0 <= p.u <= 1.0:
            raise DataError(f"synthetic row {p.output_row} has u outside [0, 1]")
    return True


def write_synthetic_audit_csv(resampled: Dataset, path) -> None:
    """Synthetic rows with their provenance, for offline inspection."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["outputRow", "sourceRow", "neighborRow", "u", *resampled.feature_names])
        for p in resampled.provenance:
            writer.writerow(
                [p.output_row, p.source_row, p.neighbor_row, repr(p.u)]
                + [repr(float(v)) for v in resampled.rows[p.output_row]]
            )
