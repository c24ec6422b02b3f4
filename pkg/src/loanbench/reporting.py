"""
reporting.py
------------
Artifact writers: long-form metrics CSV, ranking and comparison tables in
markdown, the timing report, figures, and the run manifest.

Determinism contract: every CSV and markdown artifact except the timing
pair is byte-identical across reruns with the same config and seed. Timing
files carry wall-clock measurements and the figures go through the plotting
library's encoder, so those are flagged deterministic=false in the
manifest rather than promised.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .evaluation import (
    ENTIRE_PERIOD,
    VARIANT_ORIGINAL,
    VARIANT_RESAMPLED,
    ConfusionMatrix,
    MetricsReport,
    compare_variants,
    rank,
)
from .loan_data import REGIME_HIGH, REGIME_LOW, REGIME_MEDIUM
from .models import MODEL_KINDS

METRICS_CSV = "metrics.csv"
TIMING_CSV = "timing.csv"
TIMING_MD = "timing.md"
RANKINGS_MD = "rankings.md"
COMPARISON_CSV = "variant_comparison.csv"
COMPARISON_MD = "variant_comparison.md"
MANIFEST = "manifest.json"
FIGURE_COMPARISON = "variant_comparison.png"
FIGURE_RECALL = "recall_by_regime.png"

_METRIC_COLUMNS = ("precision", "recall", "fpr", "accuracy", "rocAuc")
_SCOPES = (ENTIRE_PERIOD, REGIME_MEDIUM, REGIME_HIGH, REGIME_LOW)


def _cell(value) -> str:
    """Exact, stable text for one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _md_num(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def write_metrics_csv(reports: Sequence[MetricsReport], path: str) -> None:
    """One row per experiment cell. Timing is deliberately not here; it
    lives in the timing files so this one stays rerun-stable."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "vintageYear",
                "regime",
                "model",
                "variant",
                "tp",
                "fp",
                "fn",
                "tn",
                *_METRIC_COLUMNS,
                "converged",
                "holdoutChecksum",
                "error",
            ]
        )
        for r in reports:
            cm = r.confusion
            writer.writerow(
                [
                    r.vintage_year,
                    r.regime,
                    r.model_kind,
                    r.variant,
                    _cell(cm.tp if cm else None),
                    _cell(cm.fp if cm else None),
                    _cell(cm.fn if cm else None),
                    _cell(cm.tn if cm else None),
                    _cell(r.precision),
                    _cell(r.recall),
                    _cell(r.fpr),
                    _cell(r.accuracy),
                    _cell(r.roc_auc),
                    _cell(r.converged),
                    _cell(r.holdout_checksum),
                    _cell(r.error),
                ]
            )


def read_metrics_csv(path: str) -> list[MetricsReport]:
    """Rebuild reports from metrics.csv (timing comes back as None)."""

    def opt_float(s: str):
        return None if s == "" else float(s)

    reports = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"vintageYear", "regime", "model", "variant"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataError(f"{path} is not a metrics CSV")
        for row in reader:
            cm = None
            if row["tp"] != "":
                cm = ConfusionMatrix(
                    tp=int(row["tp"]), fp=int(row["fp"]), fn=int(row["fn"]), tn=int(row["tn"])
                )
            reports.append(
                MetricsReport(
                    model_kind=row["model"],
                    variant=row["variant"],
                    vintage_year=int(row["vintageYear"]),
                    regime=row["regime"],
                    confusion=cm,
                    precision=opt_float(row["precision"]),
                    recall=opt_float(row["recall"]),
                    fpr=opt_float(row["fpr"]),
                    accuracy=opt_float(row["accuracy"]),
                    roc_auc=opt_float(row["rocAuc"]),
                    fit_seconds=None,
                    converged={"true": True, "false": False}.get(row["converged"]),
                    holdout_checksum=row["holdoutChecksum"] or None,
                    error=row["error"] or None,
                )
            )
    return reports


def write_timing_csv(reports: Sequence[MetricsReport], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vintageYear", "regime", "model", "variant", "fitSeconds"])
        for r in reports:
            writer.writerow(
                [r.vintage_year, r.regime, r.model_kind, r.variant, _cell(r.fit_seconds)]
            )


def write_timing_markdown(reports: Sequence[MetricsReport], path: str) -> None:
    """Average fit seconds per model kind and variant, all kinds listed."""
    table: dict[str, dict[str, list[float]]] = {k: {} for k in MODEL_KINDS}
    for r in reports:
        if r.model_kind in table and r.fit_seconds is not None:
            table[r.model_kind].setdefault(r.variant, []).append(r.fit_seconds)
    lines = [
        "# Average training time per model",
        "",
        "Wall-clock seconds per fit, averaged over vintages. Hardware-dependent;",
        "regenerated on every run.",
        "",
        "| Model | Original (s) | Resampled (s) |",
        "|---|---:|---:|",
    ]
    for kind in MODEL_KINDS:
        cells = []
        for variant in (VARIANT_ORIGINAL, VARIANT_RESAMPLED):
            vals = table[kind].get(variant)
            cells.append(f"{float(np.mean(vals)):.3f}" if vals else "")
        lines.append(f"| {kind} | {cells[0]} | {cells[1]} |")
    _write_text(path, lines)


def _ranking_section(reports: Sequence[MetricsReport], scope: str) -> list[str]:
    title = "Entire period" if scope == ENTIRE_PERIOD else f"Regime: {scope}"
    in_scope = [r for r in reports if scope == ENTIRE_PERIOD or r.regime == scope]
    if not in_scope:
        return [f"## {title}", "", f"_No reports cover {scope}; table omitted._", ""]
    by_metric = {m: rank(in_scope, m, scope) for m in ("precision", "recall", "rocAuc")}
    n = len(by_metric["precision"])
    lines = [
        f"## {title}",
        "",
        "| Rank | Model | Precision | Model | Recall | Model | ROC-AUC |",
        "|---:|---|---:|---|---:|---|---:|",
    ]
    for i in range(n):
        p = by_metric["precision"][i]
        r = by_metric["recall"][i]
        a = by_metric["rocAuc"][i]
        lines.append(
            f"| {i + 1} | {p.name} | {_md_num(p.value)} "
            f"| {r.name} | {_md_num(r.value)} "
            f"| {a.name} | {_md_num(a.value)} |"
        )
    lines.append("")
    return lines


def write_ranking_markdown(reports: Sequence[MetricsReport], path: str) -> None:
    """Per-metric rankings side by side, entire period then each regime.

    Predict-only models have no scores, so their ROC-AUC cells are blank
    and they sink to the bottom of that column.
    """
    lines = ["# Model rankings", ""]
    for scope in _SCOPES:
        lines.extend(_ranking_section(reports, scope))
    _write_text(path, lines)


def write_comparison_csv(reports: Sequence[MetricsReport], path: str) -> None:
    table = compare_variants(reports)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", *_METRIC_COLUMNS])
        for variant in (VARIANT_ORIGINAL, VARIANT_RESAMPLED):
            row = table[variant]
            writer.writerow(
                [
                    variant,
                    *(
                        _cell(row[m])
                        for m in ("precision", "recall", "fpr", "accuracy", "roc_auc")
                    ),
                ]
            )


def write_comparison_markdown(reports: Sequence[MetricsReport], path: str) -> None:
    table = compare_variants(reports)
    lines = [
        "# Original vs resampled training",
        "",
        "Grand means over every (model, vintage) cell; undefined cells skipped.",
        "",
        "| Variant | Precision | Recall | FPR | Accuracy | ROC-AUC |",
        "|---|---:|---:|---:|---:|---:|",
    ]
    for variant in (VARIANT_ORIGINAL, VARIANT_RESAMPLED):
        row = table[variant]
        lines.append(
            f"| {variant} | {_md_num(row['precision'])} | {_md_num(row['recall'])} "
            f"| {_md_num(row['fpr'])} | {_md_num(row['accuracy'])} | {_md_num(row['roc_auc'])} |"
        )
    lines.append("")
    _write_text(path, lines)


def render_figures(reports: Sequence[MetricsReport], out_dir: str) -> list[str]:
    """Bar charts of the variant comparison and per-regime recall."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    table = compare_variants(reports)
    metric_names = ("precision", "recall", "roc_auc")
    x = np.arange(len(metric_names))
    fig, ax = plt.subplots(figsize=(6, 4))
    for offset, variant in ((-0.2, VARIANT_ORIGINAL), (0.2, VARIANT_RESAMPLED)):
        vals = [table[variant][m] or 0.0 for m in metric_names]
        ax.bar(x + offset, vals, width=0.38, label=variant)
    ax.set_xticks(x, ["Precision", "Recall", "ROC-AUC"])
    ax.set_ylim(0, 1)
    ax.set_ylabel("Grand mean over models and vintages")
    ax.set_title("Original vs resampled training")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(out_dir, FIGURE_COMPARISON)
    fig.savefig(path)
    plt.close(fig)
    written.append(FIGURE_COMPARISON)

    regimes = [g for g in (REGIME_MEDIUM, REGIME_HIGH, REGIME_LOW) if any(r.regime == g for r in reports)]
    if regimes:
        x = np.arange(len(regimes))
        fig, ax = plt.subplots(figsize=(6, 4))
        for offset, variant in ((-0.2, VARIANT_ORIGINAL), (0.2, VARIANT_RESAMPLED)):
            means = []
            for g in regimes:
                vals = [
                    r.recall
                    for r in reports
                    if r.regime == g and r.variant == variant and r.recall is not None
                ]
                means.append(float(np.mean(vals)) if vals else 0.0)
            ax.bar(x + offset, means, width=0.38, label=variant)
        ax.set_xticks(x, regimes)
        ax.set_ylim(0, 1)
        ax.set_ylabel("Mean holdout recall")
        ax.set_title("Recall by regime")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, FIGURE_RECALL)
        fig.savefig(path)
        plt.close(fig)
        written.append(FIGURE_RECALL)
    return written


# Artifacts whose bytes may differ between identically-seeded runs.
_NONDETERMINISTIC = {TIMING_CSV, TIMING_MD, FIGURE_COMPARISON, FIGURE_RECALL}


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: str,
    file_names: Iterable[str],
    config_hash: str,
    seed: int,
    complete: bool = True,
    failed_cells: int = 0,
) -> dict:
    """Index every artifact with a content hash; flags partial runs."""
    entries = [
        {
            "name": name,
            "sha256": _sha256_file(os.path.join(out_dir, name)),
            "deterministic": name not in _NONDETERMINISTIC,
        }
        for name in sorted(file_names)
    ]
    manifest = {
        "configHash": config_hash,
        "seed": seed,
        "complete": complete,
        "failedCells": failed_cells,
        "libraryVersions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "files": entries,
    }
    try:
        import matplotlib

        manifest["libraryVersions"]["matplotlib"] = matplotlib.__version__
    except ImportError:
        pass
    with open(os.path.join(out_dir, MANIFEST), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def write_run_artifacts(
    reports: Sequence[MetricsReport],
    out_dir: str,
    config_hash: str,
    seed: int,
    extra_files: Iterable[str] = (),
    figures: bool = True,
) -> dict:
    """Write the full artifact set for one run and return the manifest."""
    if not reports:
        raise DataError("no reports to write")
    os.makedirs(out_dir, exist_ok=True)
    written = list(extra_files)
    write_metrics_csv(reports, os.path.join(out_dir, METRICS_CSV))
    written.append(METRICS_CSV)
    write_timing_csv(reports, os.path.join(out_dir, TIMING_CSV))
    written.append(TIMING_CSV)
    write_timing_markdown(reports, os.path.join(out_dir, TIMING_MD))
    written.append(TIMING_MD)
    write_ranking_markdown(reports, os.path.join(out_dir, RANKINGS_MD))
    written.append(RANKINGS_MD)
    both_variants = {r.variant for r in reports} >= {VARIANT_ORIGINAL, VARIANT_RESAMPLED}
    if both_variants:
        write_comparison_csv(reports, os.path.join(out_dir, COMPARISON_CSV))
        written.append(COMPARISON_CSV)
        write_comparison_markdown(reports, os.path.join(out_dir, COMPARISON_MD))
        written.append(COMPARISON_MD)
        if figures:
            written.extend(render_figures(reports, out_dir))
    failed = sum(1 for r in reports if r.error is not None)
    return write_manifest(
        out_dir,
        written,
        config_hash=config_hash,
        seed=seed,
        complete=failed == 0,
        failed_cells=failed,
    )


def _write_text(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        if lines and lines[-1] != "":
            fh.write("\n")
