"""
cli.py
------
Command-line front end.

Verbs:
    run        full benchmark: parse, join, clean, sample, encode, optional
               feature selection, fit both training variants, write artifacts
    generate   write synthetic vintage file pairs in the real layout
    report     re-render tables and figures from an existing metrics.csv
    inspect    print row/customer/default-rate stats per vintage and regime

Exit codes: 0 success, 1 configuration error, 2 data error, 3 run finished
but some experiment cells failed (artifacts flagged incomplete).

Any config key can be overridden with repeated `--set key=value` flags
(dotted paths reach nested keys); the data directory falls back to
$LOANBENCH_DATA_DIR when neither flag nor config provides one.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .config import (
    DATA_DIR_ENV,
    ExperimentConfig,
    apply_overrides,
    config_from_dict,
    derive_seed,
)
from .errors import ConfigError, DataError, LoanBenchError, PartialFailure
from .evaluation import run_experiment
from .feature_selection import GAParams, run_feature_selection, write_verdicts_csv
from .loan_data import (
    Dataset,
    assign_regime,
    clean,
    encode,
    join_and_label,
    stratified_sample,
)
from .reporting import write_run_artifacts
from .schema import parse_vintage
from .synthetic import (
    REGIME_DEFAULT_RATES,
    SyntheticSpec,
    default_rate_for_regime,
    generate_synthetic,
)

DIAGNOSTICS_CSV = "diagnostics.csv"


def _stage(name: str, fn, *args, **kwargs):
    """Run one pipeline stage; failures come back tagged with the stage."""
    try:
        return fn(*args, **kwargs)
    except LoanBenchError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a JSON config file")
    p.add_argument("--data-dir", help=f"vintage file directory (or ${DATA_DIR_ENV})")
    p.add_argument("--output-dir", help="artifact directory")
    p.add_argument("--seed", type=int, help="root seed")
    p.add_argument(
        "--vintages",
        help="comma-separated vintage years, e.g. 2005,2006",
    )
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (dotted paths allowed); repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loanbench",
        description="Loan-default benchmark: twelve classifiers, original vs resampled training.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="execute the full benchmark")
    _add_common_flags(run_p)
    run_p.add_argument("--jobs", type=int, help="concurrent experiment cells")
    run_p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    gen_p = sub.add_parser("generate", help="write synthetic vintage files")
    _add_common_flags(gen_p)
    gen_p.add_argument("--customers", type=int, default=2000)
    gen_p.add_argument("--rows-per-customer", type=int, default=45)
    gen_p.add_argument(
        "--default-rate",
        type=float,
        help="per-row default rate; default is the vintage regime's preset "
        + json.dumps(REGIME_DEFAULT_RATES),
    )
    gen_p.add_argument("--feature-count", type=int, default=4)

    rep_p = sub.add_parser("report", help="re-render tables from a metrics CSV")
    rep_p.add_argument("--from", dest="source", default=os.path.join("out", "metrics.csv"))
    rep_p.add_argument("--output-dir", default="out")
    rep_p.add_argument("--no-figures", action="store_true")

    ins_p = sub.add_parser("inspect", help="print per-vintage dataset stats")
    _add_common_flags(ins_p)
    return parser


def _parse_vintage_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--vintages must be comma-separated years, got {text!r}")


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
    else:
        doc = {}
    doc = apply_overrides(doc, args.overrides)
    # dedicated flags beat both the file and --set
    if args.vintages:
        doc["vintages"] = _parse_vintage_list(args.vintages)
    if args.data_dir:
        doc["dataDir"] = args.data_dir
    if args.output_dir:
        doc["outputDir"] = args.output_dir
    if args.seed is not None:
        doc["seed"] = args.seed
    if getattr(args, "jobs", None):
        doc["jobs"] = args.jobs
    return config_from_dict(doc)


def load_vintage_datasets(cfg: ExperimentConfig) -> tuple[list[Dataset], list[dict]]:
    """parse -> join -> clean -> sample -> encode, per vintage.

    Returns the encoded datasets plus one diagnostics row-dict per vintage.
    """
    datasets = []
    diag_rows = []
    for year, orig_path, perf_path in cfg.vintage_paths():
        with open(orig_path, encoding="utf-8") as orig_fh, open(
            perf_path, encoding="utf-8"
        ) as perf_fh:
            parsed = _stage("parse", parse_vintage, orig_fh, perf_fh)
        joined, jdiag = _stage(
            "join", join_and_label, parsed.originations, parsed.performances, year
        )
        cleaned, cdiag = _stage("clean", clean, joined)
        diag = jdiag.merge(cdiag)
        customers = len({r.loanSequenceNumber for r in cleaned})
        take = min(cfg.customer_sample, customers)
        sampled = _stage("sample", stratified_sample, cleaned, take, cfg.sample_seed(year))
        data = _stage("encode", encode, sampled)
        datasets.append(data)
        row = {"vintageYear": year, "parseIssues": len(parsed.issues)}
        row.update({name: count for name, count in diag.as_rows()})
        row.update(
            {
                "sampledCustomers": take,
                "sampledRows": data.n_rows,
                "defaultRows": int(data.labels.sum()),
            }
        )
        diag_rows.append(row)
    return datasets, diag_rows


def _write_diagnostics(diag_rows: list[dict], path: str) -> None:
    columns = list(diag_rows[0])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in diag_rows:
            writer.writerow([row[c] for c in columns])


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    cfg.check_files_exist()
    os.makedirs(cfg.output_dir, exist_ok=True)

    datasets, diag_rows = load_vintage_datasets(cfg)
    extra_files = []
    _write_diagnostics(diag_rows, os.path.join(cfg.output_dir, DIAGNOSTICS_CSV))
    extra_files.append(DIAGNOSTICS_CSV)

    if cfg.feature_selection.enabled:
        fs = cfg.feature_selection
        reduced = []
        for data in datasets:
            data2, verdicts = _stage(
                "feature-select",
                run_feature_selection,
                data,
                ga_params=GAParams(**fs.ga) if fs.ga else None,
                seed=cfg.feature_selection_seed(data.vintage_year),
                corr_threshold=fs.corr_threshold,
                importance_threshold=fs.importance_threshold,
            )
            name = f"feature_verdicts_{data.vintage_year}.csv"
            write_verdicts_csv(verdicts, os.path.join(cfg.output_dir, name))
            extra_files.append(name)
            reduced.append(data2)
        datasets = reduced

    reports = _stage(
        "experiment",
        run_experiment,
        datasets,
        cfg.models,
        cfg.resample_config(),
        cfg.split_plan(),
        jobs=cfg.jobs,
    )
    manifest = _stage(
        "report",
        write_run_artifacts,
        reports,
        cfg.output_dir,
        config_hash=cfg.content_hash(),
        seed=cfg.seed,
        extra_files=extra_files,
        figures=not args.no_figures,
    )
    n_files = len(manifest["files"])
    print(f"wrote {n_files} artifact(s) to {cfg.output_dir}")
    failed = [r for r in reports if r.error is not None]
    if failed:
        for r in failed:
            print(
                f"cell failed: vintage {r.vintage_year} {r.model_kind} ({r.variant}): {r.error}",
                file=sys.stderr,
            )
        raise PartialFailure(
            f"{len(failed)} of {len(reports)} experiment cells failed; "
            "artifacts written but flagged incomplete"
        )
    return 0


def cmd_generate(args) -> int:
    data_dir = args.data_dir or os.environ.get(DATA_DIR_ENV) or "data"
    if not args.vintages:
        raise ConfigError("generate needs --vintages")
    seed = args.seed if args.seed is not None else 0
    for year in _parse_vintage_list(args.vintages):
        regime = assign_regime(year)
        rate = args.default_rate if args.default_rate is not None else default_rate_for_regime(regime)
        spec = SyntheticSpec(
            customer_count=args.customers,
            rows_per_customer=args.rows_per_customer,
            default_rate=rate,
            feature_count=args.feature_count,
            seed=derive_seed(seed, "generate", year),
        )
        orig_path, perf_path = generate_synthetic(spec, year, data_dir)
        print(f"vintage {year} ({regime}, rate {rate}): {orig_path}, {perf_path}")
    return 0


def cmd_report(args) -> int:
    from .reporting import read_metrics_csv

    if not os.path.isfile(args.source):
        raise DataError(f"metrics file not found: {args.source}")
    reports = read_metrics_csv(args.source)
    source_hash = f"re-rendered from {os.path.basename(args.source)}"
    write_run_artifacts(
        reports,
        args.output_dir,
        config_hash=source_hash,
        seed=0,
        figures=not args.no_figures,
    )
    print(f"re-rendered {len(reports)} report rows into {args.output_dir}")
    return 0


def cmd_inspect(args) -> int:
    """Stats on the full cleaned data, before any sampling."""
    cfg = _config_from_args(args)
    cfg.check_files_exist()
    print(
        f"{'vintage':>7} {'regime':>7} {'rows':>9} {'customers':>9} "
        f"{'defaults':>8} {'rate%':>8} {'dropped':>8} {'issues':>7}"
    )
    by_regime: dict[str, list[int]] = {}
    for year, orig_path, perf_path in cfg.vintage_paths():
        with open(orig_path, encoding="utf-8") as orig_fh, open(
            perf_path, encoding="utf-8"
        ) as perf_fh:
            parsed = _stage("parse", parse_vintage, orig_fh, perf_fh)
        joined, jdiag = _stage(
            "join", join_and_label, parsed.originations, parsed.performances, year
        )
        cleaned, cdiag = _stage("clean", clean, joined)
        diag = jdiag.merge(cdiag)
        regime = assign_regime(year)
        n = len(cleaned)
        d = sum(r.defaulted for r in cleaned)
        customers = len({r.loanSequenceNumber for r in cleaned})
        rate = 100.0 * d / n if n else 0.0
        print(
            f"{year:>7} {regime:>7} {n:>9} {customers:>9} {d:>8} {rate:>8.4f} "
            f"{diag.rows_dropped_missing_critical:>8} {len(parsed.issues):>7}"
        )
        agg = by_regime.setdefault(regime, [0, 0])
        agg[0] += n
        agg[1] += d
    print()
    for regime, (n, d) in sorted(by_regime.items()):
        rate = 100.0 * d / n if n else 0.0
        print(f"regime {regime}: {n} rows, {d} default rows, rate {rate:.4f}%")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run,
        "generate": cmd_generate,
        "report": cmd_report,
        "inspect": cmd_inspect,
    }
    try:
        return handlers[args.verb](args)
    except ConfigError as exc:
        print(f"loanbench: config error: {exc}", file=sys.stderr)
        return 1
    except PartialFailure as exc:
        print(f"loanbench: partial failure: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"loanbench: data error: {exc}", file=sys.stderr)
        return 2
    except LoanBenchError as exc:
        print(f"loanbench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
