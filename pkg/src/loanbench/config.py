"""
config.py
---------
Run configuration: a single JSON document, environment fallback for the
data directory, and the seed-splitting scheme.

Grammar (all keys optional unless marked; camelCase, matching the artifact
column style):

    {
      "dataDir": "data",            // else $LOANBENCH_DATA_DIR, else "data"
      "outputDir": "out",
      "vintages": [2005, 2006],     // required
      "customerSample": 2000,
      "holdoutFraction": 0.30,
      "seed": 0,
      "jobs": 1,
      "resample": {"k": 5, "targetRatio": 1.0},
      "featureSelection": {
        "enabled": false,
        "corrThreshold": 0.1,
        "importanceThreshold": 1e-6,
        "ga": {"population_size": 30, "generations": 30}
      },
      "models": [                   // default: all twelve kinds, default params
        {"kind": "RF", "hyperParams": {"n_trees": 100}}
      ]
    }

Seed scheme: every stage derives its own seed from the root as
derive_seed(root, *labels) = first 8 bytes of sha256("root/label/..."),
so any stage can be re-run in isolation and reordering one stage never
perturbs another. Labels used: ("split",), ("resample",), ("sample", year),
("generate", year), ("featureSelection", year), ("model", index, kind).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

from .errors import ConfigError, DataError
from .evaluation import SplitPlan
from .loan_data import assign_regime
from .models import MODEL_KINDS, ClassifierSpec
from .resampling import ResampleConfig
from .schema import vintage_file_names

DATA_DIR_ENV = "LOANBENCH_DATA_DIR"

_TOP_KEYS = {
    "dataDir",
    "outputDir",
    "vintages",
    "customerSample",
    "holdoutFraction",
    "seed",
    "jobs",
    "resample",
    "featureSelection",
    "models",
}


def derive_seed(root_seed: int, *labels) -> int:
    """Stable 63-bit stage seed from the root seed and a label path."""
    text = "/".join([str(root_seed)] + [str(x) for x in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class FeatureSelectionConfig:
    enabled: bool = False
    corr_threshold: float = 0.1
    importance_threshold: float = 1e-6
    ga: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    vintages: tuple[int, ...]
    data_dir: str = "data"
    output_dir: str = "out"
    customer_sample: int = 2000
    holdout_fraction: float = 0.30
    seed: int = 0
    jobs: int = 1
    resample_k: int = 5
    target_ratio: float = 1.0
    feature_selection: FeatureSelectionConfig = field(default_factory=FeatureSelectionConfig)
    models: tuple[ClassifierSpec, ...] = ()

    def __post_init__(self):
        if not self.vintages:
            raise ConfigError("config needs at least one vintage year")
        for year in self.vintages:
            assign_regime(year)  # rejects years outside the covered range
        if self.customer_sample < 1:
            raise ConfigError(f"customerSample must be >= 1, got {self.customer_sample}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if not self.models:
            object.__setattr__(self, "models", default_model_specs(self.seed))

    def split_plan(self) -> SplitPlan:
        return SplitPlan(
            holdout_fraction=self.holdout_fraction,
            stratified=True,
            seed=derive_seed(self.seed, "split"),
        )

    def resample_config(self) -> ResampleConfig:
        return ResampleConfig(
            k=self.resample_k,
            target_ratio=self.target_ratio,
            seed=derive_seed(self.seed, "resample"),
        )

    def sample_seed(self, vintage_year: int) -> int:
        return derive_seed(self.seed, "sample", vintage_year)

    def feature_selection_seed(self, vintage_year: int) -> int:
        return derive_seed(self.seed, "featureSelection", vintage_year)

    def vintage_paths(self) -> list[tuple[int, str, str]]:
        out = []
        for year in self.vintages:
            orig_name, perf_name = vintage_file_names(year)
            out.append(
                (year, os.path.join(self.data_dir, orig_name), os.path.join(self.data_dir, perf_name))
            )
        return out

    def check_files_exist(self) -> None:
        """Fail fast before any work starts."""
        missing = [
            path
            for _, orig, perf in self.vintage_paths()
            for path in (orig, perf)
            if not os.path.isfile(path)
        ]
        if missing:
            raise DataError("missing vintage file(s): " + ", ".join(missing))

    def content_hash(self) -> str:
        doc = {
            "vintages": list(self.vintages),
            "dataDir": self.data_dir,
            "customerSample": self.customer_sample,
            "holdoutFraction": self.holdout_fraction,
            "seed": self.seed,
            "resample": {"k": self.resample_k, "targetRatio": self.target_ratio},
            "featureSelection": {
                "enabled": self.feature_selection.enabled,
                "corrThreshold": self.feature_selection.corr_threshold,
                "importanceThreshold": self.feature_selection.importance_threshold,
                "ga": self.feature_selection.ga,
            },
            "models": [
                {"kind": s.kind, "hyperParams": dict(s.hyper_params)} for s in self.models
            ],
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def default_model_specs(root_seed: int) -> tuple[ClassifierSpec, ...]:
    """All twelve kinds with their default hyper-parameters."""
    return tuple(
        ClassifierSpec(kind=kind, hyper_params={}, seed=derive_seed(root_seed, "model", i, kind))
        for i, kind in enumerate(MODEL_KINDS)
    )


def _build_models(doc_models, root_seed: int) -> tuple[ClassifierSpec, ...]:
    specs = []
    for i, entry in enumerate(doc_models):
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ConfigError(f"models[{i}] must be an object with a 'kind' key")
        unknown = set(entry) - {"kind", "hyperParams"}
        if unknown:
            raise ConfigError(f"models[{i}]: unknown key(s) {sorted(unknown)}")
        specs.append(
            ClassifierSpec(
                kind=entry["kind"],
                hyper_params=entry.get("hyperParams", {}),
                seed=derive_seed(root_seed, "model", i, entry["kind"]),
            )
        )
    return tuple(specs)


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    if "vintages" not in doc:
        raise ConfigError("config is missing required key 'vintages'")

    resample = doc.get("resample", {})
    bad = set(resample) - {"k", "targetRatio"}
    if bad:
        raise ConfigError(f"resample: unknown key(s) {sorted(bad)}")
    fs_doc = doc.get("featureSelection", {})
    bad = set(fs_doc) - {"enabled", "corrThreshold", "importanceThreshold", "ga"}
    if bad:
        raise ConfigError(f"featureSelection: unknown key(s) {sorted(bad)}")

    seed = int(doc.get("seed", 0))
    data_dir = doc.get("dataDir") or os.environ.get(DATA_DIR_ENV) or "data"
    try:
        cfg = ExperimentConfig(
            vintages=tuple(int(y) for y in doc["vintages"]),
            data_dir=data_dir,
            output_dir=doc.get("outputDir", "out"),
            customer_sample=int(doc.get("customerSample", 2000)),
            holdout_fraction=float(doc.get("holdoutFraction", 0.30)),
            seed=seed,
            jobs=int(doc.get("jobs", 1)),
            resample_k=int(resample.get("k", 5)),
            target_ratio=float(resample.get("targetRatio", 1.0)),
            feature_selection=FeatureSelectionConfig(
                enabled=bool(fs_doc.get("enabled", False)),
                corr_threshold=float(fs_doc.get("corrThreshold", 0.1)),
                importance_threshold=float(fs_doc.get("importanceThreshold", 1e-6)),
                ga=dict(fs_doc.get("ga", {})),
            ),
            models=_build_models(doc["models"], seed) if "models" in doc else (),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    return config_from_dict(doc)


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply `key=value` / `a.b=value` pairs onto a config dict.

    Values parse as JSON when possible, else stay strings, so
    `--set seed=7`, `--set resample.targetRatio=0.5`, and
    `--set dataDir=/tmp/d` all work.
    """
    out = json.loads(json.dumps(doc))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return out
