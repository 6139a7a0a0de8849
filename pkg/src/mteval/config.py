"""Run configuration: one JSON document describing a full scoring run.

Schema (relative paths resolve against the config file's directory)::

    {
      "dataset": "mqm-zh-en.tsv",
      "dataset_format": "tsv",               // optional; inferred from suffix
      "mode": "reference_based",             // or "source_based"
      "metrics": ["scm", "wmd", "bleu"],
      "reg_base": true,
      "lowercase": false,
      "compositionality_full_matrix": false,
      "similarity": {"threshold": 0.1, "exponent": 2.0, "top_k": 100},
      "resources": {
        "static_embeddings": "vectors.txt",
        "contextual_records": "contextual.tsv",
        "wordpiece_vocab": "wordpiece.txt",
        "external_scores": "external.tsv"
      },
      "split": {"ratio": 0.8, "seed": 7},    // seed is mandatory
      "mlp": {"hidden": 100, "learning_rate": 0.001, "batch_size": 32,
              "max_epochs": 500, "patience": 25, "val_fraction": 0.1},
      "output_dir": "runs/mqm"               // optional
    }

Validation is exhaustive: every problem found is reported in one error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from mteval.errors import ConfigError
from mteval.metrics import METRICS, MODES, MetricConfig

__all__ = ["RunConfig", "load_run_config"]

_TOP_KEYS = {
    "dataset",
    "dataset_format",
    "mode",
    "metrics",
    "reg_base",
    "lowercase",
    "compositionality_full_matrix",
    "similarity",
    "resources",
    "split",
    "mlp",
    "output_dir",
}
_SIMILARITY_KEYS = {"threshold", "exponent", "top_k"}
_RESOURCE_KEYS = {"static_embeddings", "contextual_records", "wordpiece_vocab", "external_scores"}
_SPLIT_KEYS = {"ratio", "seed"}
_MLP_KEYS = {"hidden", "learning_rate", "batch_size", "max_epochs", "patience", "val_fraction"}


@dataclass
class RunConfig:
    dataset_path: Path
    seed: int
    metric_config: MetricConfig
    dataset_format: str | None = None
    static_path: Path | None = None
    contextual_path: Path | None = None
    wordpiece_vocab_path: Path | None = None
    external_scores_path: Path | None = None
    split_ratio: float = 0.8
    mlp_options: dict = field(default_factory=dict)
    output_dir: Path | None = None


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: top-level value must be an object")
    return _parse(payload, base_dir=path.parent, where=str(path))


def _parse(payload: dict, base_dir: Path, where: str) -> RunConfig:
    problems: list[str] = []

    unknown = set(payload) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown keys: {sorted(unknown)}")
    for key, allowed in (
        ("similarity", _SIMILARITY_KEYS),
        ("resources", _RESOURCE_KEYS),
        ("split", _SPLIT_KEYS),
        ("mlp", _MLP_KEYS),
    ):
        section = payload.get(key, {})
        if not isinstance(section, dict):
            problems.append(f"'{key}' must be an object")
        else:
            bad = set(section) - allowed
            if bad:
                problems.append(f"unknown keys under '{key}': {sorted(bad)}")

    dataset = payload.get("dataset")
    if not isinstance(dataset, str) or not dataset:
        problems.append("'dataset' (path) is required")

    mode = payload.get("mode")
    if mode not in MODES:
        problems.append(f"'mode' must be one of {MODES}, got {mode!r}")

    metrics = payload.get("metrics")
    if not isinstance(metrics, list) or not all(isinstance(m, str) for m in metrics):
        problems.append("'metrics' must be a list of metric names")
        metrics = []
    unknown_metrics = [m for m in metrics if m not in METRICS]
    if unknown_metrics:
        problems.append(f"unknown metrics: {unknown_metrics}; known: {sorted(METRICS)}")

    split = payload.get("split") if isinstance(payload.get("split"), dict) else {}
    seed = split.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool):
        problems.append("'split.seed' (integer) is mandatory; runs must be reproducible")
        seed = 0
    ratio = split.get("ratio", 0.8)
    if not isinstance(ratio, (int, float)) or not 0 < ratio < 1:
        problems.append(f"'split.ratio' must lie in (0, 1), got {ratio!r}")
        ratio = 0.8

    fmt = payload.get("dataset_format")
    if fmt is not None and fmt not in ("tsv", "json"):
        problems.append(f"'dataset_format' must be 'tsv' or 'json', got {fmt!r}")

    for flag in ("reg_base", "lowercase", "compositionality_full_matrix"):
        if flag in payload and not isinstance(payload[flag], bool):
            problems.append(f"'{flag}' must be a boolean")

    similarity = payload.get("similarity") if isinstance(payload.get("similarity"), dict) else {}
    mlp_options = dict(payload.get("mlp")) if isinstance(payload.get("mlp"), dict) else {}
    resources = payload.get("resources") if isinstance(payload.get("resources"), dict) else {}
    for key, value in resources.items():
        if key in _RESOURCE_KEYS and (not isinstance(value, str) or not value):
            problems.append(f"'resources.{key}' must be a nonempty path string")

    metric_config = None
    if not problems:
        try:
            metric_config = MetricConfig(
                mode=mode,
                metrics=tuple(metrics),
                reg_base=payload.get("reg_base", True),
                lowercase=payload.get("lowercase", False),
                compositionality_full_matrix=payload.get("compositionality_full_matrix", False),
                similarity_threshold=float(similarity.get("threshold", 0.1)),
                similarity_exponent=float(similarity.get("exponent", 2.0)),
                similarity_top_k=int(similarity.get("top_k", 100)),
            )
        except ConfigError as exc:
            problems.append(str(exc))

    if problems:
        raise ConfigError(f"{where}: invalid configuration:\n  - " + "\n  - ".join(problems))

    def resolve(key: str) -> Path | None:
        value = resources.get(key)
        return (base_dir / value) if value else None

    return RunConfig(
        dataset_path=base_dir / dataset,
        seed=seed,
        metric_config=metric_config,
        dataset_format=fmt,
        static_path=resolve("static_embeddings"),
        contextual_path=resolve("contextual_records"),
        wordpiece_vocab_path=resolve("wordpiece_vocab"),
        external_scores_path=resolve("external_scores"),
        split_ratio=float(ratio),
        mlp_options=mlp_options,
        output_dir=(base_dir / payload["output_dir"]) if payload.get("output_dir") else None,
    )
