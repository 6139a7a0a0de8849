"""Dataset-level scoring: load resources, score every segment, build features.

Bridges the per-segment metrics and the ensemble/evaluation layers: builds
vocabularies and similarity matrices over a dataset, runs `score_segment`
across segments (optionally threaded), substitutes placeholders for
unscorable cells, and assembles the rectangular feature matrix with
Reg-base and external columns appended.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from mteval.corpus import Dataset, Segment, average_judgements, split_by_source
from mteval.embeddings import decontextualize, group_records, load_contextual, load_static
from mteval.ensemble import FeatureMatrix
from mteval.errors import ConfigError, DataError
from mteval.metrics import (
    METRICS,
    REG_BASE_FEATURES,
    MetricConfig,
    MetricVector,
    Resources,
    compute_placeholders,
    needed_similarity_keys,
    reg_base_features,
    score_segment,
    validate_resources,
)
from mteval.tokenization import load_wordpiece_vocab, whitespace_tokenize, wordpiece_tokenize
from mteval.vsm import build_similarity_matrix, build_vocabulary

__all__ = [
    "RESERVED_FEATURE_NAMES",
    "SplitFeatures",
    "apply_placeholders",
    "assemble_features",
    "build_resources",
    "dataset_features",
    "load_external_scores",
    "score_dataset",
    "score_features",
]

logger = logging.getLogger(__name__)

#: Column names reserved for the ensembles in reports; external-scores
#: files may not reuse them.
RESERVED_FEATURE_NAMES = ("RegEMT", "Reg-base")


def load_external_scores(path: str | Path) -> dict[str, dict[str, float]]:
    """Read precomputed per-segment scores to join as extra feature columns.

    TSV with header ``segment_id`` + one column per feature; returns
    feature name -> segment id -> value, preserving column order.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty external-scores file") from None
        if not header or header[0] != "segment_id":
            raise DataError(f"{path}: first column must be 'segment_id', got {header[:1]}")
        names = header[1:]
        if not names:
            raise DataError(f"{path}: no feature columns")
        if len(set(names)) != len(names):
            raise DataError(f"{path}: duplicate feature columns")
        for name in names:
            if name in RESERVED_FEATURE_NAMES:
                raise ConfigError(f"{path}: column name {name!r} is reserved for the ensembles")
        scores: dict[str, dict[str, float]] = {name: {} for name in names}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            segment_id = row[0]
            if segment_id in scores[names[0]]:
                raise DataError(f"{path}:{lineno}: duplicate segment id {segment_id!r}")
            for name, cell in zip(names, row[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-numeric value {cell!r} in column {name!r}") from None
                if not math.isfinite(value):
                    raise DataError(f"{path}:{lineno}: non-finite value in column {name!r}")
                scores[name][segment_id] = value
    return scores


def build_resources(
    config: MetricConfig,
    dataset: Dataset,
    static_path: str | Path | None = None,
    contextual_path: str | Path | None = None,
    wordpiece_vocab_path: str | Path | None = None,
    external_scores_path: str | Path | None = None,
) -> Resources:
    """Load files and precompute vocabularies / similarity matrices for a run.

    Only resources the configured metrics actually use are loaded; missing
    required paths are reported together as one ConfigError.
    """
    needed: set[str] = set()
    for name in config.metrics:
        needed |= METRICS[name].resources
    problems = []
    if "static" in needed and static_path is None:
        problems.append("static_embeddings path required by: " + _wanting(config, "static"))
    if ("wordpiece" in needed or config.reg_base) and wordpiece_vocab_path is None:
        problems.append("wordpiece_vocab path required by reg_base or: " + _wanting(config, "wordpiece"))
    if "contextual" in needed and contextual_path is None:
        problems.append("contextual_records path required by: " + _wanting(config, "contextual"))
    if problems:
        raise ConfigError("configuration problems:\n  - " + "\n  - ".join(problems))

    resources = Resources()
    if wordpiece_vocab_path is not None:
        resources.wp_vocab = load_wordpiece_vocab(wordpiece_vocab_path)

    def words(text: str) -> list[str]:
        return whitespace_tokenize(text.lower() if config.lowercase else text)

    def pieces(text: str) -> list[str]:
        return wordpiece_tokenize(text.lower() if config.lowercase else text, resources.wp_vocab)

    if "static" in needed:
        resources.static_store = load_static(static_path)
        resources.vocab_words = build_vocabulary(_side_documents(dataset, words))

    wants_decon = any("decontextualized" in name for name in config.metrics)
    if "contextual" in needed:
        records = load_contextual(contextual_path)
        resources.contextual_groups = group_records(records)
        group_docs = [
            [record.token for record in resources.contextual_groups[key]]
            for key in sorted(resources.contextual_groups)
        ]
        resources.contextual_vocab = build_vocabulary(group_docs)
        if wants_decon:
            resources.decon_store = decontextualize(records)
            resources.vocab_pieces = build_vocabulary(_side_documents(dataset, pieces))

    for space, order in sorted(needed_similarity_keys(config)):
        vocab = resources.vocab_words if space == "words" else resources.vocab_pieces
        store = resources.static_store if space == "words" else resources.decon_store
        logger.info("building %s-order similarity matrix over %d %s terms", order, len(vocab.terms), space)
        resources.sims[(space, order)] = build_similarity_matrix(
            vocab,
            store,
            order=order,
            threshold=config.similarity_threshold,
            exponent=config.similarity_exponent,
            top_k=config.similarity_top_k,
        )

    if external_scores_path is not None:
        resources.external = load_external_scores(external_scores_path)
        native = set(config.metrics) | set(REG_BASE_FEATURES)
        clash = native & set(resources.external)
        if clash:
            raise ConfigError(f"external score columns collide with native features: {sorted(clash)}")
    return resources


def _wanting(config: MetricConfig, resource: str) -> str:
    return ", ".join(m for m in config.metrics if resource in METRICS[m].resources)


def _side_documents(dataset: Dataset, tokenizer) -> list[list[str]]:
    """One document per segment side, the df unit for every vocabulary."""
    documents = []
    for segment in dataset.segments:
        documents.append(tokenizer(segment.source))
        if segment.reference is not None:
            documents.append(tokenizer(segment.reference))
        documents.append(tokenizer(segment.hypothesis))
    return documents


def score_dataset(
    dataset: Dataset,
    config: MetricConfig,
    resources: Resources,
    threads: int = 1,
    placeholders: dict[str, float] | None = None,
) -> list[MetricVector]:
    """Score every segment, in dataset order regardless of thread count."""

    def one(segment: Segment) -> MetricVector:
        return score_segment(segment, config, resources, placeholders)

    if threads <= 1:
        return [one(segment) for segment in dataset.segments]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, dataset.segments))


def apply_placeholders(vectors: list[MetricVector], placeholders: dict[str, float]) -> None:
    """Replace NaN cells of unscorable metrics with their placeholder values."""
    for vector in vectors:
        for name, value in vector.scores.items():
            if math.isnan(value):
                vector.scores[name] = placeholders[name]


def assemble_features(
    dataset: Dataset, config: MetricConfig, resources: Resources, vectors: list[MetricVector]
) -> FeatureMatrix:
    """Native metric columns + Reg-base surface columns + external columns."""
    names = list(config.metrics)
    if config.reg_base:
        names += list(REG_BASE_FEATURES)
    external_names = list(resources.external)
    rows = []
    for segment, vector in zip(dataset.segments, vectors):
        row = [vector.scores[name] for name in config.metrics]
        if config.reg_base:
            row.extend(reg_base_features(segment, resources.wp_vocab, config.mode, config.lowercase))
        for name in external_names:
            try:
                row.append(resources.external[name][segment.id])
            except KeyError:
                raise DataError(
                    f"external column {name!r} has no score for segment {segment.id!r}"
                ) from None
        rows.append(row)
    if not names + external_names:
        raise ConfigError("no features configured: enable metrics, reg_base, or external scores")
    return FeatureMatrix(rows, names + external_names, [s.id for s in dataset.segments])


def score_features(
    dataset: Dataset, config: MetricConfig, resources: Resources, threads: int = 1
) -> tuple[FeatureMatrix, dict[str, dict[str, str]], dict[str, float]]:
    """Split-free scoring for score dumps.

    Placeholders come from the worst value observed over the whole scored
    set (there is no train split here).  Returns the feature matrix, the
    per-segment flags, and the placeholders used.
    """
    validate_resources(config, resources, dataset.segments)
    vectors = score_dataset(dataset, config, resources, threads)
    placeholders = compute_placeholders(vectors, list(config.metrics))
    apply_placeholders(vectors, placeholders)
    features = assemble_features(dataset, config, resources, vectors)
    flags = {v.segment_id: dict(v.flags) for v in vectors if v.flags}
    return features, flags, placeholders


@dataclass
class SplitFeatures:
    """Feature matrices and gold scores of one dataset, split by source."""

    train: FeatureMatrix
    test: FeatureMatrix
    gold_train: list[float]
    gold_test: list[float]
    train_sources: list[str]
    flags: dict[str, dict[str, str]] = field(default_factory=dict)
    placeholders: dict[str, float] = field(default_factory=dict)


def dataset_features(
    dataset: Dataset,
    config: MetricConfig,
    resources: Resources,
    seed: int,
    train_ratio: float = 0.8,
    threads: int = 1,
) -> SplitFeatures:
    """Score a dataset and partition the features along the train/test split.

    Unscorable cells are filled with the worst value observed on the train
    split only, so nothing about the test distribution leaks into training.
    """
    validate_resources(config, resources, dataset.segments)
    missing_gold = [s.id for s in dataset.segments if not s.judgements]
    if missing_gold:
        raise DataError(f"segments without judgements cannot be evaluated: {missing_gold[:5]}")
    train_ds, test_ds = split_by_source(dataset, train_ratio, seed)
    vectors = score_dataset(dataset, config, resources, threads)
    by_id = {v.segment_id: v for v in vectors}
    train_vectors = [by_id[s.id] for s in train_ds.segments]
    placeholders = compute_placeholders(train_vectors, list(config.metrics))
    apply_placeholders(vectors, placeholders)
    features = assemble_features(dataset, config, resources, vectors)
    row_of = {segment_id: i for i, segment_id in enumerate(features.segment_ids)}
    train = features.take_rows([row_of[s.id] for s in train_ds.segments])
    test = features.take_rows([row_of[s.id] for s in test_ds.segments])
    return SplitFeatures(
        train=train,
        test=test,
        gold_train=[average_judgements(s).value for s in train_ds.segments],
        gold_test=[average_judgements(s).value for s in test_ds.segments],
        train_sources=[s.source for s in train_ds.segments],
        flags={v.segment_id: dict(v.flags) for v in vectors if v.flags},
        placeholders=placeholders,
    )
