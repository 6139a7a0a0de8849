"""Evaluation protocol: correlations to gold, ablation, cross-lingual transfer.

Everything is judged by Spearman's rank correlation.  `evaluate_dataset`
reports each feature's test correlation plus the RegEMT and Reg-base
ensembles and their pairwise correlation matrix; `ablation` repeatedly
drops the most redundant feature and refits; `cross_lingual_eval` fits on
one dataset's train split and reports on another's test split.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mteval.corpus import Dataset
from mteval.ensemble import FeatureMatrix, predict, select_model
from mteval.errors import ConfigError
from mteval.metrics import REG_BASE_FEATURES, MetricConfig, Resources
from mteval.pipeline import dataset_features
from mteval.stats import spearman

__all__ = [
    "AblationCurve",
    "AblationStep",
    "CorrelationReport",
    "EvaluationResult",
    "ablation",
    "correlation_report",
    "cross_lingual_eval",
    "evaluate_dataset",
]

logger = logging.getLogger(__name__)


@dataclass
class CorrelationReport:
    """Pairwise Spearman matrix of features plus each one's rho to gold."""

    names: list[str]
    matrix: dict[tuple[str, str], float]
    to_gold: dict[str, float]

    def rho(self, a: str, b: str) -> float:
        return self.matrix[(a, b)]

    def write_matrix_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("metric\t" + "\t".join(self.names) + "\n")
            for a in self.names:
                cells = "\t".join(f"{self.matrix[(a, b)]:.6f}" for b in self.names)
                handle.write(f"{a}\t{cells}\n")

    def write_to_gold_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("metric\tspearman_to_gold\n")
            for name in self.names:
                handle.write(f"{name}\t{self.to_gold[name]:.6f}\n")


def correlation_report(features: FeatureMatrix, gold: list[float]) -> CorrelationReport:
    """All pairwise feature correlations and each feature's rho to gold."""
    if features.n != len(gold):
        raise ValueError("gold length does not match feature rows")
    names = list(features.feature_names)
    columns = {name: features.rows[:, i] for i, name in enumerate(names)}
    matrix: dict[tuple[str, str], float] = {(name, name): 1.0 for name in names}
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            rho = spearman(columns[a], columns[b])
            matrix[(a, b)] = rho
            matrix[(b, a)] = rho
    to_gold = {name: spearman(columns[name], gold) for name in names}
    return CorrelationReport(names=names, matrix=matrix, to_gold=to_gold)


@dataclass
class AblationStep:
    step: int
    eliminated: str | None  # None on the step-0 full-ensemble record
    remaining_count: int
    test_rho: float


@dataclass
class AblationCurve:
    steps: list[AblationStep]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["step", "eliminated", "remaining", "test_rho"])
            for step in self.steps:
                writer.writerow([step.step, step.eliminated or "", step.remaining_count, f"{step.test_rho:.6f}"])


def ablation(
    train: FeatureMatrix,
    test: FeatureMatrix,
    gold_train: list[float],
    gold_test: list[float],
    feature_names: list[str] | None = None,
    *,
    seed: int,
    sources: list[str] | None = None,
    mlp_options: dict | None = None,
) -> AblationCurve:
    """Iteratively drop the feature most correlated with any other and refit.

    Pairwise |rho| is measured on the train split only; ties go to the
    lexicographically smaller name.  Step 0 records the full ensemble, and
    the curve ends once the single-feature model has been recorded.
    """
    remaining = list(feature_names) if feature_names is not None else list(train.feature_names)
    if len(remaining) < 2:
        raise ValueError("ablation needs at least 2 features")

    def fit_and_score(names: list[str]) -> float:
        model = select_model(train.select(names), gold_train, seed=seed, sources=sources, mlp_options=mlp_options)
        return float(spearman(predict(model, test.select(names)), gold_test))

    steps = [AblationStep(step=0, eliminated=None, remaining_count=len(remaining), test_rho=fit_and_score(remaining))]
    step_no = 1
    while len(remaining) > 1:
        victim = _most_redundant(train, remaining)
        remaining.remove(victim)
        steps.append(
            AblationStep(
                step=step_no,
                eliminated=victim,
                remaining_count=len(remaining),
                test_rho=fit_and_score(remaining),
            )
        )
        logger.debug("ablation step %d: dropped %s (%d left)", step_no, victim, len(remaining))
        step_no += 1
    return AblationCurve(steps=steps)


def _most_redundant(train: FeatureMatrix, remaining: list[str]) -> str:
    """The feature with the largest |rho| to any other remaining feature."""
    columns = {name: train.rows[:, train.feature_names.index(name)] for name in remaining}
    worst: dict[str, float] = {name: -np.inf for name in remaining}
    for i, a in enumerate(remaining):
        for b in remaining[i + 1 :]:
            rho = abs(spearman(columns[a], columns[b]))
            worst[a] = max(worst[a], rho)
            worst[b] = max(worst[b], rho)
    return min(remaining, key=lambda name: (-worst[name], name))


@dataclass
class EvaluationResult:
    """Test-split correlations of every feature and both ensembles."""

    report: CorrelationReport
    n_train: int
    n_test: int
    regemt_kind: str
    reg_base_kind: str
    flags: dict[str, dict[str, str]]


def evaluate_dataset(
    dataset: Dataset,
    config: MetricConfig,
    resources: Resources,
    seed: int,
    train_ratio: float = 0.8,
    threads: int = 1,
    mlp_options: dict | None = None,
) -> EvaluationResult:
    """Fit RegEMT (all features) and Reg-base (surface features) on the train
    split, then report test-split Spearman correlations for every feature and
    both ensemble prediction columns, plus their pairwise matrix."""
    if not config.reg_base:
        raise ConfigError("evaluate reports Reg-base and needs reg_base features enabled")
    split = dataset_features(dataset, config, resources, seed, train_ratio, threads)
    regemt = select_model(split.train, split.gold_train, seed=seed, sources=split.train_sources, mlp_options=mlp_options)
    base_names = list(REG_BASE_FEATURES)
    reg_base = select_model(
        split.train.select(base_names), split.gold_train, seed=seed, sources=split.train_sources, mlp_options=mlp_options
    )
    predictions = predict(regemt, split.test)
    base_predictions = predict(reg_base, split.test.select(base_names))
    extended = FeatureMatrix(
        np.hstack([split.test.rows, predictions[:, None], base_predictions[:, None]]),
        list(split.test.feature_names) + ["RegEMT", "Reg-base"],
        list(split.test.segment_ids),
    )
    report = correlation_report(extended, split.gold_test)
    return EvaluationResult(
        report=report,
        n_train=split.train.n,
        n_test=split.test.n,
        regemt_kind=regemt.kind,
        reg_base_kind=reg_base.kind,
        flags=split.flags,
    )


def cross_lingual_eval(
    fit_dataset: Dataset,
    eval_dataset: Dataset,
    config: MetricConfig,
    fit_resources: Resources,
    eval_resources: Resources,
    *,
    seed: int,
    train_ratio: float = 0.8,
    threads: int = 1,
    mlp_options: dict | None = None,
) -> float:
    """RegEMT transfer: fit on one language pair, report on another.

    The ensemble is fit on fit_dataset's train split and its Spearman rho
    is reported on eval_dataset's test split.  Both datasets must yield the
    same feature columns (predict refuses misaligned names).
    """
    fit_split = dataset_features(fit_dataset, config, fit_resources, seed, train_ratio, threads)
    eval_split = dataset_features(eval_dataset, config, eval_resources, seed, train_ratio, threads)
    model = select_model(
        fit_split.train, fit_split.gold_train, seed=seed, sources=fit_split.train_sources, mlp_options=mlp_options
    )
    return float(spearman(predict(model, eval_split.test), eval_split.gold_test))
