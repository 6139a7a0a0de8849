"""Regressive ensembles over metric features (RegEMT and Reg-base).

Features are z-standardized, then a linear least-squares model and a
one-hidden-layer perceptron are fit against gold judgements; whichever
scores the higher Spearman correlation on a source-disjoint validation
subset is refit on the full training data.  Reg-base is the same machinery
restricted to the four surface length features.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from mteval._rng import Xorshift64Star, round_half_up
from mteval.stats import spearman

__all__ = [
    "EnsembleModel",
    "FeatureMatrix",
    "MlpParams",
    "StandardizationParams",
    "fit_linear",
    "fit_mlp",
    "load_model",
    "mlp_forward",
    "mlp_gradients",
    "mlp_loss",
    "predict",
    "save_model",
    "select_model",
    "standardize_apply",
    "standardize_fit",
]

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

#: Spearman differences below this are ties, resolved in favour of linear.
SELECTION_TIE = 1e-9


@dataclass
class FeatureMatrix:
    """n segments x m features, with names and ids pinned to the rows."""

    rows: np.ndarray
    feature_names: list[str]
    segment_ids: list[str]

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        n, m = self.rows.shape
        if len(self.feature_names) != m:
            raise ValueError(f"{len(self.feature_names)} names for {m} feature columns")
        if len(self.segment_ids) != n:
            raise ValueError(f"{len(self.segment_ids)} ids for {n} rows")
        if len(set(self.feature_names)) != m:
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("feature matrix contains non-finite cells")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    def select(self, names: list[str]) -> FeatureMatrix:
        """Column-subset copy in the order of ``names``."""
        indices = [self.feature_names.index(name) for name in names]
        return FeatureMatrix(self.rows[:, indices].copy(), list(names), list(self.segment_ids))

    def take_rows(self, indices: list[int]) -> FeatureMatrix:
        return FeatureMatrix(
            self.rows[indices].copy(),
            list(self.feature_names),
            [self.segment_ids[i] for i in indices],
        )


@dataclass
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean and std must be 1-d arrays of equal length")
        if np.any(self.std <= 0):
            raise ValueError("std must be strictly positive")

    @classmethod
    def identity(cls, m: int) -> StandardizationParams:
        return cls(np.zeros(m), np.ones(m))


@dataclass
class MlpParams:
    """Weights of the one-hidden-layer perceptron (ReLU hidden, linear out)."""

    w1: np.ndarray  # (m, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float


@dataclass
class EnsembleModel:
    kind: str  # "linear" | "mlp"
    feature_names: list[str]
    standardization: StandardizationParams
    weights: np.ndarray | None = None  # linear
    intercept: float | None = None  # linear
    mlp: MlpParams | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "linear" and (self.weights is None or self.intercept is None):
            raise ValueError("linear model needs weights and intercept")
        if self.kind == "mlp" and self.mlp is None:
            raise ValueError("mlp model needs its parameter block")


def standardize_fit(features: FeatureMatrix) -> StandardizationParams:
    """Per-feature mean and population std; constant columns get std 1."""
    if features.n < 2:
        raise ValueError("standardization needs at least 2 rows")
    rows = features.rows
    constant = np.all(rows == rows[0], axis=0)
    mean = np.where(constant, rows[0], rows.mean(axis=0))
    std = np.where(constant, 1.0, rows.std(axis=0))
    std = np.where(std > 0, std, 1.0)
    return StandardizationParams(mean=mean, std=std)


def standardize_apply(features: FeatureMatrix, params: StandardizationParams) -> FeatureMatrix:
    if features.m != len(params.mean):
        raise ValueError(f"matrix has {features.m} features, params cover {len(params.mean)}")
    rows = (features.rows - params.mean) / params.std
    return FeatureMatrix(rows, list(features.feature_names), list(features.segment_ids))


def fit_linear(
    features: FeatureMatrix,
    gold: list[float],
    standardization: StandardizationParams | None = None,
    damping: float = 1e-8,
) -> EnsembleModel:
    """Least squares min ||Xw + b - y||^2 by damped normal equations.

    ``features`` should already be standardized; pass the params used so
    predict can reapply them (identity is assumed otherwise).
    """
    y = np.asarray(gold, dtype=float)
    if features.n != len(y):
        raise ValueError("gold length does not match feature rows")
    if features.n < 2:
        raise ValueError("linear fit needs at least 2 rows")
    design = np.hstack([features.rows, np.ones((features.n, 1))])
    gram = design.T @ design + damping * np.eye(features.m + 1)
    solution = np.linalg.solve(gram, design.T @ y)
    return EnsembleModel(
        kind="linear",
        feature_names=list(features.feature_names),
        standardization=standardization or StandardizationParams.identity(features.m),
        weights=solution[:-1],
        intercept=float(solution[-1]),
    )


def mlp_forward(params: MlpParams, rows: np.ndarray) -> np.ndarray:
    hidden = np.maximum(rows @ params.w1 + params.b1, 0.0)
    return hidden @ params.w2 + params.b2


def mlp_loss(params: MlpParams, rows: np.ndarray, y: np.ndarray) -> float:
    delta = mlp_forward(params, rows) - y
    return float(np.mean(delta * delta))


def mlp_gradients(params: MlpParams, rows: np.ndarray, y: np.ndarray) -> MlpParams:
    """Analytic MSE gradients (ReLU subgradient 0 at the kink)."""
    pre = rows @ params.w1 + params.b1
    hidden = np.maximum(pre, 0.0)
    delta = (hidden @ params.w2 + params.b2 - y) * (2.0 / len(y))
    grad_w2 = hidden.T @ delta
    grad_b2 = float(delta.sum())
    d_hidden = np.outer(delta, params.w2) * (pre > 0)
    grad_w1 = rows.T @ d_hidden
    grad_b1 = d_hidden.sum(axis=0)
    return MlpParams(w1=grad_w1, b1=grad_b1, w2=grad_w2, b2=grad_b2)


def fit_mlp(
    features: FeatureMatrix,
    gold: list[float],
    seed: int,
    standardization: StandardizationParams | None = None,
    hidden: int = 100,
    learning_rate: float = 1e-3,
    batch_size: int = 32,
    max_epochs: int = 500,
    patience: int = 25,
    val_fraction: float = 0.1,
) -> EnsembleModel:
    """Adam-trained MLP with early stopping on an internal validation slice.

    Deterministic for a fixed seed: initialization, the validation split,
    and every epoch's batch order all come from one seeded generator, and
    the best-validation parameters are restored at the end.
    """
    y = np.asarray(gold, dtype=float)
    rows = features.rows
    n, m = rows.shape
    if n != len(y):
        raise ValueError("gold length does not match feature rows")
    if n < 10:
        raise ValueError("mlp fit needs at least 10 rows; use the linear model below that")

    rng = np.random.default_rng(seed)
    limit1 = np.sqrt(6.0 / (m + hidden))
    limit2 = np.sqrt(6.0 / (hidden + 1))
    params = MlpParams(
        w1=rng.uniform(-limit1, limit1, size=(m, hidden)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-limit2, limit2, size=hidden),
        b2=0.0,
    )

    n_val = max(1, round_half_up(val_fraction * n))
    order = rng.permutation(n)
    val_idx, fit_idx = order[:n_val], order[n_val:]
    rows_fit, y_fit = rows[fit_idx], y[fit_idx]
    rows_val, y_val = rows[val_idx], y[val_idx]

    moment1 = MlpParams(np.zeros_like(params.w1), np.zeros_like(params.b1), np.zeros_like(params.w2), 0.0)
    moment2 = MlpParams(np.zeros_like(params.w1), np.zeros_like(params.b1), np.zeros_like(params.w2), 0.0)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    best = copy.deepcopy(params)
    best_val = np.inf
    stale = 0
    for _ in range(max_epochs):
        batch_order = rng.permutation(len(fit_idx))
        for start in range(0, len(fit_idx), batch_size):
            chunk = batch_order[start : start + batch_size]
            grads = mlp_gradients(params, rows_fit[chunk], y_fit[chunk])
            step += 1
            for name in ("w1", "b1", "w2", "b2"):
                g = getattr(grads, name)
                m1 = beta1 * getattr(moment1, name) + (1 - beta1) * g
                m2 = beta2 * getattr(moment2, name) + (1 - beta2) * (g * g)
                setattr(moment1, name, m1)
                setattr(moment2, name, m2)
                m1_hat = m1 / (1 - beta1**step)
                m2_hat = m2 / (1 - beta2**step)
                update = learning_rate * m1_hat / (np.sqrt(m2_hat) + eps)
                setattr(params, name, getattr(params, name) - update)
        val_mse = mlp_loss(params, rows_val, y_val)
        if val_mse < best_val:
            best_val = val_mse
            best = copy.deepcopy(params)
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break

    return EnsembleModel(
        kind="mlp",
        feature_names=list(features.feature_names),
        standardization=standardization or StandardizationParams.identity(m),
        mlp=best,
        seed=seed,
    )


def predict(model: EnsembleModel, features: FeatureMatrix) -> np.ndarray:
    """Standardize with the model's stored params, then run the forward pass.

    Feature names must match the fitted list exactly, order included, so a
    cross-lingual caller cannot silently feed misaligned columns.
    """
    if list(features.feature_names) != list(model.feature_names):
        raise ValueError(
            f"feature names {features.feature_names} do not match the model's {model.feature_names}"
        )
    rows = standardize_apply(features, model.standardization).rows
    if model.kind == "linear":
        return rows @ model.weights + model.intercept
    return mlp_forward(model.mlp, rows)


def _safe_spearman(a, b) -> float:
    """Spearman with undefined (both-constant) cases scored as 0."""
    try:
        return spearman(a, b)
    except ValueError:
        return 0.0


def select_model(
    features: FeatureMatrix,
    gold: list[float],
    seed: int,
    sources: list[str] | None = None,
    mlp_options: dict | None = None,
) -> EnsembleModel:
    """Fit linear and MLP on 80% of the sources, keep the validation winner.

    The 80/20 split is source-disjoint, shuffled by a generator derived
    from seed+1; the winner by validation Spearman (ties and degenerate
    validations go to linear) is refit on all rows before returning.
    """
    y = np.asarray(gold, dtype=float)
    if features.n != len(y):
        raise ValueError("gold length does not match feature rows")
    if features.n < 2:
        raise ValueError("model selection needs at least 2 rows")
    if sources is None:
        sources = list(features.segment_ids)
    if len(sources) != features.n:
        raise ValueError("sources must align with feature rows")
    mlp_options = dict(mlp_options or {})

    kind = "linear"
    fit_idx, val_idx = _validation_split(sources, seed)
    if fit_idx is not None and len(fit_idx) >= 2 and len(val_idx) >= 2:
        sub = features.take_rows(fit_idx)
        sub_params = standardize_fit(sub)
        sub_std = standardize_apply(sub, sub_params)
        y_fit = y[fit_idx]
        holdout = features.take_rows(val_idx)
        y_val = y[val_idx]

        linear_model = fit_linear(sub_std, y_fit, standardization=sub_params)
        rho_linear = _safe_spearman(predict(linear_model, holdout), y_val)
        rho_mlp = -np.inf
        if len(fit_idx) >= 10:
            mlp_model = fit_mlp(sub_std, y_fit, seed=seed, standardization=sub_params, **mlp_options)
            rho_mlp = _safe_spearman(predict(mlp_model, holdout), y_val)
        if rho_mlp - rho_linear > SELECTION_TIE:
            kind = "mlp"
        logger.debug(
            "model selection: linear %.4f vs mlp %s -> %s",
            rho_linear,
            "skipped" if rho_mlp == -np.inf else f"{rho_mlp:.4f}",
            kind,
        )

    params = standardize_fit(features)
    standardized = standardize_apply(features, params)
    if kind == "mlp":
        return fit_mlp(standardized, y, seed=seed, standardization=params, **mlp_options)
    return fit_linear(standardized, y, standardization=params)


def _validation_split(sources: list[str], seed: int) -> tuple[list[int] | None, list[int] | None]:
    """Source-disjoint 80/20 row split, or (None, None) when impossible."""
    unique: list[str] = []
    seen: set[str] = set()
    for source in sources:
        if source not in seen:
            seen.add(source)
            unique.append(source)
    if len(unique) < 2:
        return None, None
    shuffled = list(unique)
    Xorshift64Star(seed + 1).shuffle(shuffled)
    n_fit = round_half_up(0.8 * len(shuffled))
    if n_fit == 0 or n_fit >= len(shuffled):
        return None, None
    fit_sources = set(shuffled[:n_fit])
    fit_idx = [i for i, s in enumerate(sources) if s in fit_sources]
    val_idx = [i for i, s in enumerate(sources) if s not in fit_sources]
    return fit_idx, val_idx


def save_model(model: EnsembleModel, path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "seed": model.seed,
        "standardization": {
            "mean": model.standardization.mean.tolist(),
            "std": model.standardization.std.tolist(),
        },
    }
    if model.kind == "linear":
        payload["linear"] = {"weights": model.weights.tolist(), "intercept": model.intercept}
    else:
        payload["mlp"] = {
            "w1": model.mlp.w1.tolist(),
            "b1": model.mlp.b1.tolist(),
            "w2": model.mlp.w2.tolist(),
            "b2": model.mlp.b2,
        }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def load_model(path) -> EnsembleModel:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    standardization = StandardizationParams(
        mean=np.array(payload["standardization"]["mean"]),
        std=np.array(payload["standardization"]["std"]),
    )
    if payload["kind"] == "linear":
        return EnsembleModel(
            kind="linear",
            feature_names=payload["feature_names"],
            standardization=standardization,
            weights=np.array(payload["linear"]["weights"]),
            intercept=float(payload["linear"]["intercept"]),
            seed=payload.get("seed"),
        )
    block = payload["mlp"]
    return EnsembleModel(
        kind="mlp",
        feature_names=payload["feature_names"],
        standardization=standardization,
        mlp=MlpParams(
            w1=np.array(block["w1"]),
            b1=np.array(block["b1"]),
            w2=np.array(block["w2"]),
            b2=float(block["b2"]),
        ),
        seed=payload.get("seed"),
    )
