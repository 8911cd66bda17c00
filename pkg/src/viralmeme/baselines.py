"""Baseline predictors: random guess, majority guess and three regressions.

The regressions (influence, LN, ML) predict log10 of final popularity and
emit classes by binning the prediction, so every model is scored on the
same classification task.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .evaluation import class_from_log_popularity
from .forest import register_model

TARGET_TRANSFORMS = ("identity", "log10")
INFLUENCE_NAMES = (
    "pr_max", "pr_mean", "pr_median", "pr_cv",
    "fol_max", "fol_mean", "fol_median", "fol_cv",
)


@register_model
class RandomGuess:
    """Draws each label i.i.d. from fixed class priors."""

    model_type = "random_guess"

    def __init__(self, classes: Sequence[int], priors: Sequence[float], seed: int = 0):
        self.classes = tuple(int(c) for c in classes)
        self.priors = tuple(float(p) for p in priors)
        self.seed = int(seed)

    def predict(self, X) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        idx = rng.choice(len(self.classes), size=len(X), p=self.priors)
        return np.asarray(self.classes, dtype=np.int64)[idx]

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "priors": list(self.priors), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomGuess":
        return cls(d["classes"], d["priors"], d["seed"])


def b1_random_guess(class_priors: Mapping[int, float], seed: int = 0) -> RandomGuess:
    if any(p < 0 for p in class_priors.values()):
        raise ValueError("class priors must be non-negative")
    if abs(sum(class_priors.values()) - 1.0) > 1e-9:
        raise ValueError("class priors must sum to 1")
    classes = sorted(class_priors)
    return RandomGuess(classes, [class_priors[c] for c in classes], seed)


def priors_from_labels(labels) -> dict[int, float]:
    values, counts = np.unique(np.asarray(labels), return_counts=True)
    return {int(v): c / counts.sum() for v, c in zip(values, counts)}


@register_model
class MajorityGuess:
    model_type = "majority"

    def __init__(self, label: int):
        self.label = int(label)

    def predict(self, X) -> np.ndarray:
        return np.full(len(X), self.label, dtype=np.int64)

    def to_dict(self) -> dict:
        return {"label": self.label}

    @classmethod
    def from_dict(cls, d: dict) -> "MajorityGuess":
        return cls(d["label"])


def b2_majority_guess(training_labels) -> MajorityGuess:
    labels = np.asarray(training_labels)
    if labels.size == 0:
        raise ValueError("cannot take the majority of an empty training set")
    values, counts = np.unique(labels, return_counts=True)
    # np.unique sorts, so argmax picks the smaller class on ties
    return MajorityGuess(int(values[np.argmax(counts)]))


@register_model
@dataclass
class LinearModel:
    coefficients: np.ndarray
    intercept: float
    target_transform: str = "identity"
    ridge_used: bool = field(default=False, compare=False)

    model_type = "linear"

    def predict_raw(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.coefficients):
            raise ValueError(f"expected {len(self.coefficients)} features, got {X.shape[1]}")
        return X @ self.coefficients + self.intercept

    predict = predict_raw

    def to_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "intercept": float(self.intercept),
            "target_transform": self.target_transform,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(np.asarray(d["coefficients"], dtype=np.float64), d["intercept"],
                   d["target_transform"])


def fit_ols(X, y, ridge: float = 1e-10, target_transform: str = "identity") -> LinearModel:
    """Least squares with intercept via the centred normal equations.

    When the Gram matrix is singular or badly conditioned a small ridge term
    ``ridge * max(1, trace/p) * I`` is added.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if len(y) != n:
        raise ValueError("X and y differ in length")
    if n <= p:
        raise ValueError(f"need more rows than columns ({n} rows, {p} columns)")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("X and y must be finite; impute missing values first")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    gram = Xc.T @ Xc
    rhs = Xc.T @ yc
    ridge_used = False
    if p and np.linalg.cond(gram) > 1e12:
        ridge_used = True
        gram = gram + ridge * max(1.0, np.trace(gram) / p) * np.eye(p)
    coef = np.linalg.solve(gram, rhs) if p else np.zeros(0)
    if not np.isfinite(coef).all():
        raise ValueError("degenerate design matrix even after ridge fallback")
    return LinearModel(coef, float(y_mean - x_mean @ coef), target_transform, ridge_used)


@register_model
class BinnedRegressor:
    """Wraps a log10-popularity regression so it emits popularity classes."""

    model_type = "binned_regressor"

    def __init__(self, linear: LinearModel, cap: Optional[int] = None,
                 edges: Optional[Sequence[float]] = None, first_class: int = 1):
        self.linear = linear
        self.cap = cap
        self.edges = None if edges is None else tuple(edges)
        self.first_class = first_class

    def predict(self, X) -> np.ndarray:
        yhat = self.linear.predict_raw(X)
        return np.array(
            [class_from_log_popularity(v, self.cap, self.edges, self.first_class) for v in yhat],
            dtype=np.int64,
        )

    def to_dict(self) -> dict:
        return {"linear": self.linear.to_dict(), "cap": self.cap,
                "edges": None if self.edges is None else list(self.edges),
                "first_class": self.first_class}

    @classmethod
    def from_dict(cls, d: dict) -> "BinnedRegressor":
        return cls(LinearModel.from_dict(d["linear"]), d["cap"], d["edges"], d["first_class"])


def _stats(values: np.ndarray) -> tuple[float, float, float, float]:
    mean = float(values.mean())
    cv = float(values.std() / mean) if mean > 0 else 0.0
    return float(values.max()), mean, float(np.median(values)), cv


def influence_features(adopter_ids, pagerank: np.ndarray, followers: np.ndarray) -> np.ndarray:
    """Max, mean, median and CV of adopter PageRank and of log10(1 + followers).

    The CV of a single adopter (or a zero mean) is imputed as 0.
    """
    ids = np.asarray(list(adopter_ids), dtype=np.int64)
    if ids.size == 0:
        raise ValueError("window has no adopters")
    pr = np.asarray(pagerank, dtype=np.float64)[ids]
    fol = np.log10(1.0 + np.asarray(followers, dtype=np.float64)[ids])
    return np.array(_stats(pr) + _stats(fol))


def log10_popularity(popularity) -> np.ndarray:
    return np.log10(np.asarray(popularity, dtype=np.float64))


def b3_influence_model(influence_X, final_popularity) -> LinearModel:
    return fit_ols(influence_X, log10_popularity(final_popularity), target_transform="log10")


def b4_ln_model(early_popularity, final_popularity) -> LinearModel:
    """Fit ``log10|T| = a * log10|T^tau| + b``; memes with zero early count are dropped."""
    early = np.asarray(early_popularity, dtype=np.float64)
    final = np.asarray(final_popularity, dtype=np.float64)
    keep = early > 0
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} memes with zero early popularity",
                      stacklevel=2)
    return fit_ols(np.log10(early[keep])[:, None], np.log10(final[keep]),
                   target_transform="log10")


def daily_log_features(daily_counts) -> np.ndarray:
    return np.log10(1.0 + np.asarray(daily_counts, dtype=np.float64))


def b5_ml_model(daily_counts, final_popularity) -> LinearModel:
    return fit_ols(daily_log_features(daily_counts), log10_popularity(final_popularity),
                   target_transform="log10")


# ---- cross-validation adapters ---------------------------------------------

def random_guess_factory(X, y, targets, seed):
    return b1_random_guess(priors_from_labels(y), seed)


def majority_factory(X, y, targets, seed):
    return b2_majority_guess(y)


def regression_factory(cap: Optional[int] = None, edges=None, first_class: int = 1):
    """Fits OLS on the given design against ``targets`` (log10 popularity)."""

    def factory(X, y, targets, seed):
        if targets is None:
            raise ValueError("regression baselines need log-popularity targets")
        return BinnedRegressor(fit_ols(X, targets, target_transform="log10"),
                               cap, edges, first_class)

    return factory


def r_squared(model: LinearModel, X, y) -> float:
    y = np.asarray(y, dtype=np.float64)
    resid = y - model.predict_raw(X)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else math.nan
