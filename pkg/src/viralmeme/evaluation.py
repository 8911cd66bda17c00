"""Popularity classes, per-class precision/recall/F1 and stratified k-fold CV."""
from __future__ import annotations

import csv
import hashlib
import warnings
from dataclasses import dataclass
from typing import IO, Callable, Optional, Sequence

import numpy as np


def popularity_class(
    popularity: int,
    cap: Optional[int] = None,
    edges: Optional[Sequence[float]] = None,
    first_class: int = 1,
) -> int:
    """Order-of-magnitude class ``ceil(log10(popularity) + 0.5)``.

    Computed with integer arithmetic: class k holds popularity in
    ``(10**(k-1.5), 10**(k-0.5)]``, i.e. ``10**(2k-3) < p**2 <= 10**(2k-1)``.
    ``edges`` overrides the default boundaries: the class is ``first_class``
    plus the number of edges strictly below ``popularity``. Classes above
    ``cap`` collapse into ``cap``.
    """
    if popularity < 1:
        raise ValueError("popularity must be >= 1")
    if edges is not None:
        k = first_class + sum(1 for e in edges if popularity > e)
    else:
        p2 = int(popularity) ** 2
        k = 1
        while p2 > 10 ** (2 * k - 1):
            k += 1
    if cap is not None and k > cap:
        k = cap
    return k


def class_from_log_popularity(
    log10_popularity: float,
    cap: Optional[int] = None,
    edges: Optional[Sequence[float]] = None,
    first_class: int = 1,
) -> int:
    """Class of a real-valued (predicted) popularity given as log10.

    Predictions below one tweet are clamped to popularity 1.
    """
    lp = max(float(log10_popularity), 0.0)
    if edges is not None:
        k = first_class + sum(1 for e in edges if lp > np.log10(e))
    else:
        k = max(1, int(np.ceil(lp + 0.5)))
    if cap is not None and k > cap:
        k = cap
    return k


@dataclass(frozen=True)
class ClassLabel:
    value: int
    basis: str

    @classmethod
    def from_popularity(cls, popularity: int, basis: str = "tweets", cap: Optional[int] = None):
        return cls(popularity_class(popularity, cap), basis)


@dataclass(frozen=True)
class ClassReport:
    classes: tuple[int, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    confusion: np.ndarray  # rows actual, columns predicted

    def f1_of(self, cls: int) -> float:
        return float(self.f1[self.classes.index(cls)]) if cls in self.classes else 0.0

    @property
    def degenerate(self) -> bool:
        return int(np.count_nonzero(self.support)) < 2

    def write_csv(self, out: IO[str]) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["class", "precision", "recall", "f1", "support"])
        for i, c in enumerate(self.classes):
            w.writerow([c, f"{self.precision[i]:.6f}", f"{self.recall[i]:.6f}",
                        f"{self.f1[i]:.6f}", int(self.support[i])])

    def write_confusion_csv(self, out: IO[str]) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["actual\\predicted", *self.classes])
        for i, c in enumerate(self.classes):
            w.writerow([c, *(int(v) for v in self.confusion[i])])


def f1_report(predicted, actual, classes: Optional[Sequence[int]] = None) -> ClassReport:
    """One-vs-rest precision, recall and F1 per class (0 where undefined)."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape:
        raise ValueError("predicted and actual labels differ in length")
    if classes is None:
        classes = sorted(set(actual.tolist()) | set(predicted.tolist()))
    classes = tuple(int(c) for c in classes)
    pos = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    confusion = np.zeros((k, k), dtype=np.int64)
    for a, p in zip(actual.tolist(), predicted.tolist()):
        confusion[pos[a], pos[p]] += 1
    tp = np.diag(confusion).astype(np.float64)
    support = confusion.sum(axis=1)
    predicted_count = confusion.sum(axis=0)
    precision = np.divide(tp, predicted_count, out=np.zeros(k), where=predicted_count > 0)
    recall = np.divide(tp, support, out=np.zeros(k), where=support > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(k), where=denom > 0)
    return ClassReport(classes, precision, recall, f1, support, confusion)


def stratified_folds(y, folds: int = 10, seed: int = 0) -> np.ndarray:
    """Assign each sample a fold id so every class is spread evenly.

    Within each class samples are shuffled and dealt round-robin; the dealing
    continues across classes so overall fold sizes differ by at most one.
    """
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        if len(idx) < folds:
            warnings.warn(
                f"class {c} has {len(idx)} members, fewer than {folds} folds", stacklevel=2
            )
        fold_of[idx] = (offset + np.arange(len(idx))) % folds
        offset += len(idx)
    return fold_of


def fold_hash(fold_ids) -> str:
    return hashlib.sha256(np.asarray(fold_ids, dtype=np.int64).tobytes()).hexdigest()[:16]


# factory(X_train, y_train, targets_train, seed) -> object with .predict(X)
ModelFactory = Callable[[np.ndarray, np.ndarray, Optional[np.ndarray], int], object]


def cross_validate(
    X,
    y,
    factory: ModelFactory,
    folds: int = 10,
    seed: int = 0,
    targets=None,
    fold_ids=None,
) -> ClassReport:
    """Pool out-of-fold predictions over stratified folds into one report.

    ``targets`` (e.g. log popularity for regression baselines) is sliced per
    fold alongside ``y``. Folds whose training part holds a single class
    fall back to predicting that class.
    """
    X = np.asarray(X)
    y = np.asarray(y)
    if fold_ids is None:
        fold_ids = stratified_folds(y, folds, seed)
    targets = None if targets is None else np.asarray(targets)
    predicted = np.empty_like(y)
    fold_seeds = np.random.SeedSequence(seed).generate_state(folds, dtype=np.uint32)
    for k in range(folds):
        test = fold_ids == k
        if not test.any():
            continue
        train = ~test
        y_tr = y[train]
        if len(np.unique(y_tr)) < 2:
            # nothing to discriminate; the constant answer is the only sound one
            predicted[test] = y_tr[0] if len(y_tr) else y[test][0]
            continue
        model = factory(
            X[train], y_tr, None if targets is None else targets[train], int(fold_seeds[k])
        )
        predicted[test] = model.predict(X[test])
    classes = sorted(set(y.tolist()) | set(predicted.tolist()))
    report = f1_report(predicted, y, classes)
    if report.degenerate:
        warnings.warn("cross-validation report is degenerate (single class)", stacklevel=2)
    return report
