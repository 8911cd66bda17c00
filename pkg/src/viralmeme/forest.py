"""Random forest of CART trees with per-tree feature subsets.

Each tree sees a bootstrap sample of rows and, by default, a fixed random
subset of ``features_per_tree`` columns chosen once for the whole tree
(``per_split=True`` redraws the subset at every node instead). Splits
minimise Gini impurity over midpoints between consecutive observed values.
NaN marks a missing value: it is ignored when scoring a split and follows
the child that received more non-missing samples.

Models are stored as versioned JSON documents; :func:`save_model` and
:func:`load_model` handle forests and the baseline models alike.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import kernels

MODEL_FORMAT = "viralmeme-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 300
    features_per_tree: int = 5
    max_depth: Optional[int] = None
    min_leaf: int = 1
    per_split: bool = False
    bootstrap: bool = True


@dataclass(frozen=True, eq=False)
class DecisionTree:
    features: tuple[int, ...]
    feature: np.ndarray  # global column per node, -1 at leaves
    threshold: np.ndarray
    missing_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    hist: np.ndarray  # class counts per node (meaningful at leaves)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_for(self, x) -> int:
        node = 0
        while self.feature[node] >= 0:
            v = x[self.feature[node]]
            if np.isnan(v):
                go_left = bool(self.missing_left[node])
            else:
                go_left = v <= self.threshold[node]
            node = int(self.left[node] if go_left else self.right[node])
        return node

    def to_dict(self) -> dict:
        leaf = self.feature < 0
        return {
            "features": list(self.features),
            "feature": self.feature.tolist(),
            "threshold": [float(t) if not lf else 0.0 for t, lf in zip(self.threshold, leaf)],
            "missing_left": self.missing_left.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [h.tolist() if lf else [] for h, lf in zip(self.hist, leaf)],
        }

    @classmethod
    def from_dict(cls, d: dict, n_classes: int) -> "DecisionTree":
        hist = np.zeros((len(d["feature"]), n_classes), dtype=np.int64)
        for i, v in enumerate(d["value"]):
            if v:
                hist[i] = v
        return cls(
            tuple(d["features"]),
            np.asarray(d["feature"], dtype=np.int32),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["missing_left"], dtype=np.uint8),
            np.asarray(d["left"], dtype=np.int32),
            np.asarray(d["right"], dtype=np.int32),
            hist,
        )


class RandomForest:
    model_type = "random_forest"

    def __init__(self, trees, classes, n_features, config: ForestConfig, seed: int):
        self.trees = list(trees)
        self.classes = tuple(int(c) for c in classes)
        self.n_features = int(n_features)
        self.config = config
        self.seed = int(seed)
        self._flat = None

    def _flatten(self):
        if self._flat is None:
            offsets = np.cumsum([0] + [t.n_nodes for t in self.trees])
            feature = np.concatenate([t.feature for t in self.trees]).astype(np.int32)
            left = np.concatenate([t.left + o for t, o in zip(self.trees, offsets)])
            right = np.concatenate([t.right + o for t, o in zip(self.trees, offsets)])
            # ties between classes inside a leaf go to the smaller class id
            leaf_class = np.concatenate([np.argmax(t.hist, axis=1) for t in self.trees])
            self._flat = (
                feature,
                np.concatenate([t.threshold for t in self.trees]),
                np.concatenate([t.missing_left for t in self.trees]).astype(np.uint8),
                np.where(feature >= 0, left, -1).astype(np.int32),
                np.where(feature >= 0, right, -1).astype(np.int32),
                leaf_class.astype(np.int32),
                offsets[:-1].astype(np.int64),
            )
        return self._flat

    def votes(self, X) -> np.ndarray:
        """Per-row tree votes, one column per entry of ``classes``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return kernels.forest_votes(np.ascontiguousarray(X), *self._flatten(), len(self.classes))

    def predict(self, X) -> np.ndarray:
        v = self.votes(X)
        return np.asarray(self.classes, dtype=np.int64)[np.argmax(v, axis=1)]

    def predict_one(self, x) -> int:
        return int(self.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "seed": self.seed,
            "classes": list(self.classes),
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        classes = d["classes"]
        trees = [DecisionTree.from_dict(t, len(classes)) for t in d["trees"]]
        return cls(trees, classes, d["n_features"], ForestConfig(**d["config"]), d["seed"])


def _grow_one(X, codes, n_classes, config: ForestConfig, child: np.random.SeedSequence):
    rng = np.random.default_rng(child)
    n, d = X.shape
    rows = rng.integers(0, n, n) if config.bootstrap else np.arange(n)
    k = config.features_per_tree
    if config.per_split:
        feats = np.arange(d)
    else:
        feats = np.sort(rng.choice(d, size=k, replace=False))
    kernel_seed = int(rng.integers(0, 2**63 - 1))
    Xs = np.ascontiguousarray(X[np.ix_(rows, feats)])
    ys = np.ascontiguousarray(codes[rows])
    orders = np.ascontiguousarray(np.argsort(Xs, axis=0, kind="stable").T)
    feature, threshold, missing_left, left, right, hist = kernels.grow_tree(
        Xs, ys, orders, n_classes,
        -1 if config.max_depth is None else config.max_depth,
        config.min_leaf, k, kernel_seed,
    )
    global_feature = np.where(feature >= 0, feats[np.maximum(feature, 0)], -1).astype(np.int32)
    return DecisionTree(
        tuple(int(f) for f in feats), global_feature, threshold, missing_left, left, right, hist
    )


def train(X, y, config: ForestConfig = ForestConfig(), seed: int = 0) -> RandomForest:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    classes, codes = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ValueError(
            "training data holds a single class; use the majority-guess baseline instead"
        )
    d = X.shape[1]
    if not 1 <= config.features_per_tree <= d:
        raise ValueError(f"features_per_tree must lie in [1, {d}]")
    if config.min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    codes = codes.astype(np.int64)
    children = np.random.SeedSequence(seed).spawn(config.n_trees)
    trees = [_grow_one(X, codes, len(classes), config, c) for c in children]
    return RandomForest(trees, classes.tolist(), d, config, seed)


def predict(rf: RandomForest, x) -> int:
    return rf.predict_one(x)


def forest_factory(config: ForestConfig = ForestConfig()):
    """Adapter for :func:`viralmeme.evaluation.cross_validate`."""

    def factory(X, y, targets, seed):
        return train(X, y, config, seed)

    return factory


# ---- shared model file format -------------------------------------------

_REGISTRY: dict[str, type] = {RandomForest.model_type: RandomForest}


def register_model(cls):
    _REGISTRY[cls.model_type] = cls
    return cls


def dumps_model(model) -> str:
    doc = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "type": model.model_type}
    doc.update(model.to_dict())
    return json.dumps(doc, separators=(",", ":"))


def loads_model(text: str):
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a viralmeme model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    kind = doc["type"]
    if kind not in _REGISTRY:
        raise ValueError(f"unknown model type {kind!r}")
    return _REGISTRY[kind].from_dict(doc)


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
