"""Dataset assembly and model comparison shared by the CLI and the tests."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import baselines
from .cascade import (
    DAY, InsufficientEvents, Meme, all_users, daily_counts, early_popularity, early_window,
    filter_new_memes, history_counts, observation_slice,
)
from .community import CommunityAssignment
from .evaluation import ClassReport, cross_validate, popularity_class, stratified_folds
from .features import FEATURE_GROUPS, FeatureVector, extract_all
from .forest import ForestConfig, forest_factory
from .graph import Network, ParseError, pagerank

FULL_MODEL = "P_n"
ABLATIONS = tuple(FEATURE_GROUPS)
BASELINES = ("B1", "B2", "B3", "B4", "B5")
ALL_MODELS = (FULL_MODEL, *ABLATIONS, *BASELINES)


def derive_seed(root: int, label: str) -> int:
    """Independent 63-bit seed for a labelled purpose under one root seed."""
    digest = hashlib.sha256(f"{root}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class RunConfig:
    n: int = 25
    basis: str = "tweets"
    x_max: int = 20
    tau_days: int = 7
    cap: Optional[int] = 4
    bin_edges: Optional[tuple[float, ...]] = None
    first_class: int = 1
    seed: int = 0
    unreachable: str = "constant"
    folds: int = 10
    history: Optional[tuple[int, int]] = None
    window: Optional[tuple[int, int]] = None
    forest: ForestConfig = field(default_factory=ForestConfig)

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.tau_days < 1:
            raise ValueError("tau_days must be >= 1")
        if self.basis not in ("tweets", "adopters"):
            raise ValueError("basis must be 'tweets' or 'adopters'")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")

    def label(self, popularity: int) -> int:
        return popularity_class(popularity, self.cap, self.bin_edges, self.first_class)


def select_memes(memes: Sequence[Meme], cfg: RunConfig) -> list[Meme]:
    """Apply the new-meme filter and drop memes shorter than the window."""
    if cfg.history is not None:
        hist = history_counts(memes, *cfg.history)
        memes = observation_slice(memes, cfg.history[1])
    else:
        hist = {}
    memes = filter_new_memes(memes, hist, cfg.x_max, cfg.window)
    return [m for m in memes if m.n_tweets >= cfg.n]


@dataclass
class Dataset:
    meme_ids: list[str]
    vectors: list[FeatureVector]
    features: np.ndarray
    influence: np.ndarray
    early: np.ndarray
    daily: np.ndarray
    tweets: np.ndarray
    adopters: np.ndarray

    def __len__(self) -> int:
        return len(self.meme_ids)

    def popularity(self, basis: str) -> np.ndarray:
        return self.tweets if basis == "tweets" else self.adopters

    def labels(self, cfg: RunConfig, basis: Optional[str] = None) -> np.ndarray:
        pop = self.popularity(basis or cfg.basis)
        return np.array([cfg.label(int(p)) for p in pop], dtype=np.int64)


def load_followers(lines) -> dict[str, int]:
    """Parse ``user<TAB>follower_count`` lines (``#`` comments allowed)."""
    out: dict[str, int] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected user<TAB>follower_count", lineno)
        try:
            count = int(parts[1])
        except ValueError:
            raise ParseError(f"bad follower count {parts[1]!r}", lineno) from None
        if count < 0:
            raise ParseError("follower count must be >= 0", lineno)
        out[parts[0]] = count
    return out


def read_followers(path) -> dict[str, int]:
    with open(path, encoding="utf-8") as fh:
        return load_followers(fh)


def follower_counts(net: Network, metadata: Optional[Mapping[str, int]] = None) -> np.ndarray:
    """Per-node follower counts: metadata when given (absent users 0), else degree."""
    if metadata is None:
        return net.degree().astype(np.float64)
    return np.array([float(metadata.get(lab, 0)) for lab in net.labels])


def build_dataset(
    net: Network,
    ca: CommunityAssignment,
    memes: Sequence[Meme],
    cfg: RunConfig,
    followers: Optional[Mapping[str, int]] = None,
) -> Dataset:
    """Features, influence statistics and early-popularity inputs per meme.

    ``memes`` should already be filtered (see :func:`select_memes`); memes
    shorter than ``cfg.n`` are skipped.
    """
    cfg.validate()
    full = net.with_nodes(all_users(memes))
    pr = pagerank(full)
    fol = follower_counts(full, followers)
    ids, vecs, infl, early, daily, tw, ad = [], [], [], [], [], [], []
    for m in memes:
        try:
            w = early_window(m, cfg.n)
        except InsufficientEvents:
            continue
        ids.append(m.id)
        vecs.append(extract_all(w, full, ca, cfg.unreachable))
        infl.append(baselines.influence_features([full.index[u] for u in w.adopters], pr, fol))
        early.append(early_popularity(m, cfg.tau_days * DAY))
        daily.append(daily_counts(m, cfg.tau_days))
        tw.append(m.n_tweets)
        ad.append(m.n_adopters)
    k = len(ids)
    return Dataset(
        ids,
        vecs,
        np.array([v.as_array() for v in vecs]).reshape(k, 13),
        np.array(infl, dtype=np.float64).reshape(k, 8),
        np.array(early, dtype=np.float64),
        np.array(daily, dtype=np.float64).reshape(k, cfg.tau_days),
        np.array(tw, dtype=np.int64),
        np.array(ad, dtype=np.int64),
    )


def _forest_for(cfg: RunConfig, n_cols: int) -> ForestConfig:
    fc = cfg.forest
    k = min(fc.features_per_tree, n_cols)
    return ForestConfig(fc.n_trees, k, fc.max_depth, fc.min_leaf, fc.per_split, fc.bootstrap)


def model_inputs(ds: Dataset, cfg: RunConfig, name: str):
    """Design matrix and CV factory for one named model."""
    if name == FULL_MODEL:
        return ds.features, forest_factory(_forest_for(cfg, ds.features.shape[1]))
    if name in FEATURE_GROUPS:
        cols = list(FEATURE_GROUPS[name])
        return ds.features[:, cols], forest_factory(_forest_for(cfg, len(cols)))
    if name == "B1":
        return np.zeros((len(ds), 1)), baselines.random_guess_factory
    if name == "B2":
        return np.zeros((len(ds), 1)), baselines.majority_factory
    reg = baselines.regression_factory(cfg.cap, cfg.bin_edges, cfg.first_class)
    if name == "B3":
        return ds.influence, reg
    if name == "B4":
        return np.log10(ds.early)[:, None], reg
    if name == "B5":
        return baselines.daily_log_features(ds.daily), reg
    raise ValueError(f"unknown model {name!r}")


def evaluate_models(
    ds: Dataset, cfg: RunConfig, models: Sequence[str] = ALL_MODELS
) -> tuple[dict[str, ClassReport], np.ndarray]:
    """Cross-validate every model on one shared fold assignment."""
    y = ds.labels(cfg)
    targets = np.log10(ds.popularity(cfg.basis).astype(np.float64))
    fold_ids = stratified_folds(y, cfg.folds, derive_seed(cfg.seed, "folds"))
    model_seed = derive_seed(cfg.seed, "model")
    reports = {}
    for name in models:
        X, factory = model_inputs(ds, cfg, name)
        reports[name] = cross_validate(
            X, y, factory, cfg.folds, seed=model_seed, targets=targets, fold_ids=fold_ids
        )
    return reports, fold_ids


def comparison_rows(reports: Mapping[str, ClassReport]) -> tuple[list[str], list[list]]:
    """Rows = classes, columns = models, cells = F1."""
    classes = sorted(set().union(*(r.classes for r in reports.values())))
    header = ["class", *reports]
    rows = [[c, *(reports[m].f1_of(c) for m in reports)] for c in classes]
    return header, rows
