"""The 13 early-window prediction features.

Degenerate values (zero-mean coefficients of variation, windows without
retweets or mentions) are reported as ``None`` in :class:`FeatureVector` and as
NaN in numeric arrays; the forest routes NaN down a per-node default branch.
"""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from fractions import Fraction
from typing import IO, Iterable, Optional

import numpy as np

from .cascade import MENTION, RETWEET, EarlyWindow, interaction_split
from .community import CommunityAssignment
from .graph import Network, pairwise_distances, surface

FEATURE_NAMES = tuple(f"f{i}" for i in range(1, 14))
FEATURE_GROUPS = {
    "basic": (0, 1, 2),
    "distance": (3, 4, 5),
    "community": (6, 7, 8, 9, 10),
    "timing": (11, 12),
}
POLICIES = ("constant", "exclude")


@dataclass(frozen=True)
class FeatureVector:
    f1_adopters: int
    f2_surface1: int
    f3_surface2: int
    f4_mean_step_dist: Optional[float]
    f5_cv_step_dist: Optional[float]
    f6_diameter: int
    f7_infected_communities: int
    f8_usage_entropy: float
    f9_adopter_entropy: float
    f10_intra_rt_frac: Optional[float]
    f11_intra_at_frac: Optional[float]
    f12_mean_step_time: Optional[float]
    f13_cv_step_time: Optional[float]

    def as_array(self) -> np.ndarray:
        return np.array([np.nan if v is None else float(v) for v in astuple(self)])

    def as_list(self) -> list:
        return list(astuple(self))


def _cv(values: list[float], mean: float, denom: int) -> Optional[float]:
    """Standard deviation over ``denom`` divided by the mean."""
    if denom <= 0 or mean == 0:
        return None
    return math.sqrt(sum((v - mean) ** 2 for v in values) / denom) / mean


def _node_ids(net: Network, users: Iterable[str]) -> list[int]:
    return [net.node_id(u) for u in users]


def basic_features(w: EarlyWindow, net: Network) -> tuple[int, int, int]:
    ids = _node_ids(net, w.adopters)
    return len(ids), len(surface(net, ids, 1)), len(surface(net, ids, 2))


def distance_features(
    w: EarlyWindow, net: Network, policy: str = "constant"
) -> tuple[Optional[float], Optional[float], int]:
    """Mean and CV of consecutive-author distances, and the adopter diameter.

    ``constant`` replaces unreachable distances with one more than the largest
    finite distance among the window's adopters; ``exclude`` drops them.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown unreachable policy {policy!r}")
    ids = _node_ids(net, w.adopters)
    pos = {u: i for i, u in enumerate(w.adopters)}
    dist = pairwise_distances(net, ids)
    finite_max = int(dist[dist >= 0].max()) if dist.size else 0
    disconnected = bool((dist < 0).any())
    fill = finite_max + 1

    steps: list[int] = []
    for a, b in zip(w.authors, w.authors[1:]):
        d = int(dist[pos[a], pos[b]])
        if d < 0:
            if policy == "exclude":
                continue
            d = fill
        steps.append(d)
    diameter = fill if (disconnected and policy == "constant") else finite_max

    if not steps:
        return None, None, diameter
    mean = sum(steps) / len(steps)
    return mean, _cv(steps, mean, len(steps) - 1), diameter


def _entropy(tallies: dict[int, Fraction]) -> float:
    total = sum(tallies.values())
    h = 0.0
    for t in tallies.values():
        if t:
            p = float(t / total)
            h -= p * math.log(p)
    return h


def community_features(
    w: EarlyWindow, net: Network, ca: CommunityAssignment
) -> tuple[int, float, float, Optional[float], Optional[float]]:
    """Infected communities, usage/adopter entropy, intra-interaction fractions.

    A user in k communities adds 1/k to each; users without a community are
    left out of the entropy tallies.
    """
    memberships = {}
    for user in w.adopters:
        u = net.index.get(user)
        memberships[user] = ca.communities_of(u) if u is not None else ()

    usage: dict[int, Fraction] = {}
    for e in w.events:
        cids = memberships[e.user]
        for c in cids:
            usage[c] = usage.get(c, Fraction(0)) + Fraction(1, len(cids))
    adopters: dict[int, Fraction] = {}
    for user in w.adopters:
        cids = memberships[user]
        for c in cids:
            adopters[c] = adopters.get(c, Fraction(0)) + Fraction(1, len(cids))

    fracs = []
    for kind in (RETWEET, MENTION):
        intra, inter = interaction_split(w, net, ca, kind)
        fracs.append(intra / (intra + inter) if intra + inter else None)
    return len(usage), _entropy(usage), _entropy(adopters), fracs[0], fracs[1]


def growth_features(w: EarlyWindow) -> tuple[Optional[float], Optional[float]]:
    ts = w.timestamps
    n = len(ts)
    if n < 2:
        return None, None
    mean = (ts[-1] - ts[0]) / (n - 1)
    gaps = [b - a for a, b in zip(ts, ts[1:])]
    return mean, _cv(gaps, mean, n - 2)


def extract_all(
    w: EarlyWindow, net: Network, ca: CommunityAssignment, policy: str = "constant"
) -> FeatureVector:
    return FeatureVector(
        *basic_features(w, net),
        *distance_features(w, net, policy),
        *community_features(w, net, ca),
        *growth_features(w),
    )


CSV_HEADER = ("meme_id", "n", *FEATURE_NAMES, "label_T", "label_A")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_feature_csv(rows: Iterable[tuple[str, int, FeatureVector, int, int]], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for meme_id, n, fv, label_t, label_a in rows:
        writer.writerow([meme_id, n, *(_fmt(v) for v in fv.as_list()), label_t, label_a])


def read_feature_csv(fh: IO[str]) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray]:
    """Return meme ids, the feature matrix (NaN for missing) and both label columns."""
    reader = csv.reader(fh)
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected feature CSV header {header}")
    ids, rows, lt, la = [], [], [], []
    for rec in reader:
        ids.append(rec[0])
        rows.append([float(v) if v != "" else np.nan for v in rec[2:15]])
        lt.append(int(rec[15]))
        la.append(int(rec[16]))
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(FEATURE_NAMES))
    return ids, X, np.array(lt, dtype=np.int64), np.array(la, dtype=np.int64)


FEATURE_FIELDS = tuple(f.name for f in fields(FeatureVector))
