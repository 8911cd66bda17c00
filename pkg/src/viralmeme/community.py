"""Community assignments: file ingestion, size filtering, label propagation."""
from __future__ import annotations

import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

import numpy as np

from .graph import Network, ParseError

DEFAULT_MIN_SIZE = 3


@dataclass(frozen=True, eq=False)
class CommunityAssignment:
    """Node -> community membership over the dense ids of a network.

    ``membership[u]`` is a sorted tuple of community indices (empty when the
    node belongs to no retained community). Nodes appended to the network
    after construction are treated as unassigned.
    """

    names: tuple[str, ...]
    membership: tuple[tuple[int, ...], ...]
    community_sizes: tuple[int, ...]

    @classmethod
    def from_members(
        cls,
        members: Mapping[str, Iterable[int]],
        node_count: int,
        min_size: int = DEFAULT_MIN_SIZE,
    ) -> "CommunityAssignment":
        if min_size < 1:
            raise ValueError("min_size must be >= 1")
        names = []
        sizes = []
        per_node: list[list[int]] = [[] for _ in range(node_count)]
        for name, nodes in members.items():
            nodes = sorted(set(int(u) for u in nodes))
            if len(nodes) < min_size:
                continue
            cid = len(names)
            names.append(str(name))
            sizes.append(len(nodes))
            for u in nodes:
                per_node[u].append(cid)
        if not names:
            warnings.warn("no community survived the minimum-size filter", stacklevel=2)
        return cls(tuple(names), tuple(tuple(c) for c in per_node), tuple(sizes))

    @property
    def node_count(self) -> int:
        return len(self.membership)

    @property
    def n_communities(self) -> int:
        return len(self.names)

    @property
    def coverage(self) -> float:
        if not self.membership:
            return 0.0
        return sum(1 for c in self.membership if c) / len(self.membership)

    @property
    def is_disjoint(self) -> bool:
        return all(len(c) <= 1 for c in self.membership)

    def communities_of(self, u: int) -> tuple[int, ...]:
        if 0 <= u < len(self.membership):
            return self.membership[u]
        return ()

    def members(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {name: [] for name in self.names}
        for u, cids in enumerate(self.membership):
            for c in cids:
                out[self.names[c]].append(u)
        return out

    def write(self, out: IO[str], net: Network) -> None:
        for u, cids in enumerate(self.membership):
            for c in cids:
                out.write(f"{net.labels[u]}\t{self.names[c]}\n")


def load_assignments(
    lines: Iterable[str], net: Network, min_size: int = DEFAULT_MIN_SIZE
) -> CommunityAssignment:
    """Read ``node_label<TAB>community_id`` lines; a node may repeat (overlap)."""
    members: dict[str, set[int]] = defaultdict(set)
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ParseError("expected node_label<TAB>community_id", lineno)
        label, cid = parts
        if label not in net.index:
            raise ParseError(f"unknown node label {label!r}", lineno)
        members[cid].add(net.index[label])
    return CommunityAssignment.from_members(members, net.node_count, min_size)


def read_assignments(path, net: Network, min_size: int = DEFAULT_MIN_SIZE) -> CommunityAssignment:
    with open(path, encoding="utf-8") as fh:
        return load_assignments(fh, net, min_size)


def modularity(net: Network, labels) -> float:
    """Newman modularity of a disjoint labelling (one label per node)."""
    m2 = float(len(net.indices))
    if m2 == 0:
        return 0.0
    labels = np.asarray(labels)
    deg = net.degree().astype(np.float64)
    rows = np.repeat(np.arange(net.node_count), net.degree())
    inside = float(np.count_nonzero(labels[rows] == labels[net.indices]))
    _, inv = np.unique(labels, return_inverse=True)
    totals = np.bincount(inv, weights=deg)
    return inside / m2 - float(np.sum((totals / m2) ** 2))


def _propagate(adj: list[list[int]], rng: np.random.Generator, max_sweeps: int) -> list[int]:
    n = len(adj)
    # label ids are shuffled so the lowest-id tie rule favours no region
    labels = rng.permutation(n).tolist()
    for _ in range(max_sweeps):
        changed = False
        for u in rng.permutation(n).tolist():
            if not adj[u]:
                continue
            counts = Counter(labels[v] for v in adj[u])
            top = max(counts.values())
            best = min(lab for lab, c in counts.items() if c == top)
            if best != labels[u]:
                labels[u] = best
                changed = True
        if not changed:
            break
    return labels


def detect_label_propagation(
    net: Network,
    seed: int = 0,
    max_sweeps: int = 100,
    min_size: int = DEFAULT_MIN_SIZE,
    restarts: int = 10,
) -> CommunityAssignment:
    """Asynchronous label propagation.

    Every node starts with its own label (a seed-derived permutation of
    ``0..n-1``); each sweep visits nodes in a
    seed-derived random order and moves each to the most frequent label among
    its neighbours, the lowest label winning ties. A run stops once a sweep
    changes nothing or after ``max_sweeps`` sweeps. Of ``restarts`` runs the
    labelling with the highest modularity is kept (first one on ties).
    """
    n = net.node_count
    adj = [net.indices[net.indptr[u] : net.indptr[u + 1]].tolist() for u in range(n)]
    best_labels, best_q = None, -np.inf
    for child in np.random.SeedSequence(seed).spawn(max(restarts, 1)):
        labels = _propagate(adj, np.random.default_rng(child), max_sweeps)
        q = modularity(net, labels)
        if q > best_q:
            best_labels, best_q = labels, q
    groups: dict[int, list[int]] = defaultdict(list)
    for u, lab in enumerate(best_labels):
        groups[lab].append(u)
    # renumber by first member so names do not depend on label history
    ordered = sorted(groups.values(), key=lambda nodes: nodes[0])
    return CommunityAssignment.from_members(
        {str(i): nodes for i, nodes in enumerate(ordered)}, n, min_size
    )
