"""Immutable undirected network over dense integer ids.

Adjacency is stored in CSR form (``indptr``/``indices``) so the BFS kernels
can walk it without Python overhead. External node labels only appear at the
I/O boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np

from . import kernels


class GraphError(ValueError):
    """Invalid node id or malformed graph input."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class _Unreachable:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNREACHABLE"

    def __reduce__(self):
        return (_Unreachable, ())


UNREACHABLE = _Unreachable()


@dataclass(frozen=True, eq=False)
class Network:
    labels: tuple[str, ...]
    indptr: np.ndarray
    indices: np.ndarray
    index: dict[str, int] = field(repr=False)

    @classmethod
    def from_edges(cls, labels: Iterable[str], edges: Iterable[tuple[int, int]]) -> "Network":
        """Build from dense-id edge pairs; duplicates and reversed pairs collapse."""
        labels = tuple(labels)
        n = len(labels)
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(pairs) and (pairs.min() < 0 or pairs.max() >= n):
            raise GraphError("edge endpoint outside [0, node_count)")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise GraphError("self-loops are not allowed")
        both = np.concatenate([pairs, pairs[:, ::-1]])
        if len(both):
            both = np.unique(both, axis=0)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        np.cumsum(indptr, out=indptr)
        indices = np.ascontiguousarray(both[:, 1], dtype=np.int64)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != n:
            raise GraphError("node labels must be unique")
        return cls(labels, indptr, indices, index)

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        self._check(u)
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def node_id(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise GraphError(f"unknown node label {label!r}") from None

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.node_count):
            for v in self.neighbors(u):
                if u < v:
                    yield u, int(v)

    def with_nodes(self, labels: Iterable[str]) -> "Network":
        """Return a network extended by unknown labels as isolated nodes.

        Existing dense ids are preserved, so assignments built on this
        network stay valid on the result.
        """
        extra = []
        seen = set(self.index)
        for lab in labels:
            if lab not in seen:
                seen.add(lab)
                extra.append(lab)
        if not extra:
            return self
        all_labels = self.labels + tuple(extra)
        indptr = np.concatenate(
            [self.indptr, np.full(len(extra), self.indptr[-1], dtype=np.int64)]
        )
        indptr.setflags(write=False)
        index = dict(self.index)
        index.update((lab, i) for i, lab in enumerate(extra, start=self.node_count))
        return Network(all_labels, indptr, self.indices, index)

    def write_edge_list(self, out: IO[str]) -> None:
        for u, v in self.edges():
            out.write(f"{self.labels[u]}\t{self.labels[v]}\n")

    def _check(self, u) -> None:
        if not (isinstance(u, (int, np.integer)) and 0 <= u < self.node_count):
            raise GraphError(f"invalid node id {u!r}")


def load_network(lines: Iterable[str]) -> Network:
    """Parse an edge list: two whitespace-separated labels per line.

    Blank lines and ``#`` comments are skipped. Dense ids follow first-seen
    order.
    """
    index: dict[str, int] = {}
    labels: list[str] = []
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 2 node labels, got {len(parts)}", lineno)
        a, b = parts
        if a == b:
            raise ParseError(f"self-loop on {a!r}", lineno)
        ids = []
        for lab in (a, b):
            if lab not in index:
                index[lab] = len(labels)
                labels.append(lab)
            ids.append(index[lab])
        edges.append((ids[0], ids[1]))
    return Network.from_edges(labels, edges)


def read_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return load_network(fh)


def distances_from(net: Network, u: int, max_depth: int = -1) -> np.ndarray:
    """Hop counts from ``u`` to every node, -1 where unreachable."""
    net._check(u)
    return kernels.bfs(net.indptr, net.indices, int(u), max_depth)


def shortest_path_length(net: Network, u: int, v: int):
    net._check(u)
    net._check(v)
    if u == v:
        return 0
    d = int(distances_from(net, u)[v])
    return UNREACHABLE if d < 0 else d


def pairwise_distances(net: Network, nodes) -> np.ndarray:
    """Distance matrix among ``nodes`` (-1 marks unreachable pairs)."""
    nodes = [int(v) for v in nodes]
    for v in nodes:
        net._check(v)
    if not nodes:
        return np.zeros((0, 0), dtype=np.int32)
    return kernels.pairwise_distances(net.indptr, net.indices, np.asarray(nodes, dtype=np.int64))


def diameter(net: Network, nodes=None):
    """Largest distance between two of ``nodes`` (all nodes by default).

    Unreachable if any pair is disconnected; 0 for fewer than two nodes.
    """
    if nodes is None:
        nodes = range(net.node_count)
    d = pairwise_distances(net, list(dict.fromkeys(int(v) for v in nodes)))
    if d.size == 0:
        return 0
    if (d < 0).any():
        return UNREACHABLE
    return int(d.max())


def surface(net: Network, seeds: Iterable[int], k: int = 1) -> set[int]:
    """Nodes within ``k`` hops of ``seeds``, excluding the seeds themselves."""
    seeds = list(seeds)
    if k < 1:
        raise GraphError("surface order k must be >= 1")
    for s in seeds:
        net._check(s)
    if not seeds:
        return set()
    dist = kernels.multi_source_bfs(
        net.indptr, net.indices, np.asarray(seeds, dtype=np.int64), k
    )
    return set(np.flatnonzero(dist > 0).tolist())


def surface_size(net: Network, seeds: Iterable[int], k: int = 1) -> int:
    return len(surface(net, seeds, k))


def pagerank(
    net: Network, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 200
) -> np.ndarray:
    """Power-iteration PageRank with uniform teleport.

    Degree-0 nodes spread their mass uniformly. Converged when the L1 change
    between iterates drops below ``tol``.
    """
    if not 0.0 < damping < 1.0:
        raise GraphError("damping must lie in (0, 1)")
    if tol <= 0:
        raise GraphError("tol must be positive")
    n = net.node_count
    if n == 0:
        return np.zeros(0)
    deg = net.degree().astype(np.float64)
    rows = np.repeat(np.arange(n), net.degree())
    dangling = deg == 0
    inv_deg = np.divide(1.0, deg, out=np.zeros(n), where=~dangling)
    x = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iter):
        spread = np.bincount(rows, weights=(x * inv_deg)[net.indices], minlength=n)
        x_new = damping * spread + (damping * x[dangling].sum() + (1.0 - damping)) / n
        residual = float(np.abs(x_new - x).sum())
        x = x_new
        if residual < tol:
            return x
    raise ConvergenceError(f"pagerank did not converge in {max_iter} iterations", residual)
