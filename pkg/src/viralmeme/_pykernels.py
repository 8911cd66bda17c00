"""Pure-Python implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation so both backends grow
byte-identical trees and return identical distances. They are used when the
compiled extension is unavailable or ``VIRALMEME_PURE=1`` is set.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

_MASK64 = (1 << 64) - 1


def bfs(indptr, indices, source, max_depth=-1):
    n = len(indptr) - 1
    dist = [-1] * n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        if max_depth >= 0 and du >= max_depth:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] < 0:
                dist[v] = du + 1
                queue.append(v)
    return np.asarray(dist, dtype=np.int32)


def multi_source_bfs(indptr, indices, sources, max_depth=-1):
    n = len(indptr) - 1
    dist = [-1] * n
    queue = deque()
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if max_depth >= 0 and du >= max_depth:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] < 0:
                dist[v] = du + 1
                queue.append(v)
    return np.asarray(dist, dtype=np.int32)


def pairwise_distances(indptr, indices, nodes):
    nodes = [int(v) for v in nodes]
    k = len(nodes)
    out = np.full((k, k), -1, dtype=np.int32)
    n = len(indptr) - 1
    for a, src in enumerate(nodes):
        dist = [-1] * n
        dist[src] = 0
        wanted = set(nodes)
        wanted.discard(src)
        queue = deque([src])
        while queue and wanted:
            u = queue.popleft()
            for j in range(indptr[u], indptr[u + 1]):
                v = indices[j]
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    wanted.discard(v)
                    queue.append(v)
        for b, dst in enumerate(nodes):
            out[a, b] = dist[dst]
    return out


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def grow_tree(Xs, ys, orders, n_classes, max_depth, min_leaf, split_k, seed):
    """Grow one CART tree on a presorted sample.

    ``Xs`` holds the sampled rows restricted to the tree's candidate columns,
    ``orders[j]`` is a stable argsort of column ``j`` with NaN last. Returns
    ``(feature, threshold, missing_left, left, right, hist)`` where
    ``feature`` indexes columns of ``Xs`` and is -1 at leaves.
    """
    m, f = Xs.shape
    X = Xs.tolist()
    y = [int(c) for c in ys]
    orders = [list(map(int, row)) for row in orders]
    cap = max(2 * m, 1)
    feature = [-1] * cap
    threshold = [0.0] * cap
    missing_left = [0] * cap
    left = [-1] * cap
    right = [-1] * cap
    hist = [[0] * n_classes for _ in range(cap)]
    goes_left = [0] * m
    state = seed & _MASK64
    split_k = min(split_k, f)
    n_nodes = 1
    stack = [(0, 0, m, 0)]
    while stack:
        node, start, end, depth = stack.pop()
        n = end - start
        counts = hist[node]
        for i in range(start, end):
            counts[y[orders[0][i]]] += 1
        nonzero = sum(1 for c in counts if c > 0)
        if nonzero <= 1 or n < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue

        cand = list(range(f))
        if split_k < f:
            for i in range(split_k):
                state, r = _splitmix64(state)
                j = i + r % (f - i)
                cand[i], cand[j] = cand[j], cand[i]
            cand = cand[:split_k]

        best_score = -1.0
        best_j = -1
        best_thr = 0.0
        best_nl = 0
        best_nr = 0
        for j in cand:
            row = orders[j]
            mf = 0
            while mf < n and not math.isnan(X[row[start + mf]][j]):
                mf += 1
            if mf < 2 * min_leaf:
                continue
            lc = [0] * n_classes
            rc = [0] * n_classes
            for i in range(start, start + mf):
                rc[y[row[i]]] += 1
            sumsq_l = 0
            sumsq_r = sum(c * c for c in rc)
            for i in range(mf - 1):
                s = row[start + i]
                c = y[s]
                sumsq_l += 2 * lc[c] + 1
                lc[c] += 1
                sumsq_r -= 2 * rc[c] - 1
                rc[c] -= 1
                n_l = i + 1
                n_r = mf - n_l
                v = X[s][j]
                vn = X[row[start + i + 1]][j]
                if v < vn and n_l >= min_leaf and n_r >= min_leaf:
                    score = sumsq_l / n_l + sumsq_r / n_r
                    if score > best_score:
                        best_score = score
                        best_j = j
                        thr = (v + vn) / 2.0
                        if thr >= vn:
                            thr = v
                        best_thr = thr
                        best_nl = n_l
                        best_nr = n_r
        if best_j < 0:
            continue

        miss_left = 1 if best_nl >= best_nr else 0
        row = orders[best_j]
        n_left = 0
        for i in range(start, end):
            s = row[i]
            v = X[s][best_j]
            if math.isnan(v):
                g = miss_left
            else:
                g = 1 if v <= best_thr else 0
            goes_left[s] = g
            n_left += g
        for j in range(f):
            seg = orders[j][start:end]
            orders[j][start:end] = [s for s in seg if goes_left[s]] + [
                s for s in seg if not goes_left[s]
            ]

        lid, rid = n_nodes, n_nodes + 1
        n_nodes += 2
        feature[node] = best_j
        threshold[node] = best_thr
        missing_left[node] = miss_left
        left[node] = lid
        right[node] = rid
        stack.append((rid, start + n_left, end, depth + 1))
        stack.append((lid, start, start + n_left, depth + 1))

    return (
        np.asarray(feature[:n_nodes], dtype=np.int32),
        np.asarray(threshold[:n_nodes], dtype=np.float64),
        np.asarray(missing_left[:n_nodes], dtype=np.uint8),
        np.asarray(left[:n_nodes], dtype=np.int32),
        np.asarray(right[:n_nodes], dtype=np.int32),
        np.asarray(hist[:n_nodes], dtype=np.int64).reshape(n_nodes, n_classes),
    )


def forest_votes(X, feature, threshold, missing_left, left, right, leaf_class, roots, n_classes):
    """Per-row vote counts over flattened trees (child indices are global)."""
    X = np.asarray(X, dtype=np.float64)
    votes = np.zeros((X.shape[0], n_classes), dtype=np.int64)
    feature = feature.tolist()
    threshold = threshold.tolist()
    missing_left = missing_left.tolist()
    left = left.tolist()
    right = right.tolist()
    leaf_class = leaf_class.tolist()
    for r, x in enumerate(X.tolist()):
        for root in roots:
            node = int(root)
            while feature[node] >= 0:
                v = x[feature[node]]
                if math.isnan(v):
                    go_left = missing_left[node]
                else:
                    go_left = v <= threshold[node]
                node = left[node] if go_left else right[node]
            votes[r, leaf_class[node]] += 1
    return votes
