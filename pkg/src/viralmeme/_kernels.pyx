# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: BFS variants, CART tree growth and forest voting.

Semantics match ``_pykernels`` exactly; see that module for the reference.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport isnan
from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t

cnp.import_array()


cdef void _bfs_into(const int64_t[::1] indptr, const int64_t[::1] indices,
                    int32_t[::1] dist, int64_t[::1] queue, int64_t head,
                    int64_t tail, int max_depth) noexcept nogil:
    cdef int64_t u, v, k, du
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        if max_depth >= 0 and du >= max_depth:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] < 0:
                dist[v] = du + 1
                queue[tail] = v
                tail += 1


def bfs(const int64_t[::1] indptr, const int64_t[::1] indices, int64_t source,
        int max_depth=-1):
    cdef int64_t n = indptr.shape[0] - 1
    dist_arr = np.full(n, -1, dtype=np.int32)
    cdef int32_t[::1] dist = dist_arr
    cdef int64_t[::1] queue = np.empty(max(n, 1), dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    with nogil:
        _bfs_into(indptr, indices, dist, queue, 0, 1, max_depth)
    return dist_arr


def multi_source_bfs(const int64_t[::1] indptr, const int64_t[::1] indices,
                     sources, int max_depth=-1):
    cdef int64_t n = indptr.shape[0] - 1
    dist_arr = np.full(n, -1, dtype=np.int32)
    cdef int32_t[::1] dist = dist_arr
    cdef int64_t[::1] queue = np.empty(max(n, 1), dtype=np.int64)
    cdef int64_t tail = 0
    cdef int64_t s
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    with nogil:
        _bfs_into(indptr, indices, dist, queue, 0, tail, max_depth)
    return dist_arr


def pairwise_distances(const int64_t[::1] indptr, const int64_t[::1] indices, nodes):
    cdef int64_t[::1] targets = np.ascontiguousarray(nodes, dtype=np.int64)
    cdef int64_t k = targets.shape[0]
    cdef int64_t n = indptr.shape[0] - 1
    out_arr = np.full((k, k), -1, dtype=np.int32)
    cdef int32_t[:, ::1] out = out_arr
    cdef int32_t[::1] dist = np.full(n, -1, dtype=np.int32)
    cdef uint8_t[::1] is_target = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] queue = np.empty(max(n, 1), dtype=np.int64)
    cdef int64_t a, b, u, v, j, remaining, n_distinct = 0
    cdef int64_t head = 0, tail = 0
    with nogil:
        for a in range(k):
            if is_target[targets[a]] == 0:
                is_target[targets[a]] = 1
                n_distinct += 1
        for a in range(k):
            for j in range(tail):
                dist[queue[j]] = -1
            dist[targets[a]] = 0
            queue[0] = targets[a]
            head = 0
            tail = 1
            remaining = n_distinct - 1
            while head < tail and remaining > 0:
                u = queue[head]
                head += 1
                for j in range(indptr[u], indptr[u + 1]):
                    v = indices[j]
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        if is_target[v]:
                            remaining -= 1
                        queue[tail] = v
                        tail += 1
            for b in range(k):
                out[a, b] = dist[targets[b]]
    return out_arr


cdef inline uint64_t _splitmix64(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef int64_t _grow(const double[:, ::1] X, const int64_t[::1] y, int64_t[:, ::1] orders,
                   int n_classes, int max_depth, int min_leaf, int split_k, uint64_t seed,
                   int32_t[::1] feature, double[::1] threshold, uint8_t[::1] missing_left,
                   int32_t[::1] left, int32_t[::1] right, int64_t[:, ::1] hist,
                   int64_t[::1] lc, int64_t[::1] rc, int64_t[::1] cand,
                   uint8_t[::1] goes_left, int64_t[::1] buf,
                   int64_t[:, ::1] stack) noexcept nogil:
    cdef int64_t m = X.shape[0]
    cdef int64_t f = X.shape[1]
    cdef uint64_t state = seed
    cdef int64_t n_nodes = 1, top = 0
    cdef int64_t node, start, end, depth, n, i, j, jj, c, s, mf, n_l, n_r, nonzero
    cdef int64_t best_j, best_nl, best_nr, n_left, kk, lid, rid, tmp, pos_l, pos_r
    cdef int64_t sumsq_l, sumsq_r
    cdef double best_score, best_thr, score, v, vn, thr
    cdef uint8_t miss_left, g
    cdef int64_t n_cand

    if split_k > f:
        split_k = <int>f
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n = end - start
        for i in range(start, end):
            hist[node, y[orders[0, i]]] += 1
        nonzero = 0
        for c in range(n_classes):
            if hist[node, c] > 0:
                nonzero += 1
        if nonzero <= 1 or n < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue

        for j in range(f):
            cand[j] = j
        n_cand = f
        if split_k < f:
            for i in range(split_k):
                kk = i + <int64_t>(_splitmix64(&state) % <uint64_t>(f - i))
                tmp = cand[i]
                cand[i] = cand[kk]
                cand[kk] = tmp
            n_cand = split_k

        best_score = -1.0
        best_j = -1
        best_thr = 0.0
        best_nl = 0
        best_nr = 0
        for jj in range(n_cand):
            j = cand[jj]
            mf = 0
            while mf < n and not isnan(X[orders[j, start + mf], j]):
                mf += 1
            if mf < 2 * min_leaf:
                continue
            for c in range(n_classes):
                lc[c] = 0
                rc[c] = 0
            for i in range(start, start + mf):
                rc[y[orders[j, i]]] += 1
            sumsq_l = 0
            sumsq_r = 0
            for c in range(n_classes):
                sumsq_r += rc[c] * rc[c]
            for i in range(mf - 1):
                s = orders[j, start + i]
                c = y[s]
                sumsq_l += 2 * lc[c] + 1
                lc[c] += 1
                sumsq_r -= 2 * rc[c] - 1
                rc[c] -= 1
                n_l = i + 1
                n_r = mf - n_l
                v = X[s, j]
                vn = X[orders[j, start + i + 1], j]
                if v < vn and n_l >= min_leaf and n_r >= min_leaf:
                    score = <double>sumsq_l / <double>n_l + <double>sumsq_r / <double>n_r
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
        n_left = 0
        for i in range(start, end):
            s = orders[best_j, i]
            v = X[s, best_j]
            if isnan(v):
                g = miss_left
            else:
                g = 1 if v <= best_thr else 0
            goes_left[s] = g
            n_left += g
        for j in range(f):
            pos_l = 0
            pos_r = n_left
            for i in range(start, end):
                s = orders[j, i]
                if goes_left[s]:
                    buf[pos_l] = s
                    pos_l += 1
                else:
                    buf[pos_r] = s
                    pos_r += 1
            for i in range(n):
                orders[j, start + i] = buf[i]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = <int32_t>best_j
        threshold[node] = best_thr
        missing_left[node] = miss_left
        left[node] = <int32_t>lid
        right[node] = <int32_t>rid
        stack[top, 0] = rid
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lid
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1
    return n_nodes


def grow_tree(Xs, ys, orders, int n_classes, int max_depth, int min_leaf, int split_k,
              seed):
    cdef const double[:, ::1] X = np.ascontiguousarray(Xs, dtype=np.float64)
    cdef const int64_t[::1] y = np.ascontiguousarray(ys, dtype=np.int64)
    cdef int64_t[:, ::1] ords = np.array(orders, dtype=np.int64, order="C", copy=True)
    cdef int64_t m = X.shape[0]
    cdef int64_t f = X.shape[1]
    cdef int64_t cap = max(2 * m, 1)
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    missing_left = np.zeros(cap, dtype=np.uint8)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    hist = np.zeros((cap, n_classes), dtype=np.int64)
    cdef int64_t[::1] lc = np.zeros(n_classes, dtype=np.int64)
    cdef int64_t[::1] rc = np.zeros(n_classes, dtype=np.int64)
    cdef int64_t[::1] cand = np.zeros(max(f, 1), dtype=np.int64)
    cdef uint8_t[::1] goes_left = np.zeros(max(m, 1), dtype=np.uint8)
    cdef int64_t[::1] buf = np.zeros(max(m, 1), dtype=np.int64)
    cdef int64_t[:, ::1] stack = np.zeros((cap + 2, 4), dtype=np.int64)
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef int32_t[::1] feature_v = feature
    cdef double[::1] threshold_v = threshold
    cdef uint8_t[::1] missing_v = missing_left
    cdef int32_t[::1] left_v = left
    cdef int32_t[::1] right_v = right
    cdef int64_t[:, ::1] hist_v = hist
    cdef int64_t n_nodes
    if m == 0:
        n_nodes = 1
    else:
        with nogil:
            n_nodes = _grow(X, y, ords, n_classes, max_depth, min_leaf, split_k, useed,
                            feature_v, threshold_v, missing_v, left_v, right_v, hist_v,
                            lc, rc, cand, goes_left, buf, stack)
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(),
            missing_left[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), hist[:n_nodes].copy())


def forest_votes(Xin, const int32_t[::1] feature, const double[::1] threshold,
                 const uint8_t[::1] missing_left, const int32_t[::1] left,
                 const int32_t[::1] right, const int32_t[::1] leaf_class,
                 const int64_t[::1] roots, int n_classes):
    cdef const double[:, ::1] X = np.ascontiguousarray(Xin, dtype=np.float64)
    cdef int64_t r_count = X.shape[0]
    cdef int64_t t_count = roots.shape[0]
    votes_arr = np.zeros((r_count, n_classes), dtype=np.int64)
    cdef int64_t[:, ::1] votes = votes_arr
    cdef int64_t r, t, node
    cdef double v
    cdef bint go_left
    with nogil:
        for r in range(r_count):
            for t in range(t_count):
                node = roots[t]
                while feature[node] >= 0:
                    v = X[r, feature[node]]
                    if isnan(v):
                        go_left = missing_left[node]
                    else:
                        go_left = v <= threshold[node]
                    if go_left:
                        node = left[node]
                    else:
                        node = right[node]
                votes[r, leaf_class[node]] += 1
    return votes_arr
