"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--nodes 3000]

Each row reports the best wall time of ``--repeat`` runs per backend and the
speedup. Both backends are checked to return identical results first.
"""
import argparse
import sys
import time

import numpy as np

from viralmeme import forest, kernels
from viralmeme.simgen import PlantedPartitionSpec, generate_network


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(args):
    size = args.nodes // 4
    net, _ = generate_network(PlantedPartitionSpec(community_size=size, p_in=20 / size,
                                                   p_out=1 / size, seed=1))
    rng = np.random.default_rng(2)
    nodes = rng.choice(net.node_count, 25, replace=False).astype(np.int64)
    yield "bfs (x50 sources)", lambda k: [
        k.bfs(net.indptr, net.indices, int(s), -1) for s in range(50)]
    yield "multi_source_bfs k=2", lambda k: k.multi_source_bfs(net.indptr, net.indices, nodes, 2)
    yield "pairwise_distances (25 nodes)", lambda k: k.pairwise_distances(
        net.indptr, net.indices, nodes)

    X = rng.normal(size=(args.rows, 13))
    X[rng.random(X.shape) < 0.02] = np.nan
    y = rng.integers(0, 3, args.rows)
    orders = np.ascontiguousarray(np.argsort(X[:, :5], axis=0, kind="stable").T)
    Xs = np.ascontiguousarray(X[:, :5])
    yield f"grow_tree ({args.rows} rows, 5 features)", lambda k: k.grow_tree(
        Xs, y, orders, 3, -1, 1, 5, 7)

    rf = forest.train(X, y, forest.ForestConfig(n_trees=100), seed=0)
    flat = rf._flatten()
    yield f"forest_votes (100 trees, {args.rows} rows)", lambda k: k.forest_votes(X, *flat, 3)


def same(a, b):
    if isinstance(a, (tuple, list)):
        return all(same(x, z) for x, z in zip(a, b))
    return np.array_equal(a, b, equal_nan=np.asarray(a).dtype.kind == "f")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--nodes", type=int, default=3000)
    ap.add_argument("--rows", type=int, default=1000)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled backend not available; build with `pip install -e . --no-build-isolation`",
              file=sys.stderr)
        return 1
    print(f"{'kernel':<36}{'cython s':>11}{'python s':>11}{'speedup':>9}")
    for name, run in cases(args):
        if not same(run(kernels.compiled), run(kernels.pure)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        tc = best_time(lambda: run(kernels.compiled), args.repeat)
        tp = best_time(lambda: run(kernels.pure), args.repeat)
        print(f"{name:<36}{tc:>11.4f}{tp:>11.4f}{tp / tc:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
