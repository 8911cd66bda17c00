import io
import random
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import modularity_dense, random_edges, set_partitions
from viralmeme.community import (
    CommunityAssignment, detect_label_propagation, load_assignments, modularity,
)
from viralmeme.graph import Network, ParseError, load_network


def make(n, edges):
    return Network.from_edges([f"n{i}" for i in range(n)], edges)


def two_cliques():
    edges = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    edges += [(i + 5, j + 5) for i in range(5) for j in range(i + 1, 5)]
    return make(10, edges + [(4, 5)]), edges + [(4, 5)]


def test_load_two_groups_full_coverage():
    net = load_network(["a b", "c d", "e f"])
    ca = load_assignments(["a\t1", "b\t1", "c\t1", "d\t2", "e\t2", "f\t2"], net)
    assert ca.n_communities == 2
    assert ca.coverage == 1.0
    assert ca.is_disjoint


def test_small_community_filtered():
    net = load_network(["a b", "c d", "d e"])
    ca = load_assignments(["a\tx", "b\tx", "c\tx", "d\ty", "e\ty"], net)
    assert ca.n_communities == 1
    assert ca.coverage == pytest.approx(3 / 5)
    assert ca.communities_of(net.index["d"]) == ()


def test_overlap_membership():
    net = load_network(["a b", "b c", "c d"])
    lines = ["a\tx", "b\tx", "c\tx", "b\ty", "c\ty", "d\ty"]
    ca = load_assignments(lines, net)
    assert len(ca.communities_of(net.index["b"])) == 2
    assert not ca.is_disjoint


def test_unknown_label_reports_line():
    net = load_network(["a b"])
    with pytest.raises(ParseError) as err:
        load_assignments(["a\t1", "zz\t1"], net)
    assert err.value.line == 2


def test_malformed_line():
    net = load_network(["a b"])
    with pytest.raises(ParseError):
        load_assignments(["a 1"], net)


def test_empty_after_filter_warns():
    net = load_network(["a b"])
    with pytest.warns(UserWarning):
        ca = load_assignments(["a\t1", "b\t1"], net)
    assert ca.n_communities == 0


def test_write_round_trip():
    net, _ = two_cliques()
    ca = detect_label_propagation(net, seed=1)
    buf = io.StringIO()
    ca.write(buf, net)
    again = load_assignments(io.StringIO(buf.getvalue()), net)
    assert again.membership == ca.membership


@given(st.lists(st.tuples(st.integers(0, 29), st.integers(0, 5)), max_size=80),
       st.integers(1, 5))
def test_retained_communities_meet_min_size(pairs, min_size):
    members = {}
    for u, c in pairs:
        members.setdefault(str(c), set()).add(u)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ca = CommunityAssignment.from_members(members, 30, min_size)
    assert all(s >= min_size for s in ca.community_sizes)
    assert sum(ca.community_sizes) == sum(len(c) for c in ca.membership)
    assert 0.0 <= ca.coverage <= 1.0


def test_modularity_matches_dense_oracle():
    rng = random.Random(2)
    for _ in range(20):
        n = rng.randint(3, 25)
        edges = random_edges(n, 0.3, rng)
        if not edges:
            continue
        labels = [rng.randrange(3) for _ in range(n)]
        groups = [[u for u in range(n) if labels[u] == g] for g in range(3)]
        assert modularity(make(n, edges), labels) == pytest.approx(
            modularity_dense(n, edges, [g for g in groups if g]), abs=1e-12
        )


def test_two_cliques_match_exhaustive_modularity_optimum():
    net, edges = two_cliques()
    A = np.zeros((10, 10))
    for a, b in edges:
        A[a, b] = A[b, a] = 1
    k = A.sum(axis=1)
    B = A - np.outer(k, k) / k.sum()
    best, best_q = None, -np.inf
    count = 0
    for part in set_partitions(list(range(10))):
        count += 1
        q = sum(B[np.ix_(g, g)].sum() for g in part) / k.sum()
        if q > best_q + 1e-12:
            best, best_q = part, q
    assert count == 115975
    optimum = sorted(sorted(g) for g in best)
    for seed in range(25):
        ca = detect_label_propagation(net, seed=seed)
        assert sorted(ca.members().values()) == optimum


def test_complete_graph_single_community():
    net = make(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
    ca = detect_label_propagation(net, seed=0)
    assert ca.n_communities == 1
    assert ca.coverage == 1.0


def test_edgeless_graph_has_no_communities():
    with pytest.warns(UserWarning):
        ca = detect_label_propagation(make(6, []), seed=0)
    assert ca.n_communities == 0


def test_detection_deterministic_and_disjoint():
    rng = random.Random(5)
    edges = random_edges(60, 0.08, rng)
    net = make(60, edges)
    a = detect_label_propagation(net, seed=11)
    b = detect_label_propagation(net, seed=11)
    assert a.membership == b.membership
    assert a.is_disjoint


def test_out_of_range_node_is_unassigned():
    net, _ = two_cliques()
    ca = detect_label_propagation(net, seed=0)
    assert ca.communities_of(99) == ()
