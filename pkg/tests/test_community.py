from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from transitnet import oracle
from transitnet.community import louvain, modularity, undirected_weights
from transitnet.errors import EmptyGraph, PartialAssignment
from transitnet.graph import from_edges
from transitnet.verify import random_digraph

TWO_TRIANGLES = [(0, 1, 1), (1, 2, 1), (2, 0, 1), (3, 4, 1), (4, 5, 1), (5, 3, 1)]


def cliques_with_bridge():
    edges = [(i, j, 1) for block in (range(4), range(4, 8)) for i in block for j in block if i < j]
    return edges + [(3, 4, 1)]


def test_modularity_hand_values():
    g = from_edges(TWO_TRIANGLES)
    assert modularity(g, {v: v // 3 for v in range(6)}) == 0.5
    assert modularity(g, {v: 0 for v in range(6)}) == 0.0
    assert oracle.brute_modularity(range(6), TWO_TRIANGLES, {v: v // 3 for v in range(6)}) == Fraction(1, 2)
    with pytest.raises(PartialAssignment):
        modularity(g, {0: 0})
    with pytest.raises(EmptyGraph):
        modularity(from_edges([]), {})


def test_projection_sums_both_directions_and_drops_loops():
    g = from_edges([("a", "b", 2), ("b", "a", 5), ("a", "a", 9)])
    a, b, w = undirected_weights(g)
    assert (a.tolist(), b.tolist(), w.tolist()) == ([0], [1], [7.0])


@given(st.integers(0, 2**32 - 1))
def test_modularity_matches_exact_double_sum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    edges = random_digraph(rng, n, 0.4, 6)
    if not edges:
        return
    g = from_edges(edges, nodes=range(n))
    labels = {v: int(rng.integers(0, 3)) for v in range(n)}
    assert abs(modularity(g, labels) - float(oracle.brute_modularity(range(n), edges, labels))) < 1e-12


def test_two_cliques_for_every_seed():
    g = from_edges(cliques_with_bridge())
    best, _ = oracle.brute_modularity_max(range(8), cliques_with_bridge())
    for seed in range(100):
        part = louvain(g, seed)
        assert part.n_communities == 2
        assert {frozenset(m) for m in part.members().values()} == {frozenset(range(4)), frozenset(range(4, 8))}
        assert part.modularity == pytest.approx(best, abs=1e-12)


def test_trivial_partitions():
    edgeless = louvain(from_edges([], nodes="abc"))
    assert edgeless.assignment == {"a": 0, "b": 1, "c": 2} and edgeless.modularity == 0.0
    tri = louvain(from_edges([("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]))
    assert set(tri.assignment.values()) == {0}
    with pytest.raises(EmptyGraph):
        louvain(from_edges([]))


def test_canonical_ids_and_stats():
    g = from_edges([(0, i, 1) for i in range(1, 5)] + [(5, 6, 1), (6, 7, 1), (7, 5, 1)])
    part = louvain(g, 3)
    assert part.assignment[0] == 0
    sizes = [c.size for c in part.communities]
    assert sizes == sorted(sizes, reverse=True)
    assert sorted(part.assignment.values()) == sorted(v for c in part.communities for v in [c.community] * c.size)
    star = next(c for c in part.communities if c.community == part.assignment[0])
    assert (star.size, star.average_degree) == (5, 1.6)


def test_same_seed_same_partition():
    rng = np.random.default_rng(1)
    g = from_edges(random_digraph(rng, 60, 0.08), nodes=range(60))
    assert louvain(g, 5).assignment == louvain(g, 5).assignment
