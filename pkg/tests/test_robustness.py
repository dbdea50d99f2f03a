import numpy as np
import pytest
from hypothesis import given, strategies as st

from transitnet.errors import GraphTooSmall
from transitnet.graph import from_edges, normalize_flows, remove_nodes
from transitnet.metrics import indicators
from transitnet.robustness import INDICATOR_FIELDS, removal_sweep, robustness_test
from transitnet.verify import random_digraph


def star_and_pair():
    edges = [(0, i, 10 * i - 9) for i in range(1, 6)] + [("a", "b", 7), ("b", "a", 3)]
    return normalize_flows(from_edges([(str(u), str(v), f) for u, v, f in edges]))


def test_star_center_removal():
    g = star_and_pair()
    rep = robustness_test(g, 1, "star")
    assert rep.removed_nodes == ["0"] and rep.k == 1
    assert rep.after.efficiency < rep.before.efficiency
    assert rep.after.scc_count == len(g.nodes) - 1 - 1
    assert rep.after == indicators(remove_nodes(g, {"0"}))
    d, pct = rep.deltas["efficiency"]
    assert d == rep.after.efficiency - rep.before.efficiency and pct == pytest.approx(100 * d / rep.before.efficiency)


def test_zero_removal_is_identity():
    g = star_and_pair()
    (rep,) = removal_sweep(g, [0])
    assert rep.before == rep.after and rep.removed_nodes == []
    assert all(rep.deltas[f][0] in (0, None) for f in INDICATOR_FIELDS)


def test_removing_whole_largest_scc_leaves_paths_undefined():
    g = normalize_flows(from_edges([("a", "b", 1), ("b", "a", 2), ("c", "d", 3)]))
    (rep,) = removal_sweep(g, [2], strategy="degree")
    assert set(rep.removed_nodes) == {"a", "b"}
    assert rep.after.avg_shortest_path is None and rep.deltas["avg_shortest_path"] == (None, None)
    assert rep.after.efficiency is not None


def test_nested_removals_and_seeded_random():
    path = normalize_flows(from_edges([(i, i + 1, i + 1) for i in range(6)]))
    r1, r2 = removal_sweep(path, [1, 2])
    assert set(r1.removed_nodes) < set(r2.removed_nodes)
    a = removal_sweep(path, [3], "random", seed=11)
    b = removal_sweep(path, [3], "random", seed=11)
    assert a[0].removed_nodes == b[0].removed_nodes and a[0].after == b[0].after


def test_size_guards():
    g = normalize_flows(from_edges([("a", "b", 1), ("b", "c", 2)]))
    with pytest.raises(GraphTooSmall):
        robustness_test(g, 3)
    with pytest.raises(ValueError):
        removal_sweep(g, [1], strategy="oracle")


def _rebuild_reduced(edges, removed, bounds, universe):
    kept = [(u, v, f) for u, v, f in edges if u not in removed and v not in removed]
    return normalize_flows(from_edges(kept, nodes=[v for v in universe if v not in removed]), bounds)


@given(st.integers(0, 2**32 - 1))
def test_after_equals_rebuilt_network(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 25))
    edges = random_digraph(rng, n, float(rng.uniform(0.1, 0.4)), 40)
    g = from_edges(edges, nodes=range(n))
    if g.m < 2 or g.flow.min() == g.flow.max():
        return
    g = normalize_flows(g)
    k = int(rng.integers(1, min(5, n - 1)))
    rep = robustness_test(g, k)
    assert rep.after == indicators(_rebuild_reduced(edges, set(rep.removed_nodes), g.flow_bounds, range(n)))
