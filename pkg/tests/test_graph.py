from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from transitnet.errors import DegenerateFlows, UnmappedStation
from transitnet.graph import build_network, from_edges, normalize_flows, remove_nodes
from transitnet.ingest import Leg, Mode
from transitnet.preprocess import TravelChain

T = datetime(2018, 3, 1, 6, 52)


def chain(*names):
    return TravelChain("p", tuple(Leg(Mode.SUBWAY, "1", i, n, T + timedelta(minutes=10 * i)) for i, n in enumerate(names)))


def test_build_consecutive_and_first_last():
    g = build_network([chain("SiHui", "Liyuan")])
    assert g.edge_flows() == {("SiHui", "Liyuan"): 1}
    assert build_network([chain("SiHui", "Liyuan")] * 2).edge_flows() == {("SiHui", "Liyuan"): 2}
    assert build_network([chain("A", "B", "C")]).edge_flows() == {("A", "B"): 1, ("B", "C"): 1}
    assert build_network([chain("A", "B", "C")], mode="first-last").edge_flows() == {("A", "C"): 1}
    with pytest.raises(ValueError):
        build_network([], mode="zigzag")


def test_build_with_node_map_keeps_self_loops():
    g = build_network([chain("Si Hui", "Si Hui East", "Far")], {"Si Hui": 0, "Si Hui East": 0, "Far": 3})
    assert g.edge_flows() == {(0, 0): 1, (0, 3): 1}
    assert g.csr()[1].tolist() == [1]
    with pytest.raises(UnmappedStation):
        build_network([chain("A", "B")], {"A": 0})


def test_published_normalization_ratio():
    g = normalize_flows(from_edges([("Si Hui Hub", "Si Hui Hub", 37180), ("Si Hui", "Si Hui Hub", 24100), ("x", "y", 1)]))
    f = {(u, v): w for u, v, _, w in g.edges()}
    assert f[("Si Hui Hub", "Si Hui Hub")] == 1.0
    assert abs(f[("Si Hui", "Si Hui Hub")] - 0.6481885) < 1e-4
    assert f[("x", "y")] == 0.0


def test_week_bounds_reproduce_high_frequency_table():
    # high-frequency week-1 values are only reproduced with the low-frequency network's (1, 37180) range
    hf = from_edges([("H", "H", 16722), ("S", "H", 11497), ("H", "S", 6852), ("H", "T", 5821)])
    got = [w for *_, w in normalize_flows(hf, (1, 37180)).edges()]
    ref = {16722: 0.449743, 11497: 0.309207, 6852: 0.184271, 5821: 0.15654}
    assert np.allclose(got, [ref[f] for f in hf.flow.tolist()], atol=5e-7)
    own = [w for *_, w in normalize_flows(hf).edges()]
    assert max(own) == 1.0


@given(st.lists(st.integers(0, 10**6), min_size=2, max_size=50).filter(lambda xs: min(xs) != max(xs)))
def test_min_max_exact(flows):
    g = normalize_flows(from_edges([(i, i + 1, f) for i, f in enumerate(flows)]))
    assert g.normalized.max() == 1.0 and g.normalized.min() == 0.0
    assert np.all((g.normalized >= 0) & (g.normalized <= 1))


def test_degenerate_flows():
    with pytest.raises(DegenerateFlows):
        normalize_flows(from_edges([("a", "b", 3), ("b", "c", 3)]))
    with pytest.raises(DegenerateFlows):
        normalize_flows(from_edges([], nodes=["a"]))


def test_remove_nodes():
    star = from_edges([(0, i, 1) for i in range(1, 5)])
    rest = remove_nodes(star, {0})
    assert rest.nodes == (1, 2, 3, 4) and rest.m == 0
    path = normalize_flows(from_edges([("A", "B", 1), ("B", "C", 3)]))
    same = remove_nodes(path, set())
    assert same.nodes == path.nodes and same.edge_flows() == path.edge_flows()
    bc = remove_nodes(path, {"A", "Z"})
    assert list(bc.edges()) == [("B", "C", 3, 1.0)] and bc.flow_bounds == (1, 3)


def test_distances():
    g = normalize_flows(from_edges([("a", "b", 1), ("b", "c", 5)]))
    assert g.distances().tolist() == [1e-9, 1.0]
    assert g.distances(epsilon=1e-3).tolist() == [1e-3, 1.0]
    assert g.distances(invert=True).tolist() == [1.0, 0.2]
    with pytest.raises(ValueError):
        from_edges([("a", "b", 1)]).distances()


def test_from_edges_partial_normalized_rejected():
    with pytest.raises(ValueError):
        from_edges([("a", "b", 1, 0.5), ("b", "c", 2)])


def test_arrays_are_read_only():
    g = from_edges([("a", "b", 1)])
    with pytest.raises(ValueError):
        g.flow[0] = 9
