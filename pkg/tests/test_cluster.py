import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from transitnet import kernels
from transitnet.cluster import aggregate_nodes, assign_point, cluster_catalog, kmeans_fit, station_node_map
from transitnet.errors import EmptyInput, KTooLarge
from transitnet.ingest import load_station_catalog

FOUR = [(0, 0), (0, 1), (10, 0), (10, 1)]


def _best_two_partition(pts):
    pts = np.asarray(pts, float)
    best = np.inf
    for mask in itertools.product([0, 1], repeat=len(pts)):
        m = np.array(mask, bool)
        if m.all() or not m.any():
            continue
        best = min(best, sum(((g - g.mean(0)) ** 2).sum() for g in (pts[m], pts[~m])))
    return best


def test_four_points_reach_exhaustive_optimum():
    assert _best_two_partition(FOUR) == 1.0
    for seed in range(20):
        m = kmeans_fit(FOUR, 2, seed=seed, init="k-means++")
        assert m.inertia == 1.0
        assert sorted(map(tuple, m.centroids.tolist())) == [(0.0, 0.5), (10.0, 0.5)]
        assert m.labels[0] == m.labels[1] != m.labels[2] == m.labels[3]


def test_edge_values_of_k():
    pts = [(1.0, 2.0), (3.0, 5.0), (4.0, -1.0)]
    m = kmeans_fit(pts, 3, seed=7)
    assert m.inertia == 0.0 and sorted(m.labels.tolist()) == [0, 1, 2]
    one = kmeans_fit(pts, 1)
    assert np.allclose(one.centroids[0], np.mean(pts, axis=0)) and set(one.labels.tolist()) == {0}
    with pytest.raises(KTooLarge):
        kmeans_fit(pts, 4)
    with pytest.raises(KTooLarge):
        kmeans_fit(pts, 0)
    with pytest.raises(EmptyInput):
        kmeans_fit([], 1)


def test_assign_point_ties_and_nearest():
    m = kmeans_fit(FOUR, 2, seed=0, init="k-means++")
    m.centroids = np.array([[0.0, 0.0], [0.0, 1.0], [5.0, 5.0], [7.0, 7.0]])
    assert assign_point((7.0, 7.0), m) == 3
    assert assign_point((0.0, 0.5), m) == 0
    assert assign_point((0.0, 0.4), m) == 0


@given(st.integers(0, 10_000))
def test_deterministic_and_monotone(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(60, 2))
    a = kmeans_fit(pts, 5, seed=seed)
    b = kmeans_fit(pts, 5, seed=seed)
    assert np.array_equal(a.labels, b.labels) and np.array_equal(a.centroids, b.centroids)
    h = a.inertia_history
    assert all(y <= x * (1 + 1e-12) for x, y in zip(h, h[1:]))
    # every point sits with its nearest final centroid
    lab, _ = kernels.kmeans_assign(np.ascontiguousarray(pts), np.ascontiguousarray(a.centroids), False)
    d = ((pts[:, None, :] - a.centroids[None]) ** 2).sum(-1)
    assert np.all(d[np.arange(60), lab] <= d[np.arange(60), a.labels] + 1e-12)


def test_haversine_metric_runs():
    m = kmeans_fit([(116.3, 39.9), (116.31, 39.9), (117.0, 40.5), (117.01, 40.5)], 2, seed=1, metric="haversine")
    assert m.labels[0] == m.labels[1] != m.labels[2]


CLUSTER_ZERO = [
    (42388, "Xisan Village", 116.5894841, 40.36254838),
    (42399, "Xisan Village", 116.5898399, 40.36246982),
    (42400, "Koutou", 116.570183, 40.36211652),
    (42547, "Guanhe Crossing", 116.554231, 40.36048595),
    (42548, "Sanhe Crossing", 116.5489953, 40.37759114),
    (42581, "Beizhai Village East", 116.5588375, 40.336021),
]


def test_node_centroid_is_member_mean():
    far = [(1, "Far", 116.0, 39.5)]
    cat = load_station_catalog(
        {"station_id": i, "station_name": n, "longitude": x, "latitude": y} for i, n, x, y in CLUSTER_ZERO + far
    )
    model = cluster_catalog(cat, 2, seed=0, init="k-means++")
    six = {model.assignment[i] for i, *_ in CLUSTER_ZERO}
    assert len(six) == 1
    (c,) = six
    nodes = {n.node_id: n for n in aggregate_nodes(cat, model, {42388: 10, 42400: 20})}
    assert nodes[c].longitude == pytest.approx(np.mean([x for *_, x, _ in CLUSTER_ZERO]), abs=1e-12)
    assert nodes[c].latitude == pytest.approx(np.mean([y for *_, y in CLUSTER_ZERO]), abs=1e-12)
    assert nodes[c].total_flow == 30
    nm = station_node_map(cat, model)
    assert nm["Xisan Village"] == c and nm["Far"] != c


def test_empty_cluster_is_omitted():
    cat = load_station_catalog([("A", 0.0, 0.0), ("B", 1.0, 0.0)])
    model = cluster_catalog(cat, 2, seed=0)
    model.labels = np.array([1, 1])
    assert [n.node_id for n in aggregate_nodes(cat, model)] == [1]
