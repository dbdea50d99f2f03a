"""K-means aggregation of stations into cluster nodes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import EmptyInput, KTooLarge
from .ingest import StationCatalog

_MONOTONE_RTOL = 1e-12


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, 2) lon, lat
    labels: np.ndarray  # (n,) cluster index per input point
    point_ids: tuple
    inertia: float
    inertia_history: list[float]
    iterations_run: int
    seed: int
    metric: str = "euclidean"

    @property
    def assignment(self) -> dict:
        return dict(zip(self.point_ids, self.labels.tolist()))


@dataclass(frozen=True)
class ClusterNode:
    node_id: int
    longitude: float
    latitude: float
    total_flow: int


def _kmeanspp(pts: np.ndarray, k: int, rng: np.random.Generator, haversine: bool) -> np.ndarray:
    idx = [int(rng.integers(pts.shape[0]))]
    d = kernels.kmeans_assign(pts, pts[idx], haversine)[1]
    for _ in range(1, k):
        total = d.sum()
        if total <= 0:
            rest = np.setdiff1d(np.arange(pts.shape[0]), idx)
            idx.append(int(rng.choice(rest)))
        else:
            idx.append(int(rng.choice(pts.shape[0], p=d / total)))
        d = np.minimum(d, kernels.kmeans_assign(pts, pts[idx[-1:]], haversine)[1])
    return np.asarray(idx)


def kmeans_fit(
    points: Sequence[tuple[float, float]] | np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-9,
    init: str = "random",
    metric: str = "euclidean",
    ids: Sequence | None = None,
) -> ClusterModel:
    """Lloyd's algorithm on (lon, lat) points.

    Initial centroids are ``k`` distinct points drawn uniformly with
    ``numpy.random.default_rng(seed)`` (``init="k-means++"`` for D^2 seeding).
    Iteration stops once no centroid moves by ``tol`` degrees or more on
    either axis. A cluster left empty is re-seeded with the point farthest
    from its current centroid.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 2))
    n = pts.shape[0]
    if n == 0:
        raise EmptyInput("no points to cluster")
    if k < 1 or k > n:
        raise KTooLarge(f"k={k} must be in [1, {n}]")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if metric not in ("euclidean", "haversine"):
        raise ValueError(f"unknown metric {metric!r}")
    hav = metric == "haversine"
    rng = np.random.default_rng(seed)
    if init == "random":
        start = rng.choice(n, size=k, replace=False)
    elif init == "k-means++":
        start = _kmeanspp(pts, k, rng, hav)
    else:
        raise ValueError(f"unknown init {init!r}")
    centroids = pts[np.sort(start)].copy()

    history: list[float] = []
    it = 0
    while it < max_iter:
        it += 1
        labels, dist = kernels.kmeans_assign(pts, centroids, hav)
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # farthest point among clusters that can spare one
            far = int(np.argmax(np.where(counts[labels] > 1, dist, -1.0)))
            counts[labels[far]] -= 1
            counts[c] += 1
            labels[far] = c
            dist[far] = 0.0
        sums, counts = kernels.kmeans_sums(pts, labels, k)
        new = sums / counts[:, None]
        inertia = _inertia(pts, new, labels, hav)
        # the coordinate mean only minimizes squared euclidean distance
        if not hav and history and inertia > history[-1] * (1 + _MONOTONE_RTOL):
            raise AssertionError(f"k-means inertia increased: {history[-1]!r} -> {inertia!r}")
        history.append(inertia)
        shift = float(np.max(np.abs(new - centroids)))
        centroids = new
        if shift < tol:
            break
    return ClusterModel(
        k=k,
        centroids=centroids,
        labels=labels,
        point_ids=tuple(ids) if ids is not None else tuple(range(n)),
        inertia=history[-1],
        inertia_history=history,
        iterations_run=it,
        seed=seed,
        metric=metric,
    )


def _inertia(pts, centroids, labels, hav):
    c = centroids[labels]
    if hav:
        lat1, lat2 = np.radians(pts[:, 1]), np.radians(c[:, 1])
        a = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(np.radians(c[:, 0] - pts[:, 0]) / 2) ** 2
        return float(np.sum((2 * np.arcsin(np.sqrt(np.minimum(1.0, a)))) ** 2))
    diff = pts - c
    return float(np.sum(diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1]))


def assign_point(point: tuple[float, float], model: ClusterModel) -> int:
    """Nearest centroid, lowest index on ties."""
    p = np.asarray(point, dtype=np.float64).reshape(1, 2)
    return int(kernels.kmeans_assign(p, np.ascontiguousarray(model.centroids), model.metric == "haversine")[0][0])


def cluster_catalog(catalog: StationCatalog, k: int, seed: int = 0, **kw) -> ClusterModel:
    pts = [(e.longitude, e.latitude) for e in catalog]
    return kmeans_fit(pts, k, seed=seed, ids=[e.station_id for e in catalog], **kw)


def aggregate_nodes(
    catalog: StationCatalog, model: ClusterModel, station_flows: Mapping[int, int] | None = None
) -> list[ClusterNode]:
    """One node per non-empty cluster: member coordinate mean and summed flow."""
    station_flows = station_flows or {}
    assignment = model.assignment
    members: dict[int, list] = {}
    for e in catalog:
        members.setdefault(assignment[e.station_id], []).append(e)
    out = []
    for c in sorted(members):
        ms = members[c]
        out.append(
            ClusterNode(
                node_id=c,
                longitude=float(np.mean([e.longitude for e in ms])),
                latitude=float(np.mean([e.latitude for e in ms])),
                total_flow=int(sum(int(station_flows.get(e.station_id, 0)) for e in ms)),
            )
        )
    return out


def station_node_map(catalog: StationCatalog, model: ClusterModel) -> dict[str, int]:
    """Station name -> cluster node; a repeated name takes its first catalog entry's cluster."""
    assignment = model.assignment
    out: dict[str, int] = {}
    for e in catalog:
        out.setdefault(e.station_name, assignment[e.station_id])
    return out
