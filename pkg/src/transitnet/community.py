"""Louvain community detection on the undirected projection of a flow network."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import kernels
from .errors import EmptyGraph, PartialAssignment
from .graph import TransitGraph
from .metrics import degrees

LOCAL_TOL = 1e-12
MIN_GAIN = 1e-9
_MAX_PASSES = 1000


@dataclass(frozen=True)
class CommunityStats:
    community: int
    size: int
    average_degree: float


@dataclass
class CommunityPartition:
    assignment: dict
    modularity: float
    communities: list[CommunityStats]
    seed: int = 0
    resolution: float = 1.0

    @property
    def n_communities(self) -> int:
        return len(self.communities)

    def members(self) -> dict[int, list]:
        out: dict[int, list] = {}
        for v, c in self.assignment.items():
            out.setdefault(c, []).append(v)
        return out


def undirected_weights(graph: TransitGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairs ``a < b`` with ``w = flow(a, b) + flow(b, a)``; self-loops dropped."""
    keep = graph.without_self_loops()
    s, d = graph.src[keep], graph.dst[keep]
    f = graph.flow[keep].astype(np.float64)
    a, b = np.minimum(s, d), np.maximum(s, d)
    uniq, inv = np.unique(a * max(graph.n, 1) + b, return_inverse=True)
    w = np.bincount(inv, weights=f, minlength=uniq.shape[0])
    return uniq // graph.n, uniq % graph.n, w


def _q(n, a, b, w, loops, labels, resolution) -> float:
    """Modularity of ``labels`` on a level graph whose self-loops carry internal weight."""
    m = w.sum() + loops.sum()
    if m == 0:
        return 0.0
    k = np.bincount(a, w, n) + np.bincount(b, w, n) + 2 * loops
    nc = int(labels.max()) + 1
    internal = np.bincount(labels, loops, nc)
    same = labels[a] == labels[b]
    internal += np.bincount(labels[a[same]], w[same], nc)
    tot = np.bincount(labels, k, nc)
    return float(np.sum(internal / m - resolution * (tot / (2 * m)) ** 2))


def _index_labels(graph: TransitGraph, assignment: Mapping) -> np.ndarray:
    missing = [v for v in graph.nodes if v not in assignment]
    if missing:
        raise PartialAssignment(f"{len(missing)} nodes have no community, e.g. {missing[0]!r}")
    ids: dict = {}
    return np.array([ids.setdefault(assignment[v], len(ids)) for v in graph.nodes], dtype=np.int64)


def modularity(graph: TransitGraph, assignment: Mapping, resolution: float = 1.0) -> float:
    """Newman modularity of ``assignment`` on the summed-weight undirected projection."""
    if graph.n == 0:
        raise EmptyGraph("modularity of an empty graph")
    labels = _index_labels(graph, assignment)
    a, b, w = undirected_weights(graph)
    return _q(graph.n, a, b, w, np.zeros(graph.n), labels, resolution)


def _csr(n, a, b, w):
    s = np.concatenate([a, b])
    d = np.concatenate([b, a])
    ww = np.concatenate([w, w])
    order = np.lexsort((d, s))
    s, d, ww = s[order], d[order], ww[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(s, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(d, dtype=np.int64), np.ascontiguousarray(ww)


def _aggregate(n_new, labels, a, b, w, loops):
    ca, cb = labels[a], labels[b]
    inside = ca == cb
    new_loops = np.bincount(labels, loops, n_new) + np.bincount(ca[inside], w[inside], n_new)
    x, y = np.minimum(ca[~inside], cb[~inside]), np.maximum(ca[~inside], cb[~inside])
    uniq, inv = np.unique(x * n_new + y, return_inverse=True)
    nw = np.bincount(inv, weights=w[~inside], minlength=uniq.shape[0])
    return uniq // n_new, uniq % n_new, nw, new_loops


def louvain(graph: TransitGraph, seed: int = 0, resolution: float = 1.0) -> CommunityPartition:
    """Local moves then aggregation, repeated until a level gains no more than ``MIN_GAIN``.

    Each level visits nodes in an order shuffled by ``default_rng(seed)``.
    Community ids are renumbered by size (largest first), ties going to the
    community holding the smallest node.
    """
    n = graph.n
    if n == 0:
        raise EmptyGraph("louvain on an empty graph")
    rng = np.random.default_rng(seed)
    a, b, w = undirected_weights(graph)
    m = float(w.sum())
    node_comm = np.arange(n, dtype=np.int64)
    if m > 0:
        loops = np.zeros(n)
        cur = n
        q = _q(cur, a, b, w, loops, np.arange(cur), resolution)
        while True:
            indptr, indices, weights = _csr(cur, a, b, w)
            strength = np.bincount(a, w, cur) + np.bincount(b, w, cur) + 2 * loops
            comm = np.arange(cur, dtype=np.int64)
            tot = strength.copy()
            order = rng.permutation(cur).astype(np.int64)
            moves = kernels.louvain_local_move(
                indptr, indices, weights, strength, comm, tot, order, m, resolution, LOCAL_TOL, _MAX_PASSES
            )
            if moves == 0:
                break
            _, comm = np.unique(comm, return_inverse=True)
            q_new = _q(cur, a, b, w, loops, comm, resolution)
            if q_new < q:
                break
            node_comm = comm[node_comm]
            cur = int(comm.max()) + 1
            a, b, w, loops = _aggregate(cur, comm, a, b, w, loops)
            gained = q_new - q
            q = q_new
            if gained <= MIN_GAIN:
                break
    assignment = _canonical(graph, node_comm)
    qf = modularity(graph, assignment, resolution)
    q0 = modularity(graph, {v: i for i, v in enumerate(graph.nodes)}, resolution)
    assert qf >= q0 - 1e-12, (qf, q0)
    part = CommunityPartition(assignment, qf, [], seed, resolution)
    part.communities = community_metrics(graph, part)
    return part


def _canonical(graph: TransitGraph, labels: np.ndarray) -> dict:
    sizes = np.bincount(labels)
    first = np.full(sizes.shape[0], graph.n)
    np.minimum.at(first, labels, np.arange(graph.n))
    present = np.flatnonzero(sizes)
    ranked = sorted(present.tolist(), key=lambda c: (-sizes[c], first[c]))
    new_id = {c: i for i, c in enumerate(ranked)}
    return {v: new_id[int(labels[i])] for i, v in enumerate(graph.nodes)}


def community_metrics(graph: TransitGraph, partition: CommunityPartition) -> list[CommunityStats]:
    """Size and mean full-graph degree per community, in community id order."""
    deg = degrees(graph)
    rows = []
    for c, members in sorted(partition.members().items()):
        rows.append(CommunityStats(c, len(members), float(np.mean([deg[v] for v in members]))))
    return rows
