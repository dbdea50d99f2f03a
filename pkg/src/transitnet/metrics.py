"""Node centralities and whole-network indicators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import EmptyGraph, EmptySample, NotEnoughNodes, NoValidComponent, TooFewNodes, TooFewValues
from .graph import DEFAULT_EPSILON, TransitGraph


@dataclass(frozen=True)
class PathOptions:
    """How edge flows become path lengths."""

    invert_weights: bool = False
    epsilon: float = DEFAULT_EPSILON


def _neighbor_sets(graph: TransitGraph):
    keep = graph.without_self_loops()
    return graph.src[keep], graph.dst[keep]


def degrees(graph: TransitGraph) -> dict:
    """Distinct out-neighbours plus distinct in-neighbours, self-loops excluded."""
    s, d = _neighbor_sets(graph)
    # edges are unique per ordered pair, so counting edge endpoints counts distinct neighbours
    deg = np.bincount(s, minlength=graph.n) + np.bincount(d, minlength=graph.n)
    return dict(zip(graph.nodes, deg.tolist()))


def _degree_array(graph: TransitGraph) -> np.ndarray:
    s, d = _neighbor_sets(graph)
    return (np.bincount(s, minlength=graph.n) + np.bincount(d, minlength=graph.n)).astype(np.float64)


def _weights(graph: TransitGraph, weighted: bool, opts: PathOptions) -> np.ndarray | None:
    return graph.distances(opts.invert_weights, opts.epsilon) if weighted else None


def betweenness(graph: TransitGraph, weighted: bool = False, opts: PathOptions = PathOptions()) -> dict:
    """Directed betweenness normalized by ``(n-1)(n-2)``.

    Weighted mode measures paths in edge distances (see :class:`PathOptions`).
    """
    n = graph.n
    if n < 3:
        raise TooFewNodes(f"betweenness needs n >= 3, got {n}")
    raw = kernels.brandes(*graph.csr(_weights(graph, weighted, opts)))
    return dict(zip(graph.nodes, (raw / ((n - 1) * (n - 2))).tolist()))


def _closeness_from(dist: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(dist.shape[0])
    if n < 2:
        return out
    for i in range(dist.shape[0]):
        row = dist[i]
        fin = np.isfinite(row) & (row > 0)
        r = int(fin.sum())
        total = float(row[fin].sum())
        if r and total > 0:
            out[i] = (r / (n - 1)) * (r / total)
    return out


def closeness(graph: TransitGraph, weighted: bool = False, opts: PathOptions = PathOptions()) -> dict:
    """Reach-scaled closeness over outgoing distances: ``(r/(n-1)) * (r/S)``."""
    indptr, indices, w = graph.csr(_weights(graph, weighted, opts))
    dist = kernels.all_pairs_distances(indptr, indices, w, np.arange(graph.n, dtype=np.int64))
    return dict(zip(graph.nodes, _closeness_from(dist, graph.n).tolist()))


def _undirected_max_weights(graph: TransitGraph):
    """Undirected projection keeping the larger of the two directed flows."""
    keep = graph.without_self_loops()
    s, d, f = graph.src[keep], graph.dst[keep], graph.flow[keep].astype(np.float64)
    a, b = np.minimum(s, d), np.maximum(s, d)
    key = a * graph.n + b
    uniq, inv = np.unique(key, return_inverse=True)
    w = np.zeros(uniq.shape[0])
    np.maximum.at(w, inv, f)
    return uniq // graph.n, uniq % graph.n, w


def weighted_global_clustering(graph: TransitGraph, weighted: bool = True) -> float:
    """Mean over nodes of the geometric-mean weighted local clustering coefficient.

    Weights are edge flows divided by the largest flow, taken on the undirected
    projection. With ``weighted=False`` every weight is 1.
    """
    n = graph.n
    if n == 0:
        raise EmptyGraph("clustering of an empty graph")
    a, b, w = _undirected_max_weights(graph)
    if w.size == 0:
        return 0.0
    if not weighted:
        w = np.ones_like(w)
    w = w / w.max()
    cw = sp.coo_matrix((np.cbrt(w), (a, b)), shape=(n, n)).tocsr()
    cw = cw + cw.T
    # closed weighted walks of length 3 = sum over ordered neighbour pairs (j, h) of the product
    tri = np.asarray((cw @ cw).multiply(cw).sum(axis=1)).ravel()
    k = np.diff(cw.indptr).astype(np.float64)
    denom = k * (k - 1)
    local = np.divide(tri, denom, out=np.zeros(n), where=denom > 0)
    return float(local.sum() / n)


def strongly_connected_components(graph: TransitGraph) -> list[frozenset]:
    """Iterative Tarjan; components listed in order of completion."""
    n = graph.n
    indptr, indices, _ = graph.csr()
    ip, ix = indptr.tolist(), indices.tolist()
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[frozenset] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, ip[root])]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, e = work[-1]
            if e < ip[v + 1]:
                work[-1] = (v, e + 1)
                w = ix[e]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, ip[w]))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(graph.nodes[w])
                    if w == v:
                        break
                comps.append(frozenset(comp))
    return comps


def largest_scc(graph: TransitGraph) -> frozenset:
    """Largest component; ties go to the one holding the smallest node key."""
    comps = strongly_connected_components(graph)
    if not comps:
        return frozenset()
    return max(comps, key=lambda c: (len(c), -min(graph.index(v) for v in c)))


def _distance_matrix(graph: TransitGraph, sources, opts: PathOptions) -> np.ndarray:
    indptr, indices, w = graph.csr(graph.distances(opts.invert_weights, opts.epsilon))
    return kernels.all_pairs_distances(indptr, indices, w, np.asarray(sources, dtype=np.int64))


def avg_shortest_path(graph: TransitGraph, opts: PathOptions = PathOptions()) -> float:
    """Mean weighted distance over ordered pairs inside the largest strongly connected component."""
    comp = largest_scc(graph)
    if len(comp) < 2:
        raise NoValidComponent("largest strongly connected component has fewer than 2 nodes")
    idx = np.array(sorted(graph.index(v) for v in comp), dtype=np.int64)
    dist = _distance_matrix(graph, idx, opts)[:, idx]
    s = len(idx)
    return float((dist.sum() - np.trace(dist)) / (s * (s - 1)))


def global_efficiency(graph: TransitGraph, opts: PathOptions = PathOptions()) -> float:
    """Mean of ``1/d(u, v)`` over ordered pairs ``u != v``; unreachable pairs add 0."""
    n = graph.n
    if n < 2:
        raise TooFewNodes("efficiency needs at least 2 nodes")
    dist = _distance_matrix(graph, np.arange(n), opts)
    np.fill_diagonal(dist, np.inf)
    with np.errstate(divide="ignore"):
        inv = 1.0 / dist
    return float(inv.sum() / (n * (n - 1)))


def zscores(values: Sequence[float]) -> np.ndarray:
    """``(x - mean) / std`` with the population std; a constant input maps to zeros."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise TooFewValues("z-scores need at least two values")
    mu = x.mean()
    sd = x.std()
    if sd == 0 or not np.isfinite(sd):
        return np.zeros_like(x)
    return (x - mu) / sd


@dataclass
class NodeMetrics:
    nodes: tuple
    degree: np.ndarray
    betweenness: np.ndarray
    closeness: np.ndarray

    @property
    def composite_z(self) -> np.ndarray:
        return zscores(self.degree) + zscores(self.betweenness) + zscores(self.closeness)

    def rows(self) -> list[tuple]:
        cz = self.composite_z
        return [
            (v, int(self.degree[i]), float(self.betweenness[i]), float(self.closeness[i]), float(cz[i]))
            for i, v in enumerate(self.nodes)
        ]


def node_metrics(graph: TransitGraph, weighted: bool = False, opts: PathOptions = PathOptions()) -> NodeMetrics:
    bc = betweenness(graph, weighted, opts)
    cl = closeness(graph, weighted, opts)
    return NodeMetrics(
        graph.nodes,
        _degree_array(graph),
        np.array([bc[v] for v in graph.nodes]),
        np.array([cl[v] for v in graph.nodes]),
    )


def composite_rank(metrics: NodeMetrics, top_k: int = 10) -> list:
    """Top ``top_k`` nodes by summed z-scores, ties broken by node key."""
    if len(metrics.nodes) < top_k:
        raise NotEnoughNodes(f"asked for {top_k} nodes, graph has {len(metrics.nodes)}")
    if top_k == 0:
        return []
    cz = metrics.composite_z
    order = sorted(range(len(metrics.nodes)), key=lambda i: (-cz[i], metrics.nodes[i]))
    return [metrics.nodes[i] for i in order[:top_k]]


@dataclass
class GraphIndicators:
    global_clustering: float
    scc_count: int
    avg_shortest_path: float | None
    efficiency: float | None
    n_nodes: int = 0
    n_edges: int = 0

    def as_tuple(self):
        return (self.global_clustering, self.scc_count, self.avg_shortest_path, self.efficiency)


def indicators(graph: TransitGraph, opts: PathOptions = PathOptions()) -> GraphIndicators:
    """Clustering, SCC count, average shortest path and efficiency; undefined entries are None."""
    try:
        asp = avg_shortest_path(graph, opts)
    except NoValidComponent:
        asp = None
    eff = global_efficiency(graph, opts) if graph.n >= 2 else None
    return GraphIndicators(
        weighted_global_clustering(graph),
        len(strongly_connected_components(graph)),
        asp,
        eff,
        graph.n,
        graph.m,
    )


# Mann-Whitney U


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    sv = values[order]
    i = 0
    while i < sv.size:
        j = i
        while j + 1 < sv.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def _exact_two_sided(doubled_ranks: list[int], na: int, observed_dev2: int) -> float:
    """P(|2*R_a - E| >= observed) over all size-``na`` subsets, counted by dynamic programming."""
    # dp[k][s]: number of size-k subsets with doubled rank sum s
    total = sum(doubled_ranks)
    dp = [dict() for _ in range(na + 1)]
    dp[0][0] = 1
    for r in doubled_ranks:
        for k in range(min(na, len(doubled_ranks)) - 1, -1, -1):
            src = dp[k]
            if not src:
                continue
            dst = dp[k + 1]
            for s, c in src.items():
                dst[s + r] = dst.get(s + r, 0) + c
    n = len(doubled_ranks)
    # |s - na*total/n| scaled by n stays an integer
    hits = 0
    allc = 0
    for s, c in dp[na].items():
        allc += c
        if abs(n * s - na * total) >= observed_dev2:
            hits += c
    return hits / allc


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float], exact_limit: int = 200) -> tuple[float, float]:
    """Two-sided Mann-Whitney U test; returns ``(min(U_a, U_b), p)``.

    Exact permutation distribution when ``n_a * n_b <= exact_limit``; otherwise
    the normal approximation with tie-corrected variance and continuity correction.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise EmptySample("both samples must be non-empty")
    na, nb = a.size, b.size
    n = na + nb
    ranks = _midranks(np.concatenate([a, b]))
    ra = ranks[:na].sum()
    ua = ra - na * (na + 1) / 2.0
    ub = na * nb - ua
    u = min(ua, ub)
    if na * nb <= exact_limit:
        doubled = [int(round(2 * r)) for r in ranks]
        total = sum(doubled)
        observed = abs(n * int(round(2 * ra)) - na * total)
        return float(u), float(_exact_two_sided(doubled, na, observed))
    _, counts = np.unique(ranks, return_counts=True)
    tie = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    var = na * nb / 12.0 * ((n + 1) - tie / (n * (n - 1)))
    if var <= 0:
        return float(u), 1.0
    z = (abs(ua - na * nb / 2.0) - 0.5) / math.sqrt(var)
    p = math.erfc(max(z, 0.0) / math.sqrt(2.0))
    return float(u), float(min(1.0, p))
