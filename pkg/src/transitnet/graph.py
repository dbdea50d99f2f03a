"""Weighted directed origin-destination networks built from travel chains."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Hashable, Iterable, Mapping

import numpy as np

from .errors import DegenerateFlows, UnmappedStation
from .preprocess import TravelChain

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True, eq=False)
class TransitGraph:
    """Immutable directed graph; one edge per ordered node pair.

    Edges are stored as parallel arrays sorted by (src, dst) node index.
    ``normalized`` is None until :func:`normalize_flows` has run.
    """

    nodes: tuple
    src: np.ndarray
    dst: np.ndarray
    flow: np.ndarray
    normalized: np.ndarray | None = None
    flow_bounds: tuple[int, int] | None = None
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.nodes)})
        for a in (self.src, self.dst, self.flow) + ((self.normalized,) if self.normalized is not None else ()):
            a.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return int(self.src.shape[0])

    def index(self, node) -> int:
        return self._index[node]

    def __contains__(self, node) -> bool:
        return node in self._index

    def edges(self) -> Iterable[tuple[Hashable, Hashable, int, float | None]]:
        norm = self.normalized.tolist() if self.normalized is not None else [None] * self.m
        for s, d, f, w in zip(self.src.tolist(), self.dst.tolist(), self.flow.tolist(), norm):
            yield self.nodes[s], self.nodes[d], f, w

    def edge_flows(self) -> dict[tuple, int]:
        return {(u, v): f for u, v, f, _ in self.edges()}

    def without_self_loops(self) -> np.ndarray:
        """Boolean mask of edges that are not self-loops."""
        return self.src != self.dst

    def csr(self, weights: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Out-adjacency in CSR form with self-loops dropped; unit weights by default."""
        keep = self.without_self_loops()
        s, d = self.src[keep], self.dst[keep]
        w = np.ones(s.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)[keep]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(s, minlength=self.n), out=indptr[1:])
        # edges are already sorted by src, so they are in CSR order
        return indptr, np.ascontiguousarray(d, dtype=np.int64), np.ascontiguousarray(w)

    def distances(self, invert: bool = False, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
        """Per-edge path length: normalized flow clamped below at ``epsilon``, or ``1/flow``."""
        if invert:
            return 1.0 / self.flow.astype(np.float64)
        if self.normalized is None:
            if self.m == 0:
                return np.zeros(0)
            raise ValueError("graph has no normalized flows; call normalize_flows first")
        return np.maximum(self.normalized, epsilon)


def _from_counter(counter: Mapping[tuple, int], nodes: Iterable = ()) -> TransitGraph:
    universe = set(nodes)
    for u, v in counter:
        universe.add(u)
        universe.add(v)
    order = tuple(sorted(universe))
    idx = {v: i for i, v in enumerate(order)}
    items = sorted(((idx[u], idx[v]), f) for (u, v), f in counter.items())
    src = np.fromiter((k[0] for k, _ in items), dtype=np.int64, count=len(items))
    dst = np.fromiter((k[1] for k, _ in items), dtype=np.int64, count=len(items))
    flow = np.fromiter((f for _, f in items), dtype=np.int64, count=len(items))
    return TransitGraph(order, src, dst, flow)


def from_edges(edges: Iterable[tuple], nodes: Iterable = ()) -> TransitGraph:
    """Graph from ``(u, v, flow)`` or ``(u, v, flow, normalized)`` tuples; repeated pairs accumulate."""
    counter: Counter = Counter()
    norm: dict = {}
    for e in edges:
        counter[(e[0], e[1])] += int(e[2])
        if len(e) > 3 and e[3] is not None:
            norm[(e[0], e[1])] = float(e[3])
    g = _from_counter(counter, nodes)
    if norm:
        if len(norm) != len(counter):
            raise ValueError("normalized flow given for some edges only")
        vals = np.array([norm[(g.nodes[s], g.nodes[d])] for s, d in zip(g.src.tolist(), g.dst.tolist())])
        g = replace(g, normalized=vals)
    return g


def build_network(
    chains: Iterable[TravelChain],
    node_map: Mapping[str, Hashable] | None = None,
    mode: str = "consecutive",
    nodes: Iterable = (),
) -> TransitGraph:
    """Count one unit of flow per consecutive leg pair (or per chain's first-last pair).

    With ``node_map`` stations are first mapped to cluster nodes. ``nodes``
    adds keys that must appear even without incident edges.
    """
    if mode not in ("consecutive", "first-last"):
        raise ValueError(f"unknown mode {mode!r}")
    counter: Counter = Counter()
    for ch in chains:
        names = [leg.station_name for leg in ch.legs]
        if node_map is not None:
            try:
                names = [node_map[s] for s in names]
            except KeyError as exc:
                raise UnmappedStation(f"station {exc.args[0]!r} has no node") from None
        if len(names) < 2:
            continue
        if mode == "consecutive":
            counter.update(zip(names, names[1:]))
        else:
            counter[(names[0], names[-1])] += 1
    return _from_counter(counter, nodes)


def normalize_flows(graph: TransitGraph, bounds: tuple[int, int] | None = None) -> TransitGraph:
    """Min-max scale edge flows onto [0, 1].

    ``bounds`` overrides the (min, max) taken from the graph itself, which is
    how a reduced network keeps the scale of the network it came from.
    """
    if bounds is None:
        if graph.m == 0:
            raise DegenerateFlows("graph has no edges")
        lo, hi = int(graph.flow.min()), int(graph.flow.max())
    else:
        lo, hi = bounds
    if hi == lo:
        raise DegenerateFlows(f"all edge flows equal {lo}")
    norm = (graph.flow - lo) / float(hi - lo)
    return replace(graph, normalized=norm, flow_bounds=(lo, hi))


def remove_nodes(graph: TransitGraph, node_set: Iterable) -> TransitGraph:
    """Drop nodes and every incident edge; surviving edges keep flow and normalized flow."""
    node_set = set(node_set)
    absent = sum(1 for v in node_set if v not in graph)
    if absent:
        logger.warning("remove_nodes: %d requested nodes are not in the graph", absent)
    drop = np.zeros(graph.n, dtype=bool)
    for v in node_set:
        if v in graph:
            drop[graph.index(v)] = True
    keep_nodes = tuple(v for i, v in enumerate(graph.nodes) if not drop[i])
    remap = np.cumsum(~drop) - 1
    keep = ~(drop[graph.src] | drop[graph.dst])
    return TransitGraph(
        keep_nodes,
        remap[graph.src[keep]].astype(np.int64),
        remap[graph.dst[keep]].astype(np.int64),
        graph.flow[keep].copy(),
        None if graph.normalized is None else graph.normalized[keep].copy(),
        graph.flow_bounds,
    )

