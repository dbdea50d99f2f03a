"""Static removal of central nodes and the indicator shift it causes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GraphTooSmall
from .graph import TransitGraph, remove_nodes
from .metrics import GraphIndicators, PathOptions, composite_rank, degrees, indicators, node_metrics

INDICATOR_FIELDS = ("global_clustering", "scc_count", "avg_shortest_path", "efficiency")
STRATEGIES = ("composite", "degree", "random")


@dataclass
class RobustnessReport:
    label: str
    strategy: str
    removed_nodes: list
    before: GraphIndicators
    after: GraphIndicators
    deltas: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.deltas:
            self.deltas = {f: _delta(getattr(self.before, f), getattr(self.after, f)) for f in INDICATOR_FIELDS}

    @property
    def k(self) -> int:
        return len(self.removed_nodes)


def _delta(before, after) -> tuple[float | None, float | None]:
    """Signed change and percent change; None where either side is undefined."""
    if before is None or after is None:
        return None, None
    d = after - before
    return d, (100.0 * d / before if before != 0 else None)


def _ranking(graph: TransitGraph, k: int, strategy: str, seed: int, weighted: bool, opts: PathOptions) -> list:
    if k == 0:
        return []
    if strategy == "composite":
        return composite_rank(node_metrics(graph, weighted, opts), k)
    if strategy == "degree":
        deg = degrees(graph)
        return sorted(graph.nodes, key=lambda v: (-deg[v], v))[:k]
    if strategy == "random":
        perm = np.random.default_rng(seed).permutation(graph.n)
        return [graph.nodes[i] for i in perm[:k]]
    raise ValueError(f"unknown strategy {strategy!r}")


def _check_size(graph: TransitGraph, k: int) -> None:
    if k < 0:
        raise ValueError("k must be non-negative")
    if graph.n <= k:
        raise GraphTooSmall(f"cannot remove {k} of {graph.n} nodes")
    if k and graph.n < 3:
        raise GraphTooSmall("ranking needs at least 3 nodes")


def robustness_test(
    graph: TransitGraph,
    top_k: int = 10,
    label: str = "",
    weighted: bool = False,
    opts: PathOptions = PathOptions(),
) -> RobustnessReport:
    """Remove the ``top_k`` composite-ranked nodes jointly and compare indicators."""
    return removal_sweep(graph, [top_k], "composite", label=label, weighted=weighted, opts=opts)[0]


def removal_sweep(
    graph: TransitGraph,
    ks: Sequence[int],
    strategy: str = "composite",
    seed: int = 0,
    label: str = "",
    weighted: bool = False,
    opts: PathOptions = PathOptions(),
) -> list[RobustnessReport]:
    """One report per ``k``; every removal set is a prefix of one ranking, so sets are nested."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    ks = list(ks)
    if not ks:
        return []
    kmax = max(ks)
    _check_size(graph, kmax)
    ranking = _ranking(graph, kmax, strategy, seed, weighted, opts)
    before = indicators(graph, opts)
    reports = []
    for k in ks:
        removed = ranking[:k]
        after = indicators(remove_nodes(graph, removed), opts) if k else before
        reports.append(RobustnessReport(label, strategy, removed, before, after))
    return reports
