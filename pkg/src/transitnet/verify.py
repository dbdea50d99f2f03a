"""Self-check: production algorithms against the brute-force references on random small instances."""
from __future__ import annotations

import numpy as np

from . import oracle
from .community import louvain, modularity
from .graph import from_edges, normalize_flows
from .metrics import avg_shortest_path, betweenness, global_efficiency, mann_whitney_u, strongly_connected_components


def random_digraph(rng: np.random.Generator, n: int, p: float, max_flow: int = 64) -> list[tuple[int, int, int]]:
    """Edges ``(u, v, flow)`` with independent arc probability ``p`` and flows in ``[1, max_flow]``."""
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    us, vs = np.nonzero(mask)
    flows = rng.integers(1, max_flow + 1, us.shape[0])
    return list(zip(us.tolist(), vs.tolist(), flows.tolist()))


def _dist_edges(g):
    d = g.distances()
    return [(g.nodes[s], g.nodes[t], w) for s, t, w in zip(g.src.tolist(), g.dst.tolist(), d.tolist()) if s != t]


def run_checks(trials: int = 20, seed: int = 0) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(3, 13))
        edges = random_digraph(rng, n, float(rng.uniform(0.1, 0.6)))
        g = from_edges(edges, nodes=range(n))
        got = betweenness(g)
        ref = oracle.brute_betweenness(range(n), [(u, v) for u, v, _ in edges])
        worst = max(worst, max(abs(got[v] - ref[v]) for v in range(n)))
    out.append(("betweenness", worst < 1e-9, f"max |diff| {worst:.3g} over {trials} graphs"))

    bad = 0
    for _ in range(trials):
        n = int(rng.integers(1, 51))
        edges = random_digraph(rng, n, float(rng.uniform(0.01, 0.1)))
        g = from_edges(edges, nodes=range(n))
        bad += set(strongly_connected_components(g)) != set(oracle.brute_scc(range(n), edges))
    out.append(("scc", bad == 0, f"{bad} mismatches over {trials} graphs"))

    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(3, 40))
        edges = random_digraph(rng, n, float(rng.uniform(0.05, 0.3)))
        g = from_edges(edges, nodes=range(n))
        if g.m == 0 or g.flow.min() == g.flow.max():
            continue
        g = normalize_flows(g)
        asp, eff = oracle.brute_path_summary(range(n), _dist_edges(g))
        if asp is not None:
            worst = max(worst, abs(avg_shortest_path(g) - asp))
        worst = max(worst, abs(global_efficiency(g) - eff) / max(1.0, eff))
    out.append(("paths", worst < 1e-9, f"max |diff| {worst:.3g}"))

    gaps = 0
    for _ in range(trials):
        n = int(rng.integers(2, 8))
        edges = random_digraph(rng, n, 0.4, 5)
        g = from_edges(edges, nodes=range(n))
        if g.m == 0:
            continue
        best, _ = oracle.brute_modularity_max(range(n), edges)
        part = louvain(g, int(rng.integers(1 << 30)))
        exact = float(oracle.brute_modularity(range(n), edges, part.assignment))
        gaps += best - part.modularity > 0.05 or abs(exact - modularity(g, part.assignment)) > 1e-9
    out.append(("modularity", gaps <= max(1, trials // 20), f"{gaps} runs off the optimum by > 0.05"))

    worst = 0.0
    for _ in range(trials):
        na = int(rng.integers(1, 6))
        nb = int(rng.integers(1, 11 - na))
        a, b = rng.integers(0, 6, na).tolist(), rng.integers(0, 6, nb).tolist()
        worst = max(worst, abs(mann_whitney_u(a, b)[1] - oracle.exact_mwu(a, b)[1]))
    out.append(("mann_whitney", worst < 1e-12, f"max |p diff| {worst:.3g}"))
    return out
