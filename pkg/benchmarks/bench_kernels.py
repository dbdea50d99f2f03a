"""Time each hot kernel under the numba and numpy backends.

    python benchmarks/bench_kernels.py --nodes 200 --edges 4000 --repeat 3

Every kernel gets one untimed warm-up call first so numba compile time is not
counted. Results from the two backends are compared before timing.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from transitnet import kernels
from transitnet.graph import from_edges, normalize_flows


def _graph(rng, n, m):
    pairs = {}
    while len(pairs) < m:
        u, v = rng.integers(0, n, 2).tolist()
        if u != v:
            pairs[(u, v)] = int(rng.integers(1, 500))
    g = normalize_flows(from_edges([(u, v, f) for (u, v), f in pairs.items()], nodes=range(n)))
    return g.csr(g.distances())


def _undirected(indptr, indices, weights):
    n = indptr.shape[0] - 1
    src = np.repeat(np.arange(n), np.diff(indptr))
    s = np.concatenate([src, indices])
    d = np.concatenate([indices, src])
    w = np.concatenate([weights, weights])
    order = np.lexsort((d, s))
    ip = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(s, minlength=n), out=ip[1:])
    return ip, d[order].astype(np.int64), w[order]


def cases(n, m, points, k, seed):
    rng = np.random.default_rng(seed)
    ip, ix, w = _graph(rng, n, m)
    sources = np.arange(n, dtype=np.int64)
    pts = np.ascontiguousarray(rng.normal((116.4, 39.9), 0.1, (points, 2)))
    cents = np.ascontiguousarray(pts[rng.choice(points, k, replace=False)])
    uip, uix, uw = _undirected(ip, ix, w)
    strength = np.bincount(np.repeat(np.arange(n), np.diff(uip)), uw, n)
    m_tot = float(uw.sum() / 2)
    order = rng.permutation(n).astype(np.int64)

    def louvain_args():
        return (uip, uix, uw, strength, np.arange(n, dtype=np.int64), strength.copy(), order, m_tot, 1.0, 1e-12, 1000)

    labels = kernels.get("kmeans_assign", "numpy")(pts, cents, False)[0]
    return {
        "brandes": lambda: (ip, ix, w),
        "all_pairs_distances": lambda: (ip, ix, w, sources),
        "kmeans_assign": lambda: (pts, cents, False),
        "kmeans_sums": lambda: (pts, labels, k),
        "louvain_local_move": louvain_args,
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and np.allclose(a, b, rtol=1e-9, atol=1e-12, equal_nan=True)
    return a == b


def bench(fn, make_args, repeat):
    fn(*make_args())
    best = float("inf")
    for _ in range(repeat):
        args = make_args()
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--nodes", type=int, default=200)
    ap.add_argument("--edges", type=int, default=4000)
    ap.add_argument("--points", type=int, default=5000)
    ap.add_argument("-k", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    table = cases(args.nodes, args.edges, args.points, args.k, args.seed)
    print(f"n={args.nodes} m={args.edges} points={args.points} k={args.k} backends={','.join(backends)}")
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + (f"{'speedup':>10}" if len(backends) > 1 else ""))
    for name, make_args in table.items():
        if len(backends) > 1:
            ref = [kernels.get(name, b)(*make_args()) for b in backends]
            if not _same(ref[0], ref[1]):
                raise SystemExit(f"{name}: backends disagree")
        times = [bench(kernels.get(name, b), make_args, args.repeat) for b in backends]
        line = f"{name:<22}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
