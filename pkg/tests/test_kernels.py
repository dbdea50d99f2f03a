import os
import subprocess
import sys

import numpy as np
import pytest

from transitnet import kernels
from transitnet.graph import from_edges, normalize_flows
from transitnet.verify import random_digraph

BACKENDS = kernels.available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="numba not installed")


def _csr(seed, n=40, p=0.15):
    rng = np.random.default_rng(seed)
    g = normalize_flows(from_edges(random_digraph(rng, n, p, 50) + [(0, 1, 1), (1, 0, 50)], nodes=range(n)))
    return g.csr(g.distances())


@needs_both
@pytest.mark.parametrize("seed", range(5))
def test_path_kernels_agree(seed):
    ip, ix, w = _csr(seed)
    src = np.arange(ip.shape[0] - 1, dtype=np.int64)
    a, b = (kernels.get("all_pairs_distances", x)(ip, ix, w, src) for x in BACKENDS)
    assert np.array_equal(np.isinf(a), np.isinf(b))
    assert np.allclose(a[np.isfinite(a)], b[np.isfinite(b)], rtol=1e-12, atol=0)
    a, b = (kernels.get("brandes", x)(ip, ix, w) for x in BACKENDS)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9)
    ones = np.ones_like(w)
    a, b = (kernels.get("brandes", x)(ip, ix, ones) for x in BACKENDS)
    # dependency sums run in a different order per backend
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_both
@pytest.mark.parametrize("haversine", [False, True])
def test_kmeans_kernels_agree(haversine):
    rng = np.random.default_rng(4)
    pts = np.ascontiguousarray(rng.normal((116.4, 39.9), 0.1, (500, 2)))
    cents = np.ascontiguousarray(pts[:17].copy())
    (la, da), (lb, db) = (kernels.get("kmeans_assign", x)(pts, cents, haversine) for x in BACKENDS)
    assert np.array_equal(la, lb) and np.allclose(da, db, rtol=1e-12)
    (sa, ca), (sb, cb) = (kernels.get("kmeans_sums", x)(pts, la, 17) for x in BACKENDS)
    assert np.array_equal(ca, cb) and np.allclose(sa, sb, rtol=1e-12)


@needs_both
def test_louvain_move_agrees():
    rng = np.random.default_rng(9)
    n = 60
    pairs = {(min(u, v), max(u, v)): 0.0 for u, v, _ in random_digraph(rng, n, 0.1) if u != v}
    for key in pairs:
        pairs[key] = float(rng.integers(1, 10))
    a = np.array([k[0] for k in pairs]); b = np.array([k[1] for k in pairs]); w = np.array(list(pairs.values()))
    s, d, ww = np.r_[a, b], np.r_[b, a], np.r_[w, w]
    order = np.lexsort((d, s))
    ip = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(s, minlength=n), out=ip[1:])
    ix, wx = d[order].astype(np.int64), ww[order]
    strength = np.bincount(s, ww, n)
    visit = rng.permutation(n).astype(np.int64)
    out = []
    for x in BACKENDS:
        comm = np.arange(n, dtype=np.int64)
        tot = strength.copy()
        moves = kernels.get("louvain_local_move", x)(ip, ix, wx, strength, comm, tot, visit, float(w.sum()), 1.0, 1e-12, 1000)
        out.append((moves, comm, tot))
    assert out[0][0] == out[1][0] and np.array_equal(out[0][1], out[1][1]) and np.allclose(out[0][2], out[1][2])


def _backend_in_subprocess(flag):
    env = dict(os.environ)
    if flag is None:
        env.pop("TRANSITNET_NUMBA", None)
    else:
        env["TRANSITNET_NUMBA"] = flag
    code = "import transitnet; print(transitnet.backend())"
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.strip()


def test_env_flag_selects_fallback():
    assert _backend_in_subprocess("0") == "numpy"
    assert _backend_in_subprocess("off") == "numpy"
    if len(BACKENDS) > 1:
        assert _backend_in_subprocess(None) == "numba"
        assert _backend_in_subprocess("1") == "numba"
