"""numba kernels over CSR adjacency arrays.

All graph kernels take ``indptr``/``indices``/``weights`` of a directed graph
with self-loops already stripped and strictly positive weights.
"""
import numpy as np
import numba as nb

from .._accel import njit_kwargs

TIE_RTOL = 1e-12


@nb.njit(**njit_kwargs)
def _heap_push(keys, vals, size, key, val):
    i = size
    keys[i] = key
    vals[i] = val
    while i > 0:
        p = (i - 1) >> 1
        if keys[p] < keys[i] or (keys[p] == keys[i] and vals[p] <= vals[i]):
            break
        keys[p], keys[i] = keys[i], keys[p]
        vals[p], vals[i] = vals[i], vals[p]
        i = p
    return size + 1


@nb.njit(**njit_kwargs)
def _heap_pop(keys, vals, size):
    key = keys[0]
    val = vals[0]
    size -= 1
    keys[0] = keys[size]
    vals[0] = vals[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        c = left
        right = left + 1
        if right < size and (keys[right] < keys[left] or (keys[right] == keys[left] and vals[right] < vals[left])):
            c = right
        if keys[i] < keys[c] or (keys[i] == keys[c] and vals[i] <= vals[c]):
            break
        keys[c], keys[i] = keys[i], keys[c]
        vals[c], vals[i] = vals[i], vals[c]
        i = c
    return key, val, size


@nb.njit(**njit_kwargs)
def _dijkstra(indptr, indices, weights, source, dist, order, done, hkeys, hvals):
    """Fill ``dist`` and the settle ``order``; return the number of settled nodes."""
    n = indptr.shape[0] - 1
    for i in range(n):
        dist[i] = np.inf
        done[i] = False
    dist[source] = 0.0
    size = _heap_push(hkeys, hvals, 0, 0.0, source)
    settled = 0
    while size > 0:
        d, v, size = _heap_pop(hkeys, hvals, size)
        if done[v]:
            continue
        done[v] = True
        order[settled] = v
        settled += 1
        for e in range(indptr[v], indptr[v + 1]):
            w = indices[e]
            if done[w]:
                continue
            alt = d + weights[e]
            if alt < dist[w]:
                dist[w] = alt
                size = _heap_push(hkeys, hvals, size, alt, w)
    return settled


@nb.njit(**njit_kwargs)
def all_pairs_distances(indptr, indices, weights, sources):
    n = indptr.shape[0] - 1
    m = indices.shape[0]
    out = np.empty((sources.shape[0], n), dtype=np.float64)
    dist = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    done = np.empty(n, dtype=np.bool_)
    hkeys = np.empty(m + 1, dtype=np.float64)
    hvals = np.empty(m + 1, dtype=np.int64)
    for si in range(sources.shape[0]):
        _dijkstra(indptr, indices, weights, sources[si], dist, order, done, hkeys, hvals)
        out[si, :] = dist
    return out


@nb.njit(**njit_kwargs)
def brandes(indptr, indices, weights):
    """Unnormalized directed betweenness via dependency accumulation."""
    n = indptr.shape[0] - 1
    m = indices.shape[0]
    bc = np.zeros(n, dtype=np.float64)
    dist = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    done = np.empty(n, dtype=np.bool_)
    sigma = np.empty(n, dtype=np.float64)
    delta = np.empty(n, dtype=np.float64)
    hkeys = np.empty(m + 1, dtype=np.float64)
    hvals = np.empty(m + 1, dtype=np.int64)
    for s in range(n):
        settled = _dijkstra(indptr, indices, weights, s, dist, order, done, hkeys, hvals)
        for i in range(n):
            sigma[i] = 0.0
            delta[i] = 0.0
        sigma[s] = 1.0
        for k in range(settled):
            v = order[k]
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                alt = dist[v] + weights[e]
                if abs(alt - dist[w]) <= TIE_RTOL * dist[w]:
                    sigma[w] += sigma[v]
        for k in range(settled - 1, -1, -1):
            v = order[k]
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                alt = dist[v] + weights[e]
                if abs(alt - dist[w]) <= TIE_RTOL * dist[w]:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if v != s:
                bc[v] += delta[v]
    return bc


@nb.njit(**njit_kwargs)
def kmeans_assign(points, centroids, haversine):
    n = points.shape[0]
    k = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        bi = 0
        for j in range(k):
            if haversine:
                d = _hav(points[i, 0], points[i, 1], centroids[j, 0], centroids[j, 1])
            else:
                dx = points[i, 0] - centroids[j, 0]
                dy = points[i, 1] - centroids[j, 1]
                d = dx * dx + dy * dy
            if d < best:
                best = d
                bi = j
        labels[i] = bi
        dists[i] = best
    return labels, dists


@nb.njit(**njit_kwargs)
def _hav(lon1, lat1, lon2, lat2):
    # squared great-circle distance on the unit sphere, in rad^2
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    a = np.sin((p2 - p1) / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(np.radians(lon2 - lon1) / 2.0) ** 2
    c = 2.0 * np.arcsin(np.sqrt(min(1.0, a)))
    return c * c


@nb.njit(**njit_kwargs)
def kmeans_sums(points, labels, k):
    sums = np.zeros((k, 2), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for i in range(points.shape[0]):
        c = labels[i]
        sums[c, 0] += points[i, 0]
        sums[c, 1] += points[i, 1]
        counts[c] += 1
    return sums, counts


@nb.njit(**njit_kwargs)
def louvain_local_move(indptr, indices, weights, strength, community, tot, order, m, resolution, tol, max_passes):
    """One Louvain local-move phase in place; returns the number of moves made."""
    n = indptr.shape[0] - 1
    neigh_w = np.zeros(n, dtype=np.float64)
    neigh_c = np.empty(n, dtype=np.int64)
    seen = np.zeros(n, dtype=np.bool_)
    moves = 0
    scale = resolution / (2.0 * m * m)
    for _ in range(max_passes):
        moved = 0
        for oi in range(n):
            i = order[oi]
            ci = community[i]
            nc = 0
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                if j == i:
                    continue
                c = community[j]
                if not seen[c]:
                    seen[c] = True
                    neigh_c[nc] = c
                    nc += 1
                neigh_w[c] += weights[e]
            ki = strength[i]
            tot[ci] -= ki
            best = ci
            best_gain = neigh_w[ci] / m - tot[ci] * ki * scale
            for t in range(nc):
                c = neigh_c[t]
                gain = neigh_w[c] / m - tot[c] * ki * scale
                if gain > best_gain + tol:
                    best_gain = gain
                    best = c
            tot[best] += ki
            community[i] = best
            if best != ci:
                moved += 1
            for t in range(nc):
                c = neigh_c[t]
                neigh_w[c] = 0.0
                seen[c] = False
        moves += moved
        if moved == 0:
            break
    return moves
