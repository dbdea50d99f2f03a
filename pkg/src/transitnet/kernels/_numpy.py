"""Pure numpy / Python fallbacks with the same signatures as the numba kernels."""
import heapq

import numpy as np

TIE_RTOL = 1e-12


def _adjacency_lists(indptr, indices, weights):
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    return [list(zip(ix[ip[v]:ip[v + 1]], wt[ip[v]:ip[v + 1]])) for v in range(len(ip) - 1)]


def _dijkstra(adj, source):
    n = len(adj)
    dist = [float("inf")] * n
    done = [False] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    order = []
    while heap:
        d, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        order.append(v)
        for w, wt in adj[v]:
            if done[w]:
                continue
            alt = d + wt
            if alt < dist[w]:
                dist[w] = alt
                heapq.heappush(heap, (alt, w))
    return dist, order


def all_pairs_distances(indptr, indices, weights, sources):
    n = indptr.shape[0] - 1
    sources = np.asarray(sources)
    if sources.shape[0] == n and n > 0 and n * n * n <= 64_000_000:
        # dense Floyd-Warshall relaxations vectorize well at transit-network sizes
        d = np.full((n, n), np.inf)
        rows = np.repeat(np.arange(n), np.diff(indptr))
        np.minimum.at(d, (rows, indices), weights)
        np.fill_diagonal(d, 0.0)
        for k in range(n):
            np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
        return d[sources]
    adj = _adjacency_lists(indptr, indices, weights)
    out = np.empty((sources.shape[0], n))
    for si, s in enumerate(sources.tolist()):
        out[si] = _dijkstra(adj, s)[0]
    return out


def brandes(indptr, indices, weights):
    n = indptr.shape[0] - 1
    adj = _adjacency_lists(indptr, indices, weights)
    bc = [0.0] * n
    for s in range(n):
        dist, order = _dijkstra(adj, s)
        sigma = [0.0] * n
        delta = [0.0] * n
        sigma[s] = 1.0
        preds = [[] for _ in range(n)]
        for v in order:
            dv = dist[v]
            for w, wt in adj[v]:
                dw = dist[w]
                if abs(dv + wt - dw) <= TIE_RTOL * dw:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    return np.asarray(bc, dtype=np.float64)


def kmeans_assign(points, centroids, haversine):
    if haversine:
        lon1 = np.radians(points[:, 0])[:, None]
        lat1 = np.radians(points[:, 1])[:, None]
        lon2 = np.radians(centroids[:, 0])[None, :]
        lat2 = np.radians(centroids[:, 1])[None, :]
        a = np.sin((lat2 - lat1) / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
        d = (2.0 * np.arcsin(np.sqrt(np.minimum(1.0, a)))) ** 2
    else:
        dx = points[:, 0, None] - centroids[None, :, 0]
        dy = points[:, 1, None] - centroids[None, :, 1]
        d = dx * dx + dy * dy
    labels = np.argmin(d, axis=1)  # first minimum -> lowest index on ties
    return labels.astype(np.int64), d[np.arange(points.shape[0]), labels]


def kmeans_sums(points, labels, k):
    # bincount accumulates sequentially in input order, like the loop kernel
    sums = np.stack(
        [np.bincount(labels, weights=points[:, 0], minlength=k), np.bincount(labels, weights=points[:, 1], minlength=k)],
        axis=1,
    )
    return sums, np.bincount(labels, minlength=k).astype(np.int64)


def louvain_local_move(indptr, indices, weights, strength, community, tot, order, m, resolution, tol, max_passes):
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    comm = community.tolist()
    tot_l = tot.tolist()
    k = strength.tolist()
    scale = resolution / (2.0 * m * m)
    moves = 0
    for _ in range(max_passes):
        moved = 0
        for i in order.tolist():
            ci = comm[i]
            neigh = {}
            for e in range(ip[i], ip[i + 1]):
                j = ix[e]
                if j == i:
                    continue
                c = comm[j]
                neigh[c] = neigh.get(c, 0.0) + wt[e]
            ki = k[i]
            tot_l[ci] -= ki
            best = ci
            best_gain = neigh.get(ci, 0.0) / m - tot_l[ci] * ki * scale
            for c, w in neigh.items():
                gain = w / m - tot_l[c] * ki * scale
                if gain > best_gain + tol:
                    best_gain = gain
                    best = c
            tot_l[best] += ki
            comm[i] = best
            if best != ci:
                moved += 1
        moves += moved
        if moved == 0:
            break
    community[:] = comm
    tot[:] = tot_l
    return moves
