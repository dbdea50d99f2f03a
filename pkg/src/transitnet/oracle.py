"""Synthetic smart-card data and brute-force reference implementations.

The reference functions share no code with the production algorithms. They
are slow on purpose and refuse instances above their size bounds.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import InstanceTooLarge, InvalidConfig
from .ingest import Mode, SmartCardRecord, StationCatalog, StationEntry, format_record, write_station_file

# generator


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic city.

    ``peaks`` holds ``(start_hour, end_hour, multiplier)`` triples applied to
    the two-hour start slots; ``night_multiplier`` scales slots before 06:00.
    """

    n_stations: int = 500
    n_passengers: int = 1000
    days: int = 14
    hf_fraction: float = 0.25
    seed: int = 0
    start: str = "2018-03-01"
    peaks: tuple = ((6, 10, 4.0), (18, 20, 4.0))
    night_multiplier: float = 0.1
    hf_trips: tuple = (11, 20)
    lf_trips: tuple = (1, 10)
    legs: tuple = (2, 3)
    leg_gap_minutes: tuple = (8, 14)
    n_areas: int = 8
    center: tuple = (116.4, 39.9)
    area_spread: float = 0.08
    area_sd: float = 0.02
    bus_share: float = 0.4
    neighbours: int = 5
    duplicate_rate: float = 0.0
    out_of_window_rate: float = 0.0

    def validate(self) -> None:
        if min(self.n_stations, self.n_passengers, self.days, self.n_areas) < 1:
            raise InvalidConfig("station, passenger, day and area counts must be positive")
        if self.n_stations < 2:
            raise InvalidConfig("need at least two stations")
        if not 0 < self.hf_fraction < 1:
            raise InvalidConfig("hf_fraction must lie in (0, 1)")
        for name in ("hf_trips", "lf_trips", "legs", "leg_gap_minutes"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise InvalidConfig(f"{name} must be an increasing positive range")
        if self.legs[0] < 2:
            raise InvalidConfig("trips need at least two legs")
        if self.hf_trips[0] <= self.lf_trips[1]:
            raise InvalidConfig("the high-frequency trip floor must exceed the low-frequency ceiling")
        if self.hf_trips[1] > 7 * 12:
            raise InvalidConfig("at most one trip per two-hour slot per day")
        for p in self.peaks:
            if len(p) != 3 or not 0 <= p[0] < p[1] <= 24 or p[0] % 2 or p[1] % 2 or p[2] <= 0:
                raise InvalidConfig(f"bad peak {p!r}: need even hours start < end and a positive multiplier")
        if self.night_multiplier <= 0:
            raise InvalidConfig("night_multiplier must be positive")
        if not (0 <= self.duplicate_rate < 1 and 0 <= self.out_of_window_rate < 1 and 0 <= self.bus_share <= 1):
            raise InvalidConfig("rates must lie in [0, 1)")
        try:
            datetime.fromisoformat(self.start)
        except ValueError:
            raise InvalidConfig(f"bad start date {self.start!r}") from None

    def slot_weights(self) -> np.ndarray:
        w = np.ones(12)
        w[:3] = self.night_multiplier
        for lo, hi, mult in self.peaks:
            w[lo // 2:hi // 2] = mult
        return w


@dataclass
class SynthData:
    catalog: StationCatalog
    records: list[SmartCardRecord]
    hf_ids: frozenset
    config: SynthConfig
    manifest: dict = field(default_factory=dict)


def _stations(cfg: SynthConfig, rng: np.random.Generator) -> StationCatalog:
    cx, cy = cfg.center
    areas = np.array([cx, cy]) + rng.normal(0.0, cfg.area_spread, (cfg.n_areas, 2))
    area_of = rng.integers(0, cfg.n_areas, cfg.n_stations)
    pts = areas[area_of] + rng.normal(0.0, cfg.area_sd, (cfg.n_stations, 2))
    bus = rng.random(cfg.n_stations) < cfg.bus_share
    entries = []
    for i in range(cfg.n_stations):
        entries.append(
            StationEntry(i, f"S{i:05d}", round(float(pts[i, 0]), 6), round(float(pts[i, 1]), 6), Mode.BUS if bus[i] else Mode.SUBWAY)
        )
    return StationCatalog(tuple(entries))


def generate(cfg: SynthConfig) -> SynthData:
    """Stations and swipe records, a pure function of ``cfg``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    catalog = _stations(cfg, rng)
    entries = catalog.entries
    coords = np.array([(e.longitude, e.latitude) for e in entries])
    k = min(cfg.neighbours + 1, len(entries))
    _, near = cKDTree(coords).query(coords, k=k)
    near = near[:, 1:]

    n_hf = int(round(cfg.hf_fraction * cfg.n_passengers))
    hf_idx = set(rng.permutation(cfg.n_passengers)[:n_hf].tolist())
    pids = [f"P{i:07d}" for i in range(cfg.n_passengers)]
    start = datetime.fromisoformat(cfg.start)
    slot_w = cfg.slot_weights()
    n_weeks = math.ceil(cfg.days / 7)

    records: list[SmartCardRecord] = []
    for p in range(cfg.n_passengers):
        lo, hi = cfg.hf_trips if p in hf_idx else cfg.lf_trips
        for week in range(n_weeks):
            dw = min(7, cfg.days - 7 * week)
            trips = int(rng.integers(lo, hi + 1))
            if dw < 7:
                trips = max(1, math.ceil(trips * dw / 7))
            w = np.tile(slot_w, dw)
            cells = np.sort(rng.choice(dw * 12, size=min(trips, dw * 12), replace=False, p=w / w.sum()))
            for cell in cells.tolist():
                day, slot = divmod(cell, 12)
                t = start + timedelta(days=7 * week + day, hours=2 * slot, seconds=int(rng.integers(0, 1200)))
                st = int(rng.integers(0, len(entries)))
                for leg in range(int(rng.integers(cfg.legs[0], cfg.legs[1] + 1))):
                    if leg:
                        t += timedelta(seconds=int(rng.integers(cfg.leg_gap_minutes[0] * 60, cfg.leg_gap_minutes[1] * 60 + 1)))
                        st = int(near[st, rng.integers(0, near.shape[1])])
                    e = entries[st]
                    records.append(SmartCardRecord(pids[p], e.mode, f"L{e.station_id % 97}", e.station_id % 50, e.station_name, t))

    if cfg.out_of_window_rate:
        for i in np.flatnonzero(rng.random(len(records)) < cfg.out_of_window_rate).tolist():
            r = records[i]
            records[i] = SmartCardRecord(r.passenger_id, r.mode, r.line, r.station_seq, r.station_name, r.timestamp - timedelta(days=60))
    if cfg.duplicate_rate:
        dup = np.flatnonzero(rng.random(len(records)) < cfg.duplicate_rate).tolist()
        records.extend(records[i] for i in dup)

    hf_ids = frozenset(pids[i] for i in hf_idx)
    manifest = {
        "config": _config_dict(cfg),
        "n_records": len(records),
        "n_stations": len(entries),
        "hf_ids": sorted(hf_ids),
    }
    return SynthData(catalog, records, hf_ids, cfg, manifest)


def _config_dict(cfg: SynthConfig) -> dict:
    return {k: list(map(list, v)) if k == "peaks" else (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()}


def write_synthetic(data: SynthData, out_dir: str | Path) -> dict[str, Path]:
    """Write ``stations.csv``, ``records.csv`` and ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"stations": out / "stations.csv", "records": out / "records.csv", "manifest": out / "manifest.json"}
    write_station_file(paths["stations"], data.catalog)
    with open(paths["records"], "w", encoding="utf-8", newline="") as fh:
        fh.write("passenger_id,mode,line,station_seq,station_name,timestamp\n")
        fh.writelines(format_record(r) + "\n" for r in data.records)
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump(data.manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return paths


# reference implementations

BOUNDS = {"betweenness": 12, "scc": 50, "all_pairs": 100, "modularity_max": 8, "mwu": 10}


def _check(kind: str, size: int) -> None:
    if size > BOUNDS[kind]:
        raise InstanceTooLarge(f"{kind} oracle accepts at most {BOUNDS[kind]}, got {size}")


Edge = tuple  # (u, v) or (u, v, weight)


def _weighted(edges: Iterable[Edge]) -> dict:
    """Last weight wins per ordered pair; loops are dropped."""
    out = {}
    for e in edges:
        u, v = e[0], e[1]
        if u != v:
            out[(u, v)] = Fraction(e[2]) if len(e) > 2 else Fraction(1)
    return out


def _floyd(nodes: Sequence, w: dict) -> dict:
    d = {(u, v): (Fraction(0) if u == v else w.get((u, v))) for u in nodes for v in nodes}
    for k in nodes:
        for i in nodes:
            dik = d[(i, k)]
            if dik is None:
                continue
            for j in nodes:
                dkj = d[(k, j)]
                if dkj is None:
                    continue
                cand = dik + dkj
                cur = d[(i, j)]
                if cur is None or cand < cur:
                    d[(i, j)] = cand
    return d


def brute_betweenness(nodes: Sequence[Hashable], edges: Iterable[Edge]) -> dict:
    """Betweenness by listing every geodesic explicitly, in exact rational arithmetic.

    Weights must be positive; they are converted with ``Fraction`` so float
    inputs are taken at their exact binary value.
    """
    nodes = list(nodes)
    _check("betweenness", len(nodes))
    w = _weighted(edges)
    if any(x <= 0 for x in w.values()):
        raise ValueError("weights must be positive")
    d = _floyd(nodes, w)
    out_adj = {u: [v for (a, v) in w if a == u] for u in nodes}
    score = {v: Fraction(0) for v in nodes}
    for s in nodes:
        for t in nodes:
            if s == t or d[(s, t)] is None:
                continue
            target = d[(s, t)]
            paths = []
            stack = [(s, [s], Fraction(0))]
            while stack:
                u, path, length = stack.pop()
                if u == t:
                    paths.append(path)
                    continue
                for v in out_adj[u]:
                    nl = length + w[(u, v)]
                    rest = d[(v, t)]
                    if rest is not None and nl + rest == target and v not in path:
                        stack.append((v, path + [v], nl))
            for path in paths:
                for v in path[1:-1]:
                    score[v] += Fraction(1, len(paths))
    n = len(nodes)
    norm = (n - 1) * (n - 2)
    return {v: float(score[v] / norm) if norm else 0.0 for v in nodes}


def brute_scc(nodes: Sequence[Hashable], edges: Iterable[Edge]) -> list[frozenset]:
    """Components from the transitive closure: u ~ v iff each reaches the other."""
    nodes = list(nodes)
    _check("scc", len(nodes))
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    reach = [[i == j for j in range(n)] for i in range(n)]
    for e in edges:
        reach[idx[e[0]]][idx[e[1]]] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                ri, rk = reach[i], reach[k]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    comps, done = [], set()
    for i in range(n):
        if i in done:
            continue
        comp = {j for j in range(n) if reach[i][j] and reach[j][i]}
        done |= comp
        comps.append(frozenset(nodes[j] for j in comp))
    return comps


def brute_all_pairs(nodes: Sequence[Hashable], edges: Iterable[Edge]) -> dict:
    """``{(u, v): distance}`` by Floyd-Warshall in floats; unreachable pairs are ``inf``."""
    nodes = list(nodes)
    _check("all_pairs", len(nodes))
    n = len(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    d = [[0.0 if i == j else math.inf for j in range(n)] for i in range(n)]
    for e in edges:
        i, j = idx[e[0]], idx[e[1]]
        if i != j:
            d[i][j] = float(e[2]) if len(e) > 2 else 1.0
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik == math.inf:
                continue
            di = d[i]
            for j in range(n):
                c = dik + dk[j]
                if c < di[j]:
                    di[j] = c
    return {(nodes[i], nodes[j]): d[i][j] for i in range(n) for j in range(n)}


def _mutual_components(nodes: list, d: dict) -> list[set]:
    comps, done = [], set()
    for u in nodes:
        if u in done:
            continue
        comp = {v for v in nodes if d[(u, v)] != math.inf and d[(v, u)] != math.inf}
        done |= comp
        comps.append(comp)
    return comps


def brute_path_summary(nodes: Sequence[Hashable], edges: Iterable[Edge]) -> tuple[float | None, float]:
    """``(average shortest path, efficiency)`` from one Floyd-Warshall table.

    The average runs over ordered pairs of the largest mutually reachable set
    (ties: the one holding the smallest node) and is None below 2 nodes.
    """
    nodes = sorted(nodes)
    n = len(nodes)
    d = brute_all_pairs(nodes, list(edges))
    best = max(_mutual_components(nodes, d), key=lambda c: (len(c), -min(nodes.index(v) for v in c)), default=set())
    asp = None
    if len(best) >= 2:
        total = 0.0
        for u in sorted(best):
            for v in sorted(best):
                if u != v:
                    total += d[(u, v)]
        asp = total / (len(best) * (len(best) - 1))
    eff = 0.0
    for u in nodes:
        for v in nodes:
            if u != v and d[(u, v)] != math.inf:
                eff += 1.0 / d[(u, v)]
    return asp, eff / (n * (n - 1))


def brute_avg_shortest_path(nodes: Sequence[Hashable], edges: Iterable[Edge]) -> float | None:
    return brute_path_summary(nodes, edges)[0]


def brute_efficiency(nodes: Sequence[Hashable], edges: Iterable[Edge]) -> float:
    return brute_path_summary(nodes, edges)[1]


def _partitions(items: list):
    """Every set partition, via restricted growth strings."""
    n = len(items)
    if n == 0:
        yield []
        return
    a = [0] * n

    def rec(i, mx):
        if i == n:
            yield list(a)
            return
        for v in range(mx + 2):
            a[i] = v
            yield from rec(i + 1, max(mx, v))

    a[0] = 0
    yield from rec(1, 0)


def _modularity_matrix(nodes: list, edges: Iterable[Edge]) -> tuple[dict, Fraction]:
    """``B[u, v] = A_uv - k_u k_v / 2m`` in exact arithmetic, plus ``2m``."""
    A = {(u, v): Fraction(0) for u in nodes for v in nodes}
    for e in edges:
        u, v = e[0], e[1]
        if u == v:
            continue
        x = Fraction(e[2]) if len(e) > 2 else Fraction(1)
        A[(u, v)] += x
        A[(v, u)] += x
    k = {u: sum(A[(u, v)] for v in nodes) for u in nodes}
    two_m = sum(k.values())
    if two_m == 0:
        return {}, two_m
    return {(u, v): A[(u, v)] - k[u] * k[v] / two_m for u in nodes for v in nodes}, two_m


def brute_modularity(nodes: Sequence[Hashable], edges: Iterable[Edge], labels: dict) -> Fraction:
    """Modularity written out as the double sum over node pairs, exactly."""
    nodes = list(nodes)
    B, two_m = _modularity_matrix(nodes, edges)
    if two_m == 0:
        return Fraction(0)
    return sum((B[(u, v)] for u in nodes for v in nodes if labels[u] == labels[v]), Fraction(0)) / two_m


def brute_modularity_max(nodes: Sequence[Hashable], edges: Iterable[Edge]) -> tuple[float, dict]:
    """Best modularity over all set partitions; first optimum in generation order."""
    nodes = list(nodes)
    _check("modularity_max", len(nodes))
    B, two_m = _modularity_matrix(nodes, list(edges))
    if two_m == 0:
        return 0.0, {v: 0 for v in nodes}
    pairs = [(i, j, B[(u, v)]) for i, u in enumerate(nodes) for j, v in enumerate(nodes)]
    best_q, best = None, None
    for rgs in _partitions(nodes):
        q = sum((b for i, j, b in pairs if rgs[i] == rgs[j]), Fraction(0))
        if best_q is None or q > best_q:
            best_q, best = q, rgs
    return float(best_q / two_m), dict(zip(nodes, best))


def _doubled_u(xs, ys) -> int:
    """Twice the U statistic: a win counts 2, a tie 1."""
    return sum(2 if x > y else (1 if x == y else 0) for x in xs for y in ys)


def mwu_null(pooled: Sequence[float], na: int) -> list[int]:
    """``|2U - n_a n_b|`` for every way of labelling ``na`` of the pooled values as sample A."""
    pooled = list(pooled)
    n = len(pooled)
    _check("mwu", n)
    out = []
    for pick in itertools.combinations(range(n), na):
        chosen = set(pick)
        xs = [pooled[i] for i in pick]
        ys = [pooled[i] for i in range(n) if i not in chosen]
        out.append(abs(_doubled_u(xs, ys) - na * (n - na)))
    return out


def exact_mwu(sample_a: Sequence[float], sample_b: Sequence[float], null: Sequence[int] | None = None) -> tuple[float, float]:
    """``(min(U_a, U_b), two-sided p)`` by relabelling the pooled sample every possible way.

    U counts pairs with ``a > b`` as 1 and ties as 1/2. The p-value is the
    share of relabellings whose ``|U - n_a n_b / 2|`` is at least the observed
    one. ``null`` may carry a precomputed :func:`mwu_null` of the same pool.
    """
    a, b = list(sample_a), list(sample_b)
    na, nb = len(a), len(b)
    _check("mwu", na + nb)
    if not na or not nb:
        raise ValueError("samples must be non-empty")
    if null is None:
        null = mwu_null(a + b, na)
    u2 = _doubled_u(a, b)
    observed = abs(u2 - na * nb)
    hits = sum(1 for x in null if x >= observed)
    return min(u2, 2 * na * nb - u2) / 2, hits / len(null)
