"""End-to-end run: records to cohort networks, their indicators and every export."""
from __future__ import annotations

import contextlib
import hashlib
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, time, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence


from . import exports
from .cluster import aggregate_nodes, cluster_catalog, station_node_map
from .community import louvain
from .errors import ConstantSeries, DegenerateFlows, InvalidConfig, MissingInput, TransitNetError
from .frequency import (
    SLOT_LABELS,
    DailyWindow,
    Window,
    bin_time_slots,
    count_trips,
    cumulative_frequency,
    normalize_slot_table,
    split_hf_lf,
)
from .graph import TransitGraph, build_network, normalize_flows
from .ingest import format_timestamp, read_records, read_station_file
from .metrics import GraphIndicators, PathOptions, composite_rank, indicators, mann_whitney_u, node_metrics
from .preprocess import REASONS, CleaningConfig, FlawRules, TravelChain, clean
from .robustness import INDICATOR_FIELDS, robustness_test

logger = logging.getLogger(__name__)

COHORTS = ("high", "low")


@dataclass
class PipelineConfig:
    """Every knob of a run. Serialized as one flat JSON object with all defaults spelled out.

    ``weeks`` entries are ``"START/END"`` ISO datetimes (half-open); ``peaks``
    entries are ``"name=HH:MM-HH:MM"``.
    """

    records: str = ""
    stations: str = ""
    out_dir: str = "out"
    delimiter: str = ","
    window_start: str = "2018-03-01T00:00:00"
    window_end: str = "2018-04-01T00:00:00"
    max_speed_kmh: float = 120.0
    chain_gap_minutes: float = 60.0
    max_chain_hours: float = 6.0
    min_legs: int = 2
    k: int = 200
    cluster_seed: int = 0
    cluster_init: str = "random"
    cluster_max_iter: int = 300
    quantile: float = 0.25
    flow_normalization: str = "network"
    edge_mode: str = "consecutive"
    weeks: list = field(default_factory=lambda: ["2018-03-01T00:00:00/2018-03-08T00:00:00", "2018-03-08T00:00:00/2018-03-15T00:00:00"])
    peaks: list = field(default_factory=lambda: ["morning=06:00-10:00", "evening=18:00-20:00"])
    invert_weights: bool = False
    epsilon: float = 1e-9
    weighted_centrality: bool = False
    top_k: int = 10
    louvain_seed: int = 0
    resolution: float = 1.0
    rank_r: int = 1000
    rankdiff_period: str = "week"

    @classmethod
    def from_dict(cls, d: Mapping) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise InvalidConfig(f"unknown config keys: {unknown}")
        return cls(**dict(d))

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except FileNotFoundError:
            raise InvalidConfig(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config file {path}: {exc}") from None
        if not isinstance(d, dict) or any(isinstance(v, dict) for v in d.values()):
            raise InvalidConfig("config must be one flat JSON object")
        return cls.from_dict(d)

    def to_dict(self, with_out_dir: bool = True) -> dict:
        d = asdict(self)
        if not with_out_dir:
            del d["out_dir"]
        return d

    def week_windows(self) -> list[Window]:
        out = []
        for w in self.weeks:
            try:
                a, b = w.split("/")
                out.append(Window(datetime.fromisoformat(a), datetime.fromisoformat(b)))
            except ValueError as exc:
                raise InvalidConfig(f"bad week {w!r}: {exc}") from None
        return out

    def peak_windows(self) -> list[DailyWindow]:
        out = []
        for p in self.peaks:
            try:
                name, span = p.split("=")
                a, b = span.split("-")
                out.append(DailyWindow(name.strip(), time.fromisoformat(a), time.fromisoformat(b)))
            except ValueError:
                raise InvalidConfig(f"bad peak window {p!r}; expected name=HH:MM-HH:MM") from None
        return out

    def validate(self, check_paths: bool = True) -> None:
        if self.k < 1:
            raise InvalidConfig("k must be positive")
        if self.flow_normalization not in ("network", "week"):
            raise InvalidConfig("flow_normalization must be 'network' or 'week'")
        if self.edge_mode not in ("consecutive", "first-last"):
            raise InvalidConfig("edge_mode must be 'consecutive' or 'first-last'")
        if not 0 < self.quantile < 1:
            raise InvalidConfig("quantile must lie in (0, 1)")
        if self.top_k < 0 or self.rank_r < 1 or self.epsilon <= 0:
            raise InvalidConfig("top_k must be >= 0, rank_r >= 1 and epsilon > 0")
        weeks = self.week_windows()
        if not weeks:
            raise InvalidConfig("at least one week window is required")
        for a, b in zip(weeks, weeks[1:]):
            if b.start < a.end:
                raise InvalidConfig("week windows must be ordered and non-overlapping")
        peaks = self.peak_windows()
        for p in peaks:
            if not p.start < p.end:
                raise InvalidConfig(f"peak window {p.name} ends before it starts")
        ps = sorted(peaks, key=lambda p: p.start)
        for a, b in zip(ps, ps[1:]):
            if b.start < a.end:
                raise InvalidConfig("peak windows overlap")
        if len({p.name for p in peaks}) != len(peaks):
            raise InvalidConfig("peak window names must be unique")
        if self.rankdiff_period != "week" and self.rankdiff_period not in {p.name for p in peaks}:
            raise InvalidConfig("rankdiff_period must be 'week' or the name of a peak window")
        try:
            if datetime.fromisoformat(self.window_start) >= datetime.fromisoformat(self.window_end):
                raise InvalidConfig("cleaning window is empty")
        except ValueError as exc:
            raise InvalidConfig(f"bad cleaning window: {exc}") from None
        if check_paths:
            for name in ("records", "stations"):
                p = getattr(self, name)
                if not p or not Path(p).is_file():
                    raise MissingInput(f"{name} file {p!r} does not exist")

    def path_options(self) -> PathOptions:
        return PathOptions(self.invert_weights, self.epsilon)


@contextlib.contextmanager
def stage(name: str):
    """Prefix any library error raised inside with the stage name."""
    try:
        yield
    except TransitNetError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
            exc.args = (f"[{name}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


def network_label(week: int, cohort: str) -> str:
    return f"{week + 1:02d}{cohort}"


# rank difference


@dataclass(frozen=True)
class RankDifferenceRow:
    origin: object
    destination: object
    hf_rank: int | None
    lf_rank: int | None
    rank_difference: int

    def as_tuple(self):
        return (self.origin, self.destination, self.hf_rank, self.lf_rank, self.rank_difference)


def _top_ranks(graph: TransitGraph, r: int) -> dict:
    ranked = sorted(graph.edge_flows().items(), key=lambda kv: (-kv[1], kv[0]))
    return {od: i + 1 for i, (od, _) in enumerate(ranked[:r])}


def od_rank_difference(hf_graph: TransitGraph, lf_graph: TransitGraph, r: int = 1000) -> list[RankDifferenceRow]:
    """High-minus-low flow rank for the union of both top-``r`` OD pairs.

    A pair missing from the low-frequency top ``r`` scores ``-r``; one missing
    from the high-frequency top ``r`` scores ``+r``. Rows are ordered by
    absolute difference, largest first, then by OD key.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    hf, lf = _top_ranks(hf_graph, r), _top_ranks(lf_graph, r)
    rows = []
    for od in set(hf) | set(lf):
        h, l_ = hf.get(od), lf.get(od)
        if h is not None and l_ is not None:
            d = h - l_
        elif h is not None:
            d = -r
        else:
            d = r
        rows.append(RankDifferenceRow(od[0], od[1], h, l_, d))
    rows.sort(key=lambda x: (-abs(x.rank_difference), (x.origin, x.destination)))
    return rows


# peak windows


@dataclass(frozen=True)
class PeakRow:
    network: str
    window: str
    indicators: GraphIndicators | None
    n_nodes: int = 0
    n_edges: int = 0
    total_flow: int = 0

    @property
    def defined(self) -> bool:
        return self.indicators is not None


def _normalized_or_none(g: TransitGraph) -> TransitGraph | None:
    """None when the graph has no usable flow range."""
    try:
        return normalize_flows(g)
    except DegenerateFlows:
        return None


def peak_network_report(
    chains: Iterable[TravelChain],
    windows: Sequence[DailyWindow],
    cohorts: Mapping[str, frozenset],
    node_map: Mapping | None = None,
    opts: PathOptions = PathOptions(),
    mode: str = "consecutive",
) -> list[PeakRow]:
    """Indicators of the network built from chains starting inside each daily window, per cohort."""
    chains = list(chains)
    rows = []
    for label, ids in cohorts.items():
        mine = [c for c in chains if c.passenger_id in ids]
        for w in windows:
            sub = [c for c in mine if c.start in w]
            raw = build_network(sub, node_map, mode)
            g = _normalized_or_none(raw)
            ind = indicators(g, opts) if g is not None else None
            rows.append(PeakRow(label, w.name, ind, raw.n, raw.m, int(raw.flow.sum())))
    return rows


# run


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _ind_row(label: str, ind: GraphIndicators) -> tuple:
    return (label, *ind.as_tuple(), ind.n_nodes, ind.n_edges)


def robustness_row(rep) -> tuple:
    vals = []
    for f in INDICATOR_FIELDS:
        d, pct = rep.deltas[f]
        vals += [getattr(rep.before, f), getattr(rep.after, f), d, pct]
    return (rep.label, rep.k, rep.strategy, ";".join(map(str, rep.removed_nodes)), *vals)


def flawed_row(r, reason: str) -> tuple:
    return (r.passenger_id, r.mode.value, r.line, r.station_seq, r.station_name, format_timestamp(r.timestamp), reason)


def chain_rows(chains: Sequence[TravelChain]):
    for i, c in enumerate(chains):
        for leg in c.legs:
            yield (i, c.passenger_id, leg.mode.value, leg.line, leg.station_seq, leg.station_name, format_timestamp(leg.timestamp))


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage and write outputs under ``config.out_dir``.

    Returns the manifest, which is also written as ``manifest.json``. It holds
    content digests only (no clock times), so equal inputs give an equal manifest.
    """
    with stage("config"):
        config.validate(check_paths=False)
    with stage("ingest"):
        config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    opts = config.path_options()
    written: list[Path] = []

    def table(name, schema, rows):
        written.append(exports.write_table(out / name, schema, rows))

    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(with_out_dir=False), fh, indent=1, sort_keys=True)
        fh.write("\n")
    written.append(out / "config.json")

    with stage("ingest"):
        catalog = read_station_file(config.stations, config.delimiter)
        records, log = read_records(config.records, config.delimiter)
        table("rejects.csv", "rejects", log.rejects)

    with stage("clean"):
        rules = FlawRules(
            datetime.fromisoformat(config.window_start),
            datetime.fromisoformat(config.window_end),
            config.max_speed_kmh,
            catalog.name_coordinates(),
        )
        cc = CleaningConfig(
            timedelta(minutes=config.chain_gap_minutes), timedelta(hours=config.max_chain_hours), config.min_legs, rules
        )
        chains, report, flawed = clean(records, cc)
        del records
        rep = report.as_dict()
        table(
            "cleaning.csv",
            "cleaning",
            [("input", rep["input_count"]), ("duplicates", rep["duplicates_removed"])]
            + [(r, rep["flawed_removed"][r]) for r in REASONS]
            + [
                ("incomplete_chains", rep["incomplete_chains_removed"]),
                ("incomplete_records", rep["incomplete_records_removed"]),
                ("output", rep["output_count"]),
                ("chains", rep["chain_count"]),
            ],
        )
        table(
            "flawed.csv",
            "flawed",
            (flawed_row(r, reason) for r, reason in flawed),
        )

    with stage("cluster"):
        model = cluster_catalog(catalog, min(config.k, len(catalog)), config.cluster_seed, init=config.cluster_init, max_iter=config.cluster_max_iter)
        node_map = station_node_map(catalog, model)
        first_id = {e.station_name: e.station_id for e in reversed(catalog.entries)}
        leg_counts = Counter(leg.station_name for c in chains for leg in c.legs)
        station_flows = {first_id[s]: n for s, n in leg_counts.items() if s in first_id}
        nodes = aggregate_nodes(catalog, model, station_flows)
        members = Counter(model.labels.tolist())
        table("centroids.csv", "centroids", ((c.node_id, c.longitude, c.latitude, members[c.node_id], c.total_flow) for c in nodes))
        table(
            "assignment.csv",
            "assignment",
            ((e.station_id, e.station_name, e.longitude, e.latitude, model.assignment[e.station_id]) for e in catalog),
        )
        coords = {c.node_id: (c.longitude, c.latitude) for c in nodes}
        written.append(exports.write_geojson(out / "stations.geojson", exports.station_points(catalog, model.assignment)))

    networks: dict[str, TransitGraph] = {}
    splits = []
    with stage("frequency"):
        slot_counts = {}
        split_rows = []
        for wi, week in enumerate(config.week_windows()):
            in_week = [c for c in chains if c.start in week]
            counts = count_trips(in_week)
            split = split_hf_lf(counts, config.quantile, week)
            splits.append((wi, week, in_week, split))
            tag = f"{wi + 1:02d}"
            split_rows.append((tag, split.threshold, split.quantile, len(split.hf_ids), len(split.lf_ids), split.hf_share))
            table(f"trip_frequency_{tag}.csv", "trip_frequency", cumulative_frequency(counts))
            table(f"cohorts_{tag}.csv", "cohorts", ((p, counts[p], split.cohort(p)) for p in sorted(counts)))
            for cohort, ids in zip(COHORTS, (split.hf_ids, split.lf_ids)):
                slot_counts[network_label(wi, cohort)] = bin_time_slots(c for c in in_week if c.passenger_id in ids).counts
        table("split.csv", "split", split_rows)
        labels = list(slot_counts)
        try:
            norm = normalize_slot_table(slot_counts)
        except ConstantSeries:
            norm = {x: [None] * len(SLOT_LABELS) for x in labels}
        table(
            "time_slots.csv",
            exports.time_slot_schema(labels),
            (
                (slot, *[int(slot_counts[x][i]) for x in labels], *[norm[x][i] for x in labels])
                for i, slot in enumerate(SLOT_LABELS)
            ),
        )

    with stage("build-net"):
        for wi, _, in_week, split in splits:
            raw = {
                network_label(wi, cohort): build_network((c for c in in_week if c.passenger_id in ids), node_map, config.edge_mode)
                for cohort, ids in zip(COHORTS, (split.hf_ids, split.lf_ids))
            }
            bounds = None
            if config.flow_normalization == "week":
                flows = [g.flow for g in raw.values() if g.m]
                bounds = (int(min(f.min() for f in flows)), int(max(f.max() for f in flows))) if flows else None
            for label, g in raw.items():
                g = normalize_flows(g, bounds)
                networks[label] = g
                table(f"edges_{label}.csv", "edges", exports.edge_rows(g, coords))
                written.append(exports.write_geojson(out / f"flows_{label}.geojson", exports.flow_lines(g, coords)))

    with stage("metrics"):
        ind_rows, central_rows, nm_by_label = [], [], {}
        for label, g in networks.items():
            nm = node_metrics(g, config.weighted_centrality, opts)
            nm_by_label[label] = nm
            table(f"node_metrics_{label}.csv", "node_metrics", nm.rows())
            top = composite_rank(nm, min(config.top_k, g.n))
            cz = dict(zip(nm.nodes, nm.composite_z.tolist()))
            central_rows += [(label, i + 1, v, cz[v]) for i, v in enumerate(top)]
            ind_rows.append(_ind_row(label, indicators(g, opts)))
        table("indicators.csv", "indicators", ind_rows)
        table("central_nodes.csv", "central_nodes", central_rows)
        mwu_rows = []
        for wi, *_ in splits:
            a, b = nm_by_label[network_label(wi, "high")], nm_by_label[network_label(wi, "low")]
            for metric in ("degree", "betweenness", "closeness"):
                u, p = mann_whitney_u(getattr(a, metric), getattr(b, metric))
                mwu_rows.append((f"{wi + 1:02d}", metric, len(a.nodes), len(b.nodes), u, p))
        table("mann_whitney.csv", "mann_whitney", mwu_rows)

    with stage("robustness"):
        rows = []
        for label, g in networks.items():
            k = min(config.top_k, g.n - 1)
            rows.append(robustness_row(robustness_test(g, k, label, config.weighted_centrality, opts)))
        table("robustness.csv", "robustness", rows)

    with stage("community"):
        summary = []
        for label, g in networks.items():
            part = louvain(g, config.louvain_seed, config.resolution)
            summary += [(label, s.community, s.size, s.average_degree, part.modularity) for s in part.communities]
            table(f"partition_{label}.csv", "partition", sorted(part.assignment.items()))
            written.append(exports.write_geojson(out / f"communities_{label}.geojson", exports.community_hulls(part, coords, g)))
        table("communities.csv", "communities", summary)

    with stage("temporal"):
        peak_rows = []
        for wi, _, in_week, split in splits:
            cohorts = {network_label(wi, c): ids for c, ids in zip(COHORTS, (split.hf_ids, split.lf_ids))}
            for r in peak_network_report(in_week, config.peak_windows(), cohorts, node_map, opts, config.edge_mode):
                ind = r.indicators
                vals = ind.as_tuple() if ind else (None,) * 4
                peak_rows.append((r.network, r.window, r.defined, *vals, r.n_nodes, r.n_edges))
        table("peak_indicators.csv", "peak_indicators", peak_rows)

    with stage("rankdiff"):
        period = {p.name: p for p in config.peak_windows()}.get(config.rankdiff_period)
        for wi, _, in_week, split in splits:
            if period is None:
                hf, lf = networks[network_label(wi, "high")], networks[network_label(wi, "low")]
            else:
                hf, lf = (
                    build_network((c for c in in_week if c.passenger_id in ids and c.start in period), node_map, config.edge_mode)
                    for ids in (split.hf_ids, split.lf_ids)
                )
            rows = od_rank_difference(hf, lf, config.rank_r)
            table(f"rankdiff_{wi + 1:02d}.csv", "rankdiff", (r.as_tuple() for r in rows))

    manifest = {
        "inputs": {"records": _sha256(Path(config.records)), "stations": _sha256(Path(config.stations))},
        "config": config.to_dict(with_out_dir=False),
        "networks": sorted(networks),
        "cleaning": rep,
        "artifacts": {p.name: _sha256(p) for p in sorted(written)},
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest
