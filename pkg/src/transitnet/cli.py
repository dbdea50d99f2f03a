"""Command-line entry point. Exit codes: 0 ok, 1 usage, 2 data error, 3 internal error."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

from . import exports
from .errors import ConfigError, DataError, InstanceTooLarge, MissingInput, TransitNetError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=1, sort_keys=True, default=str)
    sys.stdout.write("\n")


def _out_dir(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _need(path: str, what: str) -> str:
    if not Path(path).is_file():
        raise MissingInput(f"{what} file {path!r} does not exist")
    return path


def _read_chains(path: str):
    from .ingest import Leg, Mode, parse_timestamp
    from .preprocess import TravelChain

    chains, cur, legs, pid = [], None, [], None
    for cid, p, mode, line, seq, name, ts in exports.read_table(_need(path, "chains"), "chains"):
        if cid != cur and legs:
            chains.append(TravelChain(pid, tuple(legs)))
            legs = []
        cur, pid = cid, p
        legs.append(Leg(Mode.parse(mode), line, seq, name, parse_timestamp(ts)))
    if legs:
        chains.append(TravelChain(pid, tuple(legs)))
    return chains


def _read_graph(path: str):
    from .graph import from_edges

    rows = exports.read_table(_need(path, "edges"), "edges")
    return from_edges([(u, v, f, w) for u, v, *_, f, w in rows])


def _week(text: str | None):
    from .frequency import Window

    if not text:
        return None
    try:
        a, b = text.split("/")
        return Window(datetime.fromisoformat(a), datetime.fromisoformat(b))
    except ValueError:
        raise UsageError(f"bad week {text!r}; expected START/END in ISO format") from None


# subcommands


def cmd_ingest(args) -> int:
    from .ingest import read_records, read_station_file

    out = _out_dir(args)
    summary = {}
    if args.stations:
        cat = read_station_file(_need(args.stations, "stations"), args.delimiter)
        summary["stations"] = len(cat)
    if args.records:
        recs, log = read_records(_need(args.records, "records"), args.delimiter)
        exports.write_table(out / "rejects.csv", "rejects", log.rejects)
        summary.update(records=len(recs), rejected=len(log.rejects), extra_field_rows=log.extra_field_rows, reasons=log.reason_counts())
    _emit(summary)
    return EXIT_OK


def cmd_clean(args) -> int:
    from .ingest import read_records, read_station_file
    from .pipeline import chain_rows, flawed_row
    from .preprocess import CleaningConfig, FlawRules, clean

    out = _out_dir(args)
    recs, _ = read_records(_need(args.records, "records"), args.delimiter)
    coords = read_station_file(_need(args.stations, "stations")).name_coordinates() if args.stations else None
    rules = FlawRules(datetime.fromisoformat(args.window_start), datetime.fromisoformat(args.window_end), args.max_speed, coords)
    chains, report, flawed = clean(recs, CleaningConfig(rules=rules))
    exports.write_table(out / "chains.csv", "chains", chain_rows(chains))
    exports.write_table(out / "flawed.csv", "flawed", (flawed_row(r, why) for r, why in flawed))
    _emit(report.as_dict())
    return EXIT_OK


def cmd_cluster(args) -> int:
    from .cluster import aggregate_nodes, cluster_catalog
    from .ingest import read_station_file

    out = _out_dir(args)
    cat = read_station_file(_need(args.stations, "stations"), args.delimiter)
    model = cluster_catalog(cat, args.k, args.seed, init=args.init)
    nodes = aggregate_nodes(cat, model)
    sizes = {c: int((model.labels == c).sum()) for c in range(model.k)}
    exports.write_table(out / "centroids.csv", "centroids", ((n.node_id, n.longitude, n.latitude, sizes[n.node_id], n.total_flow) for n in nodes))
    exports.write_table(
        out / "assignment.csv",
        "assignment",
        ((e.station_id, e.station_name, e.longitude, e.latitude, model.assignment[e.station_id]) for e in cat),
    )
    exports.write_geojson(out / "stations.geojson", exports.station_points(cat, model.assignment))
    _emit({"k": model.k, "inertia": model.inertia, "iterations": model.iterations_run})
    return EXIT_OK


def cmd_classify(args) -> int:
    from .frequency import count_trips, cumulative_frequency, split_hf_lf

    out = _out_dir(args)
    week = _week(args.week)
    counts = count_trips(_read_chains(args.chains), week)
    split = split_hf_lf(counts, args.quantile, week)
    exports.write_table(out / "cohorts.csv", "cohorts", ((p, counts[p], split.cohort(p)) for p in sorted(counts)))
    exports.write_table(out / "trip_frequency.csv", "trip_frequency", cumulative_frequency(counts))
    exports.write_table(
        out / "split.csv",
        "split",
        [(args.week or "all", split.threshold, split.quantile, len(split.hf_ids), len(split.lf_ids), split.hf_share)],
    )
    _emit({"threshold": split.threshold, "high": len(split.hf_ids), "low": len(split.lf_ids), "hf_share": split.hf_share})
    return EXIT_OK


def _node_map(path: str | None):
    if not path:
        return None
    return {name: c for _, name, _, _, c in reversed(exports.read_table(_need(path, "assignment"), "assignment"))}


def _coords(path: str | None) -> dict:
    if not path:
        return {}
    return {c: (x, y) for c, x, y, *_ in exports.read_table(_need(path, "centroids"), "centroids")}


def cmd_build_net(args) -> int:
    from .graph import build_network, normalize_flows

    out = _out_dir(args)
    chains = _read_chains(args.chains)
    week = _week(args.week)
    if week is not None:
        chains = [c for c in chains if c.start in week]
    if args.period:
        from .pipeline import PipelineConfig

        (period,) = PipelineConfig(peaks=[args.period]).peak_windows()
        chains = [c for c in chains if c.start in period]
    if args.cohorts:
        ids = {p for p, _, c in exports.read_table(_need(args.cohorts, "cohorts"), "cohorts") if c == args.cohort}
        chains = [c for c in chains if c.passenger_id in ids]
    g = normalize_flows(build_network(chains, _node_map(args.assignment), args.mode))
    coords = _coords(args.centroids)
    exports.write_table(out / f"edges_{args.label}.csv", "edges", exports.edge_rows(g, coords))
    if coords:
        exports.write_geojson(out / f"flows_{args.label}.geojson", exports.flow_lines(g, coords))
    _emit({"nodes": g.n, "edges": g.m, "flow": int(g.flow.sum())})
    return EXIT_OK


def _opts(args):
    from .metrics import PathOptions

    return PathOptions(args.invert_weights, args.epsilon)


def cmd_metrics(args) -> int:
    from .metrics import composite_rank, indicators, node_metrics

    out = _out_dir(args)
    g = _read_graph(args.edges)
    nm = node_metrics(g, args.weighted, _opts(args))
    exports.write_table(out / f"node_metrics_{args.label}.csv", "node_metrics", nm.rows())
    cz = dict(zip(nm.nodes, nm.composite_z.tolist()))
    top = composite_rank(nm, min(args.top_k, g.n))
    exports.write_table(out / f"central_nodes_{args.label}.csv", "central_nodes", ((args.label, i + 1, v, cz[v]) for i, v in enumerate(top)))
    ind = indicators(g, _opts(args))
    exports.write_table(out / f"indicators_{args.label}.csv", "indicators", [(args.label, *ind.as_tuple(), ind.n_nodes, ind.n_edges)])
    _emit({"indicators": ind.__dict__, "top": top})
    return EXIT_OK


def cmd_robustness(args) -> int:
    from .pipeline import robustness_row
    from .robustness import removal_sweep

    out = _out_dir(args)
    g = _read_graph(args.edges)
    ks = [int(k) for k in args.ks.split(",")] if args.ks else [args.top_k]
    reps = removal_sweep(g, ks, args.strategy, args.seed, args.label, args.weighted, _opts(args))
    exports.write_table(out / f"robustness_{args.label}.csv", "robustness", (robustness_row(r) for r in reps))
    _emit([{"k": r.k, "removed": r.removed_nodes, "deltas": r.deltas} for r in reps])
    return EXIT_OK


def cmd_community(args) -> int:
    from .community import louvain

    out = _out_dir(args)
    g = _read_graph(args.edges)
    part = louvain(g, args.seed, args.resolution)
    exports.write_table(out / f"partition_{args.label}.csv", "partition", sorted(part.assignment.items()))
    exports.write_table(
        out / f"communities_{args.label}.csv",
        "communities",
        ((args.label, s.community, s.size, s.average_degree, part.modularity) for s in part.communities),
    )
    if args.centroids:
        exports.write_geojson(out / f"communities_{args.label}.geojson", exports.community_hulls(part, _coords(args.centroids), g))
    _emit({"modularity": part.modularity, "communities": part.n_communities})
    return EXIT_OK


def cmd_temporal(args) -> int:
    from .errors import ConstantSeries
    from .frequency import SLOT_LABELS, bin_time_slots, normalize_slot_table
    from .pipeline import PipelineConfig, peak_network_report

    out = _out_dir(args)
    chains = _read_chains(args.chains)
    week = _week(args.week)
    if week is not None:
        chains = [c for c in chains if c.start in week]
    groups = {"all": frozenset(c.passenger_id for c in chains)}
    if args.cohorts:
        rows = exports.read_table(_need(args.cohorts, "cohorts"), "cohorts")
        groups = {name: frozenset(p for p, _, c in rows if c == name) for name in ("high", "low")}
    slots = {name: bin_time_slots(c for c in chains if c.passenger_id in ids).counts.tolist() for name, ids in groups.items()}
    try:
        norm = normalize_slot_table(slots)
    except ConstantSeries:
        norm = {name: [None] * len(SLOT_LABELS) for name in slots}
    exports.write_table(
        out / "time_slots.csv",
        exports.time_slot_schema(list(slots)),
        ((s, *[slots[x][i] for x in slots], *[norm[x][i] for x in slots]) for i, s in enumerate(SLOT_LABELS)),
    )
    cfg = PipelineConfig(peaks=args.peaks or PipelineConfig().peaks)
    cfg.validate(check_paths=False)
    rows = peak_network_report(chains, cfg.peak_windows(), groups, _node_map(args.assignment), _opts(args), args.mode)
    exports.write_table(
        out / "peak_indicators.csv",
        "peak_indicators",
        ((r.network, r.window, r.defined, *(r.indicators.as_tuple() if r.indicators else (None,) * 4), r.n_nodes, r.n_edges) for r in rows),
    )
    _emit([{"cohort": r.network, "window": r.window, "defined": r.defined, "flow": r.total_flow} for r in rows])
    return EXIT_OK


def cmd_rankdiff(args) -> int:
    from .pipeline import od_rank_difference

    out = _out_dir(args)
    rows = od_rank_difference(_read_graph(args.hf_edges), _read_graph(args.lf_edges), args.r)
    exports.write_table(out / "rankdiff.csv", "rankdiff", (r.as_tuple() for r in rows))
    _emit({"rows": len(rows)})
    return EXIT_OK


def cmd_report(args) -> int:
    from .pipeline import PipelineConfig, run_pipeline

    cfg = PipelineConfig.load(args.config)
    if args.out:
        cfg.out_dir = args.out
    manifest = run_pipeline(cfg)
    _emit({"networks": manifest["networks"], "artifacts": len(manifest["artifacts"]), "out_dir": cfg.out_dir})
    return EXIT_OK


def cmd_generate(args) -> int:
    from .oracle import SynthConfig, generate, write_synthetic

    cfg = SynthConfig(
        n_stations=args.stations,
        n_passengers=args.passengers,
        days=args.days,
        hf_fraction=args.hf_fraction,
        seed=args.seed,
        duplicate_rate=args.duplicate_rate,
        out_of_window_rate=args.out_of_window_rate,
    )
    paths = write_synthetic(generate(cfg), args.out)
    _emit({k: str(v) for k, v in paths.items()})
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(args.trials, args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="transitnet", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        return sp

    def path_opts(sp):
        sp.add_argument("--invert-weights", action="store_true", help="use 1/flow as edge length")
        sp.add_argument("--epsilon", type=float, default=1e-9, help="floor for zero normalized lengths")

    sp = add("ingest", cmd_ingest, "parse records and stations, report rejects")
    sp.add_argument("--records")
    sp.add_argument("--stations")
    sp.add_argument("--delimiter", default=",")
    sp.add_argument("--out", default=".")

    sp = add("clean", cmd_clean, "dedup, filter and assemble travel chains")
    sp.add_argument("--records", required=True)
    sp.add_argument("--stations", help="enables the speed rule")
    sp.add_argument("--delimiter", default=",")
    sp.add_argument("--window-start", default="2018-03-01T00:00:00")
    sp.add_argument("--window-end", default="2018-04-01T00:00:00")
    sp.add_argument("--max-speed", type=float, default=120.0)
    sp.add_argument("--out", default=".")

    sp = add("cluster", cmd_cluster, "k-means stations into nodes")
    sp.add_argument("--stations", required=True)
    sp.add_argument("-k", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--init", choices=("random", "k-means++"), default="random")
    sp.add_argument("--delimiter", default=",")
    sp.add_argument("--out", default=".")

    sp = add("classify", cmd_classify, "split passengers into high/low frequency")
    sp.add_argument("--chains", required=True)
    sp.add_argument("--week", help="START/END in ISO format")
    sp.add_argument("--quantile", type=float, default=0.25)
    sp.add_argument("--out", default=".")

    sp = add("build-net", cmd_build_net, "build a normalized OD network")
    sp.add_argument("--chains", required=True)
    sp.add_argument("--assignment", help="station -> cluster table")
    sp.add_argument("--centroids", help="adds a flow-line GeoJSON")
    sp.add_argument("--cohorts")
    sp.add_argument("--cohort", default="high", choices=("high", "low"))
    sp.add_argument("--week")
    sp.add_argument("--period", help="keep chains starting in a daily window, name=HH:MM-HH:MM")
    sp.add_argument("--mode", choices=("consecutive", "first-last"), default="consecutive")
    sp.add_argument("--label", default="net")
    sp.add_argument("--out", default=".")

    sp = add("metrics", cmd_metrics, "centralities and network indicators")
    sp.add_argument("--edges", required=True)
    sp.add_argument("--weighted", action="store_true", help="weighted betweenness and closeness")
    sp.add_argument("--top-k", type=int, default=10)
    sp.add_argument("--label", default="net")
    path_opts(sp)
    sp.add_argument("--out", default=".")

    sp = add("robustness", cmd_robustness, "remove central nodes and compare indicators")
    sp.add_argument("--edges", required=True)
    sp.add_argument("--top-k", type=int, default=10)
    sp.add_argument("--ks", help="comma-separated sweep, overrides --top-k")
    sp.add_argument("--strategy", choices=("composite", "degree", "random"), default="composite")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--weighted", action="store_true")
    sp.add_argument("--label", default="net")
    path_opts(sp)
    sp.add_argument("--out", default=".")

    sp = add("community", cmd_community, "Louvain communities")
    sp.add_argument("--edges", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--resolution", type=float, default=1.0)
    sp.add_argument("--centroids", help="adds a hull GeoJSON")
    sp.add_argument("--label", default="net")
    sp.add_argument("--out", default=".")

    sp = add("temporal", cmd_temporal, "time-slot flows and peak-window networks")
    sp.add_argument("--chains", required=True)
    sp.add_argument("--cohorts")
    sp.add_argument("--assignment")
    sp.add_argument("--week")
    sp.add_argument("--peaks", nargs="*", help="name=HH:MM-HH:MM")
    sp.add_argument("--mode", choices=("consecutive", "first-last"), default="consecutive")
    path_opts(sp)
    sp.add_argument("--out", default=".")

    sp = add("rankdiff", cmd_rankdiff, "OD rank difference between two networks")
    sp.add_argument("--hf-edges", required=True)
    sp.add_argument("--lf-edges", required=True)
    sp.add_argument("-r", type=int, default=1000)
    sp.add_argument("--out", default=".")

    sp = add("report", cmd_report, "run the whole pipeline from a config file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", help="overrides out_dir")

    sp = add("generate", cmd_generate, "write a synthetic dataset")
    sp.add_argument("--out", required=True)
    sp.add_argument("--stations", type=int, default=500)
    sp.add_argument("--passengers", type=int, default=1000)
    sp.add_argument("--days", type=int, default=14)
    sp.add_argument("--hf-fraction", type=float, default=0.25)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--duplicate-rate", type=float, default=0.0)
    sp.add_argument("--out-of-window-rate", type=float, default=0.0)

    sp = add("verify", cmd_verify, "check the algorithms against brute-force oracles")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, InstanceTooLarge, TransitNetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
