"""Delimited table and GeoJSON writers, each with a matching typed reader."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from shapely.geometry import MultiPoint, mapping

# column codecs: (format, parse)


def _fmt_float(x) -> str:
    return "" if x is None else repr(float(x))


def _parse_opt_float(s: str):
    return None if s == "" else float(s)


def _fmt_opt_int(x) -> str:
    return "" if x is None else str(int(x))


def _parse_opt_int(s: str):
    return None if s == "" else int(s)


def parse_node(s: str):
    """Node keys that are all digits are cluster ids; anything else is a station name."""
    return int(s) if s.isdigit() else s


def _fmt_bool(x) -> str:
    return "1" if x else "0"


CODECS: dict[str, tuple[Callable[[Any], str], Callable[[str], Any]]] = {
    "str": (str, str),
    "int": (lambda x: str(int(x)), int),
    "float": (_fmt_float, float),
    "float?": (_fmt_float, _parse_opt_float),
    "int?": (_fmt_opt_int, _parse_opt_int),
    "node": (str, parse_node),
    "bool": (_fmt_bool, lambda s: s == "1"),
}


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[tuple[str, str], ...]

    @property
    def header(self) -> list[str]:
        return [c for c, _ in self.columns]

    def format_row(self, row: Sequence) -> list[str]:
        if len(row) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(row)}")
        return [CODECS[t][0](v) for (_, t), v in zip(self.columns, row)]

    def parse_row(self, row: Sequence[str]) -> tuple:
        if len(row) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} fields, got {len(row)}")
        return tuple(CODECS[t][1](v) for (_, t), v in zip(self.columns, row))


def _schema(name, *cols) -> TableSchema:
    return TableSchema(name, tuple(tuple(c.split(":")) for c in cols))


_IND = ("global_clustering:float?", "scc_count:int?", "avg_shortest_path:float?", "efficiency:float?")

SCHEMAS = {
    s.name: s
    for s in [
        _schema("records", "passenger_id:str", "mode:str", "line:str", "station_seq:int", "station_name:str", "timestamp:str"),
        _schema("chains", "chain_id:int", "passenger_id:str", "mode:str", "line:str", "station_seq:int", "station_name:str", "timestamp:str"),
        _schema("rejects", "line_no:int", "reason:str", "raw:str"),
        _schema("flawed", "passenger_id:str", "mode:str", "line:str", "station_seq:int", "station_name:str", "timestamp:str", "reason:str"),
        _schema("cleaning", "stage:str", "count:int"),
        _schema("centroids", "cluster:int", "longitude:float", "latitude:float", "members:int", "total_flow:int"),
        _schema("assignment", "station_id:int", "station_name:str", "longitude:float", "latitude:float", "cluster:int"),
        _schema("trip_frequency", "trip_count:int", "passengers:int", "cumulative_fraction:float"),
        _schema("cohorts", "passenger_id:str", "trips:int", "cohort:str"),
        _schema("split", "week:str", "threshold:int", "quantile:float", "n_high:int", "n_low:int", "hf_share:float"),
        _schema(
            "edges",
            "origin:node",
            "destination:node",
            "origin_longitude:float?",
            "origin_latitude:float?",
            "destination_longitude:float?",
            "destination_latitude:float?",
            "flow:int",
            "normalized_flow:float?",
        ),
        _schema("rankdiff", "origin:node", "destination:node", "hf_rank:int?", "lf_rank:int?", "rank_difference:int"),
        _schema("node_metrics", "node:node", "degree:int", "betweenness:float", "closeness:float", "composite_z:float"),
        _schema("central_nodes", "network:str", "rank:int", "node:node", "composite_z:float"),
        _schema("indicators", "network:str", *_IND, "n_nodes:int", "n_edges:int"),
        _schema(
            "robustness",
            "network:str",
            "k:int",
            "strategy:str",
            "removed:str",
            *[f"{f}_{part}:float?" for f, _ in (c.split(":") for c in _IND) for part in ("before", "after", "delta", "percent")],
        ),
        _schema("communities", "network:str", "community:int", "size:int", "average_degree:float", "modularity:float"),
        _schema("partition", "node:node", "community:int"),
        _schema("peak_indicators", "network:str", "window:str", "defined:bool", *_IND, "n_nodes:int", "n_edges:int"),
        _schema("mann_whitney", "week:str", "metric:str", "n_high:int", "n_low:int", "u:float", "p_value:float"),
    ]
}


def time_slot_schema(labels: Sequence[str]) -> TableSchema:
    """Wide slot table: one count column and one normalized column per network label."""
    return _schema("time_slots", "slot:str", *[f"{x}:int" for x in labels], *[f"{x}_normalized:float?" for x in labels])


def edge_rows(graph, coords: Mapping | None = None):
    """Rows for the ``edges`` table; coordinates are blank for nodes without a location."""
    coords = coords or {}
    for u, v, f, w in graph.edges():
        a, b = coords.get(u, (None, None)), coords.get(v, (None, None))
        yield (u, v, a[0], a[1], b[0], b[1], f, w)


def write_table(path: str | Path, schema: TableSchema | str, rows: Iterable[Sequence], delimiter: str = ",") -> Path:
    schema = SCHEMAS[schema] if isinstance(schema, str) else schema
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(schema.header)
        for row in rows:
            w.writerow(schema.format_row(row))
    return path


def read_table(path: str | Path, schema: TableSchema | str, delimiter: str = ",") -> list[tuple]:
    """Rows typed per ``schema``; the header must match exactly."""
    schema = SCHEMAS[schema] if isinstance(schema, str) else schema
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header != schema.header:
            raise ValueError(f"{path}: header {header} does not match {schema.name} columns {schema.header}")
        return [schema.parse_row(r) for r in reader]


# GeoJSON


def _collection(features: list[dict]) -> dict:
    return {"type": "FeatureCollection", "features": features}


def _feature(geometry: dict, props: Mapping) -> dict:
    return {"type": "Feature", "geometry": geometry, "properties": dict(props)}


def station_points(catalog, assignment: Mapping[int, int] | None = None) -> dict:
    feats = []
    for e in catalog:
        props = {"station_id": e.station_id, "station_name": e.station_name, "mode": e.mode.value if e.mode else None}
        if assignment is not None:
            props["cluster"] = assignment.get(e.station_id)
        feats.append(_feature({"type": "Point", "coordinates": [e.longitude, e.latitude]}, props))
    return _collection(feats)


def flow_lines(graph, coords: Mapping[Any, tuple[float, float]]) -> dict:
    """One LineString per non-loop edge whose endpoints have coordinates."""
    feats = []
    for u, v, f, norm in graph.edges():
        if u == v or u not in coords or v not in coords:
            continue
        geom = {"type": "LineString", "coordinates": [list(coords[u]), list(coords[v])]}
        feats.append(_feature(geom, {"origin": u, "destination": v, "flow": f, "normalized_flow": norm}))
    return _collection(feats)


def community_hulls(partition, coords: Mapping[Any, tuple[float, float]], graph=None) -> dict:
    """Convex hull per community, plus inter-community flow lines when ``graph`` is given.

    Communities with one or two located members get a Point or LineString.
    """
    members = partition.members()
    feats = []
    centres = {}
    for c in sorted(members):
        pts = [coords[v] for v in members[c] if v in coords]
        if not pts:
            continue
        mp = MultiPoint(pts)
        centres[c] = (mp.centroid.x, mp.centroid.y)
        feats.append(_feature(mapping(mp.convex_hull), {"kind": "hull", "community": c, "size": len(members[c])}))
    if graph is not None:
        between: dict = {}
        for u, v, f, _ in graph.edges():
            cu, cv = partition.assignment[u], partition.assignment[v]
            if cu != cv:
                between[(cu, cv)] = between.get((cu, cv), 0) + f
        for (cu, cv), f in sorted(between.items()):
            if cu in centres and cv in centres:
                geom = {"type": "LineString", "coordinates": [list(centres[cu]), list(centres[cv])]}
                feats.append(_feature(geom, {"kind": "flow", "origin": cu, "destination": cv, "flow": f}))
    return _collection(feats)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def write_geojson(path: str | Path, collection: Mapping) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_plain(collection), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    return path


def read_geojson(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: not a FeatureCollection")
    return obj
