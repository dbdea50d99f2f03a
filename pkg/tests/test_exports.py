import pytest
from hypothesis import given, strategies as st

from transitnet import exports
from transitnet.community import louvain
from transitnet.graph import from_edges, normalize_flows
from transitnet.ingest import load_station_catalog

_text = st.text(st.characters(blacklist_categories=("Cs",), blacklist_characters="\r\n\x00"), max_size=10)
_node = st.one_of(st.integers(0, 10**6), st.text("abcXYZ -", min_size=1, max_size=8).filter(lambda s: not s.isdigit()))
_float = st.floats(allow_nan=False, allow_infinity=True, width=64)

VALUES = {
    "str": _text,
    "int": st.integers(-(2**62), 2**62),
    "float": _float,
    "float?": st.one_of(st.none(), _float),
    "int?": st.one_of(st.none(), st.integers(-(2**40), 2**40)),
    "node": _node,
    "bool": st.booleans(),
}


def _rows(schema):
    return st.lists(st.tuples(*[VALUES[t] for _, t in schema.columns]), max_size=5)


ALL_SCHEMAS = list(exports.SCHEMAS.values()) + [exports.time_slot_schema(["01high", "01low", "02high", "02low"])]


@pytest.mark.parametrize("schema", ALL_SCHEMAS, ids=lambda s: s.name)
@pytest.mark.parametrize("delimiter", [",", "\t"])
def test_table_round_trip(tmp_path_factory, schema, delimiter):
    @given(_rows(schema))
    def check(rows):
        path = tmp_path_factory.mktemp("t") / "x.csv"
        exports.write_table(path, schema, rows, delimiter)
        assert exports.read_table(path, schema, delimiter) == rows

    check()


def test_header_mismatch(tmp_path):
    p = exports.write_table(tmp_path / "e.csv", "cleaning", [("input", 3)])
    with pytest.raises(ValueError):
        exports.read_table(p, "split")
    with pytest.raises(ValueError):
        exports.write_table(tmp_path / "f.csv", "cleaning", [("input",)])


def test_edge_rows_fill_coordinates():
    g = normalize_flows(from_edges([(0, 1, 2), (1, 9, 4)]))
    rows = list(exports.edge_rows(g, {0: (116.1, 39.9), 1: (116.2, 39.8)}))
    assert rows[0] == (0, 1, 116.1, 39.9, 116.2, 39.8, 2, 0.0)
    assert rows[1][4:6] == (None, None)


def test_geojson_builders(tmp_path):
    cat = load_station_catalog([("A", 116.1, 39.9, "DT"), ("B", 116.2, 39.8, "GJ"), ("C", 116.3, 39.95, "GJ")])
    pts = exports.station_points(cat, {0: 0, 1: 0, 2: 1})
    assert [f["geometry"]["coordinates"] for f in pts["features"]] == [[116.1, 39.9], [116.2, 39.8], [116.3, 39.95]]
    assert pts["features"][1]["properties"] == {"station_id": 1, "station_name": "B", "mode": "GJ", "cluster": 0}

    coords = {0: (0.0, 0.0), 1: (1.0, 0.0), 2: (0.0, 1.0), 3: (5.0, 5.0), 4: (6.0, 5.0)}
    g = normalize_flows(from_edges([(0, 1, 3), (1, 2, 3), (2, 0, 3), (3, 4, 5), (2, 3, 1), (0, 0, 2)]))
    lines = exports.flow_lines(g, coords)
    assert len(lines["features"]) == 5
    assert all(f["geometry"]["type"] == "LineString" for f in lines["features"])

    part = louvain(g)
    hulls = exports.community_hulls(part, coords, g)
    kinds = [f["properties"]["kind"] for f in hulls["features"]]
    assert kinds.count("hull") == part.n_communities and kinds.count("flow") == 1
    shapes = {f["properties"]["community"]: f["geometry"]["type"] for f in hulls["features"] if f["properties"]["kind"] == "hull"}
    assert sorted(shapes.values()) == ["LineString", "Polygon"]

    path = exports.write_geojson(tmp_path / "h.geojson", hulls)
    assert exports.read_geojson(path) == exports._plain(hulls)
    (tmp_path / "bad.json").write_text('{"type": "Feature"}')
    with pytest.raises(ValueError):
        exports.read_geojson(tmp_path / "bad.json")
