import json
import math
from pathlib import Path

import numpy as np
import pytest

from solarpot.geom import GeometryError
from solarpot.ingest import (
    ConfigError,
    ContinuityError,
    FormatError,
    LocalFrame,
    RangeError,
    ReferentialError,
    SchemaError,
    frame_for,
    great_circle_m,
    load_buildings,
    load_config,
    load_dem,
    load_objects,
    load_sections,
    load_weather,
    parse_config,
    save_buildings,
    save_dem,
    save_objects,
    save_sections,
    save_weather,
)
from solarpot.shading import DemRaster
from solarpot.solar import clearsky_year

DATA = Path(__file__).parent / "data"


def fc(features, **top):
    return {"type": "FeatureCollection", **top, "features": features}


def square(x=0.0, y=0.0, s=10.0):
    return {"type": "Polygon", "coordinates": [[[x, y], [x + s, y], [x + s, y + s], [x, y + s], [x, y]]]}


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


@pytest.fixture(scope="module")
def fixture_layers():
    frame = frame_for(DATA / "buildings.geojson")
    b = load_buildings(DATA / "buildings.geojson", frame)
    s = load_sections(DATA / "sections.geojson", b, frame)
    o = load_objects(DATA / "objects.geojson", s, frame)
    return frame, b, s, o


# -- feature collections ---------------------------------------------------------

def test_fixture_counts(fixture_layers):
    frame, b, s, o = fixture_layers
    assert (len(b), len(s)) == (10, 23)
    ids = {x.id for x in b}
    assert all(x.building_id in ids for x in s)
    assert {x.section_id for x in o} <= {x.id for x in s}


def test_fixture_is_projected_to_metres(fixture_layers):
    frame, b, s, _ = fixture_layers
    assert frame.lat0_deg == pytest.approx(43.6, abs=0.01)
    for x in b:
        assert 50 < x.footprint.area < 300
        assert abs(x.footprint.centroid.x) < 200 and abs(x.footprint.centroid.y) < 200


def test_empty_collection(tmp_path):
    p = write(tmp_path, "e.geojson", fc([]))
    assert load_buildings(p) == [] and load_sections(p) == [] and load_objects(p) == []


def test_dangling_building_id(tmp_path):
    b = load_buildings(write(tmp_path, "b.geojson", fc([
        {"type": "Feature", "properties": {"id": "b1", "height_m": 9, "ground_elev_m": 0}, "geometry": square()}],
        crs_local=True)))
    p = write(tmp_path, "s.geojson", fc([
        {"type": "Feature", "properties": {"id": "s9", "building_id": "bogus"}, "geometry": square()}],
        crs_local=True))
    with pytest.raises(ReferentialError, match="s9"):
        load_sections(p, b)


def test_missing_property_names_feature_and_field(tmp_path):
    p = write(tmp_path, "b.geojson", fc([
        {"type": "Feature", "properties": {"id": "b7", "ground_elev_m": 0}, "geometry": square()}], crs_local=True))
    with pytest.raises(SchemaError, match="b7.*height_m"):
        load_buildings(p)


def test_invalid_ring_names_feature(tmp_path):
    bow = {"type": "Polygon", "coordinates": [[[0, 0], [1, 1], [1, 0], [0, 1], [0, 0]]]}
    p = write(tmp_path, "b.geojson", fc([
        {"type": "Feature", "properties": {"id": "bx", "height_m": 9, "ground_elev_m": 0}, "geometry": bow}],
        crs_local=True))
    with pytest.raises(GeometryError, match="bx"):
        load_buildings(p)


def test_bad_object_kind(tmp_path):
    p = write(tmp_path, "o.geojson", fc([
        {"type": "Feature", "properties": {"id": "o1", "section_id": "s", "kind": "satellite dish"},
         "geometry": square(s=1)}], crs_local=True))
    with pytest.raises(SchemaError):
        load_objects(p)


def test_not_a_collection(tmp_path):
    with pytest.raises(SchemaError):
        load_buildings(write(tmp_path, "x.json", {"type": "Feature"}))
    bad = tmp_path / "y.json"
    bad.write_text("{not json")
    with pytest.raises(FormatError):
        load_buildings(bad)


def test_round_trip(fixture_layers, tmp_path):
    frame, b, s, o = fixture_layers
    save_buildings(tmp_path / "b.geojson", b, frame)
    save_sections(tmp_path / "s.geojson", s, frame)
    save_objects(tmp_path / "o.geojson", o, frame)
    b2 = load_buildings(tmp_path / "b.geojson")
    s2 = load_sections(tmp_path / "s.geojson", b2)
    o2 = load_objects(tmp_path / "o.geojson", s2)
    assert frame_for(tmp_path / "b.geojson") == frame
    for x, y in zip(b + s + o, b2 + s2 + o2):
        g1 = getattr(x, "footprint", None) or getattr(x, "plan_polygon", None) or x.polygon
        g2 = getattr(y, "footprint", None) or getattr(y, "plan_polygon", None) or y.polygon
        assert np.allclose(np.asarray(g1.exterior.coords), np.asarray(g2.exterior.coords), atol=1e-9, rtol=0)
        assert x.id == y.id
    for x, y in zip(s, s2):
        assert (x.pitch_deg, x.azimuth_deg, x.features, x.ridge_segments) == \
               (y.pitch_deg, y.azimuth_deg, y.features, y.ridge_segments)
        assert {k: v for k, v in y.properties.items() if k != "ridge_segments"} == \
               {k: v for k, v in x.properties.items() if k != "ridge_segments"}


def test_unknown_properties_pass_through(tmp_path):
    p = write(tmp_path, "s.geojson", fc([
        {"type": "Feature", "properties": {"id": "s", "building_id": "b", "cadastre_ref": "AB-12"},
         "geometry": square()}], crs_local=True))
    s = load_sections(p)
    save_sections(tmp_path / "t.geojson", s)
    assert load_sections(tmp_path / "t.geojson")[0].properties["cadastre_ref"] == "AB-12"


# -- projection -------------------------------------------------------------------------

def test_projection_round_trip():
    f = LocalFrame(3.87, 43.6)
    lon, lat = f.inverse(*f.forward([3.5, 4.2, 3.87], [43.2, 44.0, 43.6]))
    assert np.allclose(lon, [3.5, 4.2, 3.87], atol=1e-10) and np.allclose(lat, [43.2, 44.0, 43.6], atol=1e-10)
    assert np.allclose(f.forward(3.87, 43.6), 0.0, atol=1e-9)


def test_projection_distances_within_50km():
    rng = np.random.default_rng(3)
    f = LocalFrame(3.87, 43.6)
    worst = 0.0
    for _ in range(500):
        pts = []
        for _ in range(2):
            r, th = 50_000 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
            pts.append(f.inverse(r * math.cos(th), r * math.sin(th)))
        (lo1, la1), (lo2, la2) = pts
        d_true = great_circle_m(float(lo1), float(la1), float(lo2), float(la2))
        if d_true < 100:
            continue
        x1, y1 = f.forward(lo1, la1)
        x2, y2 = f.forward(lo2, la2)
        worst = max(worst, abs(math.hypot(x2 - x1, y2 - y1) / d_true - 1))
    assert worst < 1e-3


def test_great_circle_known_value():
    # one degree of latitude on the sphere
    assert great_circle_m(0, 0, 0, 1) == pytest.approx(6_371_008.8 * math.pi / 180, rel=1e-12)


# -- weather ----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def weather_lines():
    return (DATA / "weather.csv").read_text().splitlines()


def test_weather_fixture_loads():
    w = load_weather(DATA / "weather.csv", 43.6, 3.87)
    assert len(w) == 8760
    ref = clearsky_year(2021, 43.6, 3.87)
    assert np.array_equal(w.ghi, ref.ghi) and np.array_equal(w.times, ref.times)


def test_weather_missing_row(weather_lines, tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("\n".join(weather_lines[:100] + weather_lines[101:]) + "\n")
    missing = weather_lines[100].split(",")[0].rstrip("Z")
    with pytest.raises(ContinuityError, match=missing):
        load_weather(p, 43.6, 3.87)


def test_weather_duplicate_row(weather_lines, tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("\n".join(weather_lines[:101] + weather_lines[100:]) + "\n")
    with pytest.raises(ContinuityError, match="duplicate"):
        load_weather(p, 43.6, 3.87)


def test_weather_negative_dni(weather_lines, tmp_path):
    lines = list(weather_lines)
    cols = lines[4000].split(",")
    cols[2] = "-5"
    lines[4000] = ",".join(cols)
    p = tmp_path / "w.csv"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(RangeError):
        load_weather(p, 43.6, 3.87)


def test_weather_shuffled_is_sorted(weather_lines, tmp_path):
    body = weather_lines[1:]
    rng = np.random.default_rng(0)
    p = tmp_path / "w.csv"
    p.write_text("\n".join([weather_lines[0]] + [body[i] for i in rng.permutation(len(body))]) + "\n")
    w = load_weather(p, 43.6, 3.87)
    assert np.all(np.diff(w.times) > np.timedelta64(0, "s"))


def test_weather_round_trip(tmp_path):
    w = load_weather(DATA / "weather.csv", 43.6, 3.87)
    save_weather(tmp_path / "w.csv", w)
    assert (tmp_path / "w.csv").read_text() == (DATA / "weather.csv").read_text()


def test_weather_bad_header(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("time,ghi\n")
    with pytest.raises(FormatError):
        load_weather(p, 43.6, 3.87)


# -- DEM ------------------------------------------------------------------------------

def test_dem_zeros(tmp_path):
    p = tmp_path / "d.asc"
    p.write_text("ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 10\n" + "0 0 0\n" * 3)
    d = load_dem(p)
    assert d.elevation_m.shape == (3, 3) and not d.elevation_m.any()


def test_dem_value_count_mismatch(tmp_path):
    p = tmp_path / "d.asc"
    p.write_text("ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 10\n" + "0 " * 8)
    with pytest.raises(FormatError):
        load_dem(p)


def test_dem_nodata_round_trip(tmp_path):
    z = np.arange(12, dtype=float).reshape(3, 4) * 1.5
    z[1, 2] = z[0, 0] = -9999.0
    save_dem(tmp_path / "d.asc", DemRaster((100.0, -50.0), 5.0, z, -9999.0))
    d = load_dem(tmp_path / "d.asc")
    assert np.array_equal(d.elevation_m, z) and d.nodata == -9999.0 and d.origin == (100.0, -50.0)


def test_dem_xllcenter(tmp_path):
    p = tmp_path / "d.asc"
    p.write_text("ncols 2\nnrows 2\nxllcenter 5\nyllcenter 5\ncellsize 10\n1 2\n3 4\n")
    assert load_dem(p).origin == (0.0, 0.0)


# -- configuration -----------------------------------------------------------------

def test_fixture_config():
    cfg = load_config(DATA / "config.json")
    assert cfg.path("weather") == DATA / "weather.csv"
    assert cfg.panel.power_wp > 0 and cfg.workers == 1


def test_config_missing_path_names_it(tmp_path):
    with pytest.raises(ConfigError, match="nothere.csv"):
        parse_config({"paths": {"weather": "nothere.csv"}}, tmp_path)


def test_config_unknown_keys():
    with pytest.raises(ConfigError):
        parse_config({"colour": "red"})
    with pytest.raises(ConfigError):
        parse_config({"panel": {"wattage": 3}})
    with pytest.raises(ConfigError):
        parse_config({"paths": {"lidar": "x"}})


@pytest.mark.parametrize("doc", [
    {"workers": -1}, {"seed": -3}, {"seed": 2 ** 64}, {"failure_threshold": 2},
    {"panel": {"width_m": 1.0, "height_m": 2.0}}, {"shading": {"n_sectors": 4}},
])
def test_config_ranges(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_config_outputs_need_not_exist(tmp_path):
    cfg = parse_config({"paths": {"report": "out/r.geojson"}}, tmp_path)
    assert cfg.path("report") == tmp_path / "out" / "r.geojson"
