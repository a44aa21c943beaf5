"""Reading and writing the pipeline's file formats.

Feature collections follow a GeoJSON subset: Polygon geometries in WGS84
longitude/latitude, or already in local meters when the collection carries
``"crs_local": true``.  Geographic input is projected with a spherical
transverse Mercator centred on the dataset, so every downstream module works
in plain meters (x east, y north).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from shapely.geometry import Polygon

from .geom import GeometryError, make_polygon
from .packing import PanelSpec
from .pitch import FEATURES, FeatureVector
from .roofs import OBJECT_KINDS, Building, RoofObject, RoofSection
from .shading import DEFAULT_SECTORS, BUILDING_MAX_DIST_M, DEM_MAX_DIST_M, DemRaster
from .solar import HOUR, PvSystemConfig, WeatherSeries

EARTH_RADIUS_M = 6_371_008.8
WEATHER_HEADER = ["timestamp_utc", "ghi", "dni", "dhi", "temp_air", "wind_speed"]


class InputError(ValueError):
    """Base class for problems with input files."""


class SchemaError(InputError):
    pass


class ReferentialError(InputError):
    pass


class ContinuityError(InputError):
    pass


class RangeError(InputError):
    pass


class FormatError(InputError):
    pass


class ConfigError(InputError):
    pass


# -- projection -----------------------------------------------------------------

@dataclass(frozen=True)
class LocalFrame:
    """Spherical transverse Mercator with its central point at (lon0, lat0)."""

    lon0_deg: float
    lat0_deg: float

    def forward(self, lon_deg, lat_deg):
        lam = np.radians(np.asarray(lon_deg, dtype=float) - self.lon0_deg)
        phi = np.radians(np.asarray(lat_deg, dtype=float))
        b = np.cos(phi) * np.sin(lam)
        x = EARTH_RADIUS_M * np.arctanh(b)
        y = EARTH_RADIUS_M * (np.arctan2(np.tan(phi), np.cos(lam)) - math.radians(self.lat0_deg))
        return x, y

    def inverse(self, x, y):
        d = np.asarray(y, dtype=float) / EARTH_RADIUS_M + math.radians(self.lat0_deg)
        xr = np.asarray(x, dtype=float) / EARTH_RADIUS_M
        lat = np.degrees(np.arcsin(np.sin(d) / np.cosh(xr)))
        lon = self.lon0_deg + np.degrees(np.arctan2(np.sinh(xr), np.cos(d)))
        return lon, lat

    def to_dict(self) -> dict:
        return {"lon_deg": self.lon0_deg, "lat_deg": self.lat0_deg}

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> Optional["LocalFrame"]:
        if not d:
            return None
        return cls(float(d["lon_deg"]), float(d["lat_deg"]))


def great_circle_m(lon1, lat1, lon2, lat2) -> float:
    """Haversine distance on the sphere used by :class:`LocalFrame`."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


# -- feature collections -----------------------------------------------------------

@dataclass
class Collection:
    features: list
    crs_local: bool
    origin: Optional[LocalFrame]
    extra: dict = field(default_factory=dict)


def collection_from_doc(doc, where="collection") -> Collection:
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise SchemaError(f"{where}: expected a FeatureCollection")
    feats = doc.get("features", [])
    if not isinstance(feats, list):
        raise SchemaError(f"{where}: 'features' must be a list")
    extra = {k: v for k, v in doc.items() if k not in ("type", "features", "crs_local", "origin")}
    return Collection(feats, bool(doc.get("crs_local", False)), LocalFrame.from_dict(doc.get("origin")), extra)


def read_collection(path) -> Collection:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return collection_from_doc(doc, str(path))


def frame_for(path) -> Optional[LocalFrame]:
    """Projection frame for a collection: its recorded origin, or its vertex centroid if geographic."""
    return collection_frame(read_collection(path))


def collection_frame(col: Collection) -> Optional[LocalFrame]:
    if col.crs_local:
        return col.origin
    pts = []
    for f in col.features:
        geom = f.get("geometry") or {}
        for ring in geom.get("coordinates", []) or []:
            pts.extend(ring)
    if not pts:
        return None
    arr = np.asarray(pts, dtype=float)[:, :2]
    return LocalFrame(float(arr[:, 0].mean()), float(arr[:, 1].mean()))


def _feature_id(f: dict, k: int) -> str:
    props = f.get("properties") or {}
    fid = props.get("id", f.get("id"))
    return str(fid) if fid is not None else f"#{k}"


def _polygon(f: dict, fid: str, col: Collection, frame: Optional[LocalFrame]) -> Polygon:
    geom = f.get("geometry")
    if not isinstance(geom, dict) or geom.get("type") != "Polygon":
        raise SchemaError(f"feature {fid}: geometry must be a Polygon")
    rings = geom.get("coordinates")
    if not rings or not isinstance(rings, list):
        raise GeometryError(f"feature {fid}: polygon has no rings")
    try:
        rings = [np.asarray(r, dtype=float)[:, :2] for r in rings]
    except (ValueError, IndexError, TypeError):
        raise GeometryError(f"feature {fid}: malformed coordinates") from None
    if not col.crs_local:
        if frame is None:
            raise InputError(f"feature {fid}: geographic coordinates need a projection frame")
        rings = [np.column_stack(frame.forward(r[:, 0], r[:, 1])) for r in rings]
    try:
        return make_polygon(rings[0], rings[1:])
    except GeometryError as exc:
        raise GeometryError(f"feature {fid}: {exc}") from None


def _require(props: dict, name: str, fid: str, kind=float):
    if name not in props or props[name] is None:
        raise SchemaError(f"feature {fid}: missing required property '{name}'")
    v = props[name]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError(f"feature {fid}: property '{name}' must be a finite number, got {v!r}")
        return float(v)
    if not isinstance(v, (str, int)) or isinstance(v, bool):
        raise SchemaError(f"feature {fid}: property '{name}' must be a string, got {v!r}")
    return str(v)


def _optional_number(props: dict, name: str, fid: str) -> Optional[float]:
    if props.get(name) is None:
        return None
    return _require(props, name, fid)


def _unique(items, what: str):
    seen = set()
    for it in items:
        if it.id in seen:
            raise SchemaError(f"duplicate {what} id {it.id}")
        seen.add(it.id)


def load_buildings(path, frame: Optional[LocalFrame] = None) -> list[Building]:
    return parse_buildings(read_collection(path), frame)


def parse_buildings(col: Collection, frame: Optional[LocalFrame] = None) -> list[Building]:
    if frame is None and not col.crs_local:
        frame = collection_frame(col)
    out = []
    for k, f in enumerate(col.features):
        props = f.get("properties") or {}
        fid = _feature_id(f, k)
        bid = _require(props, "id", fid, str)
        height = _require(props, "height_m", fid)
        ground = _require(props, "ground_elev_m", fid)
        try:
            out.append(Building(bid, _polygon(f, fid, col, frame), height, ground))
        except GeometryError:
            raise
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
    _unique(out, "building")
    return out


def _ridges(props: dict, fid: str, col: Collection, frame: Optional[LocalFrame]) -> tuple:
    raw = props.get("ridge_segments") or []
    segs = []
    for seg in raw:
        try:
            a = np.asarray(seg, dtype=float).reshape(2, 2)
        except (ValueError, TypeError):
            raise SchemaError(f"feature {fid}: ridge_segments entries must be two points") from None
        if not col.crs_local:
            a = np.column_stack(frame.forward(a[:, 0], a[:, 1]))
        segs.append((tuple(map(float, a[0])), tuple(map(float, a[1]))))
    return tuple(segs)


def load_sections(path, buildings: Optional[Sequence[Building]] = None,
                  frame: Optional[LocalFrame] = None) -> list[RoofSection]:
    """Roof sections; with ``buildings`` every ``building_id`` must resolve."""
    return parse_sections(read_collection(path), buildings, frame)


def parse_sections(col: Collection, buildings: Optional[Sequence[Building]] = None,
                   frame: Optional[LocalFrame] = None) -> list[RoofSection]:
    if frame is None and not col.crs_local:
        frame = collection_frame(col)
    known = None if buildings is None else {b.id for b in buildings}
    out = []
    for k, f in enumerate(col.features):
        props = dict(f.get("properties") or {})
        fid = _feature_id(f, k)
        sid = _require(props, "id", fid, str)
        bid = _require(props, "building_id", fid, str)
        if known is not None and bid not in known:
            raise ReferentialError(f"section {sid}: building_id {bid!r} matches no building")
        pitch = _optional_number(props, "pitch_deg", fid)
        az = _optional_number(props, "azimuth_deg", fid)
        if pitch is not None and not 0 <= pitch < 90:
            raise SchemaError(f"feature {fid}: pitch_deg must be in [0, 90)")
        if az is not None:
            az = az % 360.0
        try:
            feats = FeatureVector.from_mapping(props)
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"feature {fid}: {exc}") from None
        out.append(RoofSection(sid, bid, _polygon(f, fid, col, frame), _ridges(props, fid, col, frame),
                               pitch, az, feats, props))
    _unique(out, "section")
    return out


def load_objects(path, sections: Optional[Sequence[RoofSection]] = None,
                 frame: Optional[LocalFrame] = None) -> list[RoofObject]:
    return parse_objects(read_collection(path), sections, frame)


def parse_objects(col: Collection, sections: Optional[Sequence[RoofSection]] = None,
                  frame: Optional[LocalFrame] = None) -> list[RoofObject]:
    if frame is None and not col.crs_local:
        frame = collection_frame(col)
    known = None if sections is None else {s.id for s in sections}
    out = []
    for k, f in enumerate(col.features):
        props = f.get("properties") or {}
        fid = _feature_id(f, k)
        oid = _require(props, "id", fid, str)
        sid = _require(props, "section_id", fid, str)
        kind = _require(props, "kind", fid, str)
        if kind not in OBJECT_KINDS:
            raise SchemaError(f"feature {fid}: kind must be one of {OBJECT_KINDS}, got {kind!r}")
        if known is not None and sid not in known:
            raise ReferentialError(f"object {oid}: section_id {sid!r} matches no section")
        out.append(RoofObject(oid, sid, _polygon(f, fid, col, frame), kind))
    _unique(out, "object")
    return out


# -- writing -----------------------------------------------------------------------

def _plain(v):
    """JSON-ready copy with numpy scalars and arrays converted."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def polygon_geometry(p: Polygon) -> dict:
    rings = [p.exterior, *p.interiors]
    return {"type": "Polygon", "coordinates": [[[float(x), float(y)] for x, y in r.coords] for r in rings]}


def collection_doc(features: Sequence[dict], origin: Optional[LocalFrame] = None,
                   extra: Optional[dict] = None) -> dict:
    doc = {"type": "FeatureCollection", "crs_local": True}
    if origin is not None:
        doc["origin"] = origin.to_dict()
    doc.update(extra or {})
    doc["features"] = list(features)
    return _plain(doc)


def dumps_collection(features: Sequence[dict], origin: Optional[LocalFrame] = None, extra: Optional[dict] = None) -> str:
    return dumps_doc(collection_doc(features, origin, extra))


def dumps_doc(doc: dict) -> str:
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def write_collection(path, features: Sequence[dict], origin: Optional[LocalFrame] = None,
                     extra: Optional[dict] = None) -> None:
    Path(path).write_text(dumps_collection(features, origin, extra))


def feature(geom: Polygon, props: dict) -> dict:
    return {"type": "Feature", "properties": props, "geometry": polygon_geometry(geom)}


def building_feature(b: Building) -> dict:
    return feature(b.footprint, {"id": b.id, "height_m": b.height_m, "ground_elev_m": b.ground_elev_m})


def section_properties(s: RoofSection) -> dict:
    props = dict(s.properties)
    props["id"], props["building_id"] = s.id, s.building_id
    props["pitch_deg"], props["azimuth_deg"] = s.pitch_deg, s.azimuth_deg
    if s.ridge_segments:
        props["ridge_segments"] = [[list(a), list(b)] for a, b in s.ridge_segments]
    if s.features is not None:
        for name in FEATURES:
            v = getattr(s.features, name)
            if name in props or (v is not None and v != "unknown"):
                props[name] = v
    return props


def section_feature(s: RoofSection) -> dict:
    return feature(s.plan_polygon, section_properties(s))


def object_feature(o: RoofObject) -> dict:
    return feature(o.polygon, {"id": o.id, "section_id": o.section_id, "kind": o.kind})


def save_buildings(path, buildings: Sequence[Building], origin: Optional[LocalFrame] = None) -> None:
    write_collection(path, [building_feature(b) for b in buildings], origin)


def save_sections(path, sections: Sequence[RoofSection], origin: Optional[LocalFrame] = None) -> None:
    write_collection(path, [section_feature(s) for s in sections], origin)


def save_objects(path, objects: Sequence[RoofObject], origin: Optional[LocalFrame] = None) -> None:
    write_collection(path, [object_feature(o) for o in objects], origin)


# -- weather ---------------------------------------------------------------------------

def load_weather(path, latitude_deg: float, longitude_deg: float) -> WeatherSeries:
    """Hourly weather CSV (``timestamp_utc,ghi,dni,dhi,temp_air,wind_speed``)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != WEATHER_HEADER:
            raise FormatError(f"{path}: header must be {','.join(WEATHER_HEADER)}")
        stamps, values = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise FormatError(f"{path}:{line_no}: expected 6 columns, got {len(row)}")
            try:
                stamps.append(np.datetime64(row[0].strip().rstrip("Z"), "s"))
                values.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{line_no}: {exc}") from None
    t = np.array(stamps, dtype="datetime64[s]")
    v = np.array(values, dtype=float).reshape(-1, 5)
    if not np.all(np.isfinite(v)):
        k = int(np.flatnonzero(~np.isfinite(v).all(axis=1))[0])
        raise RangeError(f"{path}: non-finite value at {t[k]}")
    neg = (v[:, :3] < 0).any(axis=1)
    if neg.any():
        k = int(np.flatnonzero(neg)[0])
        raise RangeError(f"{path}: negative irradiance at {t[k]}")
    order = np.argsort(t, kind="stable")
    t, v = t[order], v[order]
    steps = np.diff(t)
    if np.any(steps == np.timedelta64(0, "s")):
        k = int(np.flatnonzero(steps == np.timedelta64(0, "s"))[0])
        raise ContinuityError(f"{path}: duplicate hour {t[k]}")
    if np.any(steps != HOUR):
        k = int(np.flatnonzero(steps != HOUR)[0])
        raise ContinuityError(f"{path}: missing hour {t[k] + HOUR}")
    series = WeatherSeries(t, v[:, 0], v[:, 1], v[:, 2], v[:, 3], v[:, 4], latitude_deg, longitude_deg)
    try:
        series.check_full_year()
    except ValueError as exc:
        raise ContinuityError(f"{path}: {exc}") from None
    return series


def save_weather(path, weather: WeatherSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(WEATHER_HEADER)
        for i in range(len(weather)):
            w.writerow([str(weather.times[i]) + "Z"] + [repr(float(a[i])) for a in (
                weather.ghi, weather.dni, weather.dhi, weather.temp_air, weather.wind_speed)])


# -- terrain -----------------------------------------------------------------------------

def load_dem(path) -> DemRaster:
    """ESRI ASCII grid."""
    tokens = Path(path).read_text().split()
    header = {}
    i = 0
    while i + 1 < len(tokens) and tokens[i][0].isalpha():
        header[tokens[i].lower()] = tokens[i + 1]
        i += 2
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        cell = float(header["cellsize"])
        if "xllcorner" in header:
            x0, y0 = float(header["xllcorner"]), float(header["yllcorner"])
        else:
            x0, y0 = float(header["xllcenter"]) - cell / 2, float(header["yllcenter"]) - cell / 2
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad or missing header field {exc}") from None
    nodata = float(header.get("nodata_value", -9999.0))
    vals = tokens[i:]
    if len(vals) != ncols * nrows:
        raise FormatError(f"{path}: header announces {ncols}x{nrows} values, found {len(vals)}")
    try:
        z = np.array(vals, dtype=float).reshape(nrows, ncols)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    try:
        return DemRaster((x0, y0), cell, z, nodata)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def save_dem(path, dem: DemRaster) -> None:
    lines = [f"ncols {dem.n_cols}", f"nrows {dem.n_rows}", f"xllcorner {float(dem.origin[0])!r}",
             f"yllcorner {float(dem.origin[1])!r}", f"cellsize {float(dem.cell_size_m)!r}",
             f"NODATA_value {float(dem.nodata)!r}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in dem.elevation_m]
    Path(path).write_text("\n".join(lines) + "\n")


# -- run configuration ---------------------------------------------------------------------

@dataclass(frozen=True)
class ShadingConfig:
    n_sectors: int = DEFAULT_SECTORS
    building_max_dist_m: float = BUILDING_MAX_DIST_M
    dem_max_dist_m: float = DEM_MAX_DIST_M
    dem_step_m: Optional[float] = None
    min_gamma_deg: float = 0.0
    flat_azimuth_deg: Optional[float] = None

    def __post_init__(self):
        if self.n_sectors < 8:
            raise ValueError("n_sectors must be >= 8")
        if self.building_max_dist_m <= 0 or self.dem_max_dist_m <= 0:
            raise ValueError("max distances must be > 0")
        if not 0 <= self.min_gamma_deg < 90:
            raise ValueError("min_gamma_deg must be in [0, 90)")


@dataclass(frozen=True)
class PitchConfig:
    n_trees: int = 100
    max_depth: int = 15
    min_leaf: int = 5


PATH_KEYS = ("buildings", "sections", "objects", "weather", "dem", "pitch_model", "pitch_training",
             "report", "summary", "aggregate")
INPUT_PATHS = ("buildings", "sections", "objects", "weather", "dem", "pitch_model", "pitch_training")


@dataclass(frozen=True)
class RunConfig:
    paths: dict
    panel: PanelSpec = PanelSpec()
    pv: PvSystemConfig = PvSystemConfig()
    shading: ShadingConfig = ShadingConfig()
    pitch: PitchConfig = PitchConfig()
    latitude_deg: Optional[float] = None
    longitude_deg: Optional[float] = None
    workers: int = 1
    seed: int = 0
    failure_threshold: float = 0.10
    aggregate_cell_size_m: float = 1000.0

    def path(self, key: str) -> Optional[Path]:
        v = self.paths.get(key)
        return None if v is None else Path(v)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["paths"] = {k: str(v) for k, v in self.paths.items()}
        return d


def _build(cls, data, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"config section '{where}' must be an object")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"config section '{where}': unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config section '{where}': {exc}") from None


def parse_config(doc: dict, base_dir=".", check_paths: bool = True) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    top = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - top
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    raw_paths = doc.get("paths") or {}
    bad = set(raw_paths) - set(PATH_KEYS)
    if bad:
        raise ConfigError(f"config paths: unknown keys {sorted(bad)}")
    paths = {k: str(Path(base_dir, v)) for k, v in raw_paths.items() if v is not None}
    if check_paths:
        for k in INPUT_PATHS:
            if k in paths and not os.path.exists(paths[k]):
                raise ConfigError(f"config paths.{k}: {paths[k]} does not exist")
    workers = doc.get("workers", 1)
    seed = doc.get("seed", 0)
    if not isinstance(workers, int) or workers < 0:
        raise ConfigError("workers must be an integer >= 0 (0 = one per CPU)")
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    thr = doc.get("failure_threshold", 0.10)
    if not 0 <= thr <= 1:
        raise ConfigError("failure_threshold must be a fraction")
    lat, lon = doc.get("latitude_deg"), doc.get("longitude_deg")
    if lat is not None and not -90 <= lat <= 90:
        raise ConfigError("latitude_deg must be within [-90, 90]")
    cell = doc.get("aggregate_cell_size_m", 1000.0)
    if not cell > 0:
        raise ConfigError("aggregate_cell_size_m must be > 0")
    return RunConfig(paths=paths, panel=_build(PanelSpec, doc.get("panel"), "panel"),
                     pv=_build(PvSystemConfig, doc.get("pv"), "pv"),
                     shading=_build(ShadingConfig, doc.get("shading"), "shading"),
                     pitch=_build(PitchConfig, doc.get("pitch"), "pitch"),
                     latitude_deg=lat, longitude_deg=lon, workers=workers, seed=seed,
                     failure_threshold=float(thr), aggregate_cell_size_m=float(cell))


def load_config(path, check_paths: bool = True) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_config(doc, path.parent, check_paths)
