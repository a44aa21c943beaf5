"""Batch pipeline: regularize, azimuth, pitch, pack, shade, pvout, potential.

Each stage maps a feature collection of roof sections to a new one, adding
properties.  A full run applies the stages in memory, passing every
intermediate document through the same JSON encoding the per-stage
commands write to disk, so a run and a chain of stage commands produce the
same bytes.

Work is split by building (sibling sections share context) and gathered
back in section-id order, so the output does not depend on the number of
workers.  A failing section gets an ``error`` property and is skipped by later
stages; the batch goes on.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from shapely.geometry import Polygon, box

from . import __version__
from .geom import polygon_area
from .ingest import (
    ConfigError,
    LocalFrame,
    RunConfig,
    collection_doc,
    collection_from_doc,
    collection_frame,
    dumps_doc,
    feature,
    load_buildings,
    load_dem,
    load_objects,
    load_weather,
    parse_sections,
    read_collection,
    section_feature,
)
from .packing import pack_panels
from .pitch import PitchModel, fit_pitch_models, read_training_csv
from .roofs import assign_azimuths, regularize_sections
from .shading import HorizonMask, SpatialIndex, building_horizon, combine_masks, dem_horizon, sky_view_factor
from .solar import pvout_annual

log = logging.getLogger(__name__)

STAGES = ("regularize", "azimuth", "pitch", "pack", "shade", "pvout", "potential")
REPORT_FIELDS = ("azimuth_deg", "pitch_deg", "n_modules", "pvout_kwh_per_kwp", "pvout_direct",
                 "pvout_diffuse", "svf", "potential_kwh_per_year")


def potential_kwh(n_modules, power_wp, pvout_kwh_per_kwp) -> float:
    """Yearly energy of ``n_modules`` modules of ``power_wp`` at a specific yield."""
    for name, v in (("n_modules", n_modules), ("power_wp", power_wp), ("pvout", pvout_kwh_per_kwp)):
        if v is None or not v >= 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    return n_modules * (power_wp / 1000.0) * pvout_kwh_per_kwp


@dataclass
class Context:
    """Shared read-only inputs, loaded on first use."""

    config: RunConfig

    def _path(self, key, required=True):
        p = self.config.path(key)
        if p is None and required:
            raise ConfigError(f"config paths.{key} is required for this stage")
        return p

    @cached_property
    def frame(self) -> Optional[LocalFrame]:
        p = self._path("buildings", required=False)
        return collection_frame(read_collection(p)) if p is not None else None

    @cached_property
    def buildings(self) -> dict:
        return {b.id: b for b in load_buildings(self._path("buildings"), self.frame)}

    @cached_property
    def index(self) -> SpatialIndex:
        ids = sorted(self.buildings)
        return SpatialIndex([self.buildings[i] for i in ids])

    @cached_property
    def objects(self) -> dict:
        p = self._path("objects", required=False)
        out: dict = {}
        if p is not None:
            for o in load_objects(p, frame=self.frame):
                out.setdefault(o.section_id, []).append(o)
        return out

    @cached_property
    def site(self) -> tuple:
        lat, lon = self.config.latitude_deg, self.config.longitude_deg
        if lat is None or lon is None:
            if self.frame is None:
                raise ConfigError("latitude_deg/longitude_deg are needed when inputs are not geographic")
            lat = self.frame.lat0_deg if lat is None else lat
            lon = self.frame.lon0_deg if lon is None else lon
        return float(lat), float(lon)

    @cached_property
    def weather(self):
        return load_weather(self._path("weather"), *self.site)

    @cached_property
    def dem(self):
        p = self._path("dem", required=False)
        return load_dem(p) if p is not None else None

    @cached_property
    def pitch_model(self) -> Optional[PitchModel]:
        p = self._path("pitch_model", required=False)
        if p is not None:
            return PitchModel.from_json(p.read_text())
        t = self._path("pitch_training", required=False)
        if t is None:
            return None
        pc = self.config.pitch
        return fit_pitch_models(read_training_csv(t), pc.n_trees, pc.max_depth, pc.min_leaf, self.config.seed)


# -- per-building stage bodies ---------------------------------------------------------

def _fail(s, stage: str, exc) -> object:
    props = dict(s.properties)
    props["error"] = f"{stage}: {exc}"
    return replace(s, properties=props)


def _with(s, **values):
    props = dict(s.properties)
    props.update(values)
    return replace(s, properties=props)


def _regularize(ctx: Context, bid: str, secs: list) -> list:
    todo = [s for s in secs if not s.properties.get("error")]
    if not todo:
        return secs
    reg = regularize_sections(ctx.buildings[bid].footprint, [s.plan_polygon for s in todo])
    new = {todo[k].id: p for p, k in zip(reg.polygons, reg.source_index)}
    out = []
    for s in secs:
        if s.properties.get("error"):
            out.append(s)
        elif s.id in new:
            out.append(replace(s, plan_polygon=new[s.id]))
        else:
            out.append(_fail(s, "regularize", "section dropped (outside the footprint or fully overlapped)"))
    return out


def _azimuth(ctx: Context, bid: str, secs: list) -> list:
    todo = [s for s in secs if not s.properties.get("error")]
    done = {s.id: s for s in assign_azimuths(todo, ctx.site[0], ctx.config.shading.flat_azimuth_deg)}
    return [done.get(s.id, s) for s in secs]


def _pitch(ctx: Context, bid: str, secs: list) -> list:
    todo = [s for s in secs if not s.properties.get("error") and s.pitch_deg is None]
    if not todo:
        return secs
    model = ctx.pitch_model
    if model is None:
        ids = {s.id for s in todo}
        return [_fail(s, "pitch", "no pitch model configured") if s.id in ids else s for s in secs]
    b = ctx.buildings[bid]
    feats = []
    for s in todo:
        f = s.features
        feats.append(replace(f, building_height_m=b.height_m if f.building_height_m is None else f.building_height_m,
                             footprint_area_m2=polygon_area(b.footprint) if f.footprint_area_m2 is None
                             else f.footprint_area_m2))
    pitch = model.predict(feats, ctx.site[0])
    done = {s.id: _with(replace(s, pitch_deg=float(p)), pitch_source="predicted") for s, p in zip(todo, pitch)}
    return [done.get(s.id, s) for s in secs]


def _pack(ctx: Context, bid: str, s):
    layout = pack_panels(s, ctx.objects.get(s.id, []), ctx.config.panel)
    orient = layout.placements[0][1] if layout.placements else None
    return _with(s, n_modules=layout.count, module_orientation=orient)


def _shade(ctx: Context, bid: str, s):
    sc = ctx.config.shading
    c = s.plan_polygon.centroid
    h = ctx.buildings[bid].top_elev_m
    mask = building_horizon((c.x, c.y), h, ctx.index, sc.n_sectors, sc.building_max_dist_m,
                            min_gamma_deg=sc.min_gamma_deg)
    if ctx.dem is not None:
        mask = combine_masks([mask, dem_horizon((c.x, c.y), h, ctx.dem, sc.n_sectors, sc.dem_max_dist_m,
                                                sc.dem_step_m)])
    return _with(s, svf=sky_view_factor(mask), horizon_gamma_deg=[float(g) for g in mask.gamma_deg])


def _pvout(ctx: Context, bid: str, s):
    gamma = s.properties.get("horizon_gamma_deg")
    if gamma is None:
        raise ValueError("no horizon mask on this section; run the shade stage first")
    if s.pitch_deg is None or s.azimuth_deg is None:
        raise ValueError("pitch and azimuth must be assigned")
    res = pvout_annual(ctx.weather, HorizonMask(np.asarray(gamma, dtype=float)), s.pitch_deg, s.azimuth_deg,
                       ctx.config.pv)
    return _with(s, pvout_kwh_per_kwp=res.total, pvout_direct=res.direct, pvout_diffuse=res.diffuse)


def _potential(ctx: Context, bid: str, s):
    p = s.properties
    return _with(s, potential_kwh_per_year=potential_kwh(p.get("n_modules"), ctx.config.panel.power_wp,
                                                          p.get("pvout_kwh_per_kwp")))


def _per_section(fn: Callable) -> Callable:
    def run(ctx, bid, secs):
        out = []
        for s in secs:
            if s.properties.get("error"):
                out.append(s)
                continue
            try:
                out.append(fn(ctx, bid, s))
            except Exception as exc:  # one bad section must not stop the batch
                out.append(_fail(s, fn.__name__.lstrip("_"), exc))
        return out
    return run


STAGE_FUNCS = {
    "regularize": _regularize,
    "azimuth": _azimuth,
    "pitch": _pitch,
    "pack": _per_section(_pack),
    "shade": _per_section(_shade),
    "pvout": _per_section(_pvout),
    "potential": _per_section(_potential),
}


def _guarded(stage: str, fn: Callable) -> Callable:
    def run(ctx, bid, secs):
        try:
            return fn(ctx, bid, secs)
        except Exception as exc:
            return [s if s.properties.get("error") else _fail(s, stage, exc) for s in secs]
    return run


STAGE_INPUTS = {
    "regularize": (), "azimuth": ("site",), "pitch": ("site", "pitch_model"), "pack": ("objects",),
    "shade": ("index", "dem"), "pvout": ("weather",), "potential": (),
}


def n_workers(requested: int) -> int:
    return requested if requested > 0 else (os.cpu_count() or 1)


def run_stage(stage: str, ctx: Context, doc: dict, workers: int = 1) -> dict:
    """Apply one stage to a sections feature collection and return the new collection."""
    if stage not in STAGE_FUNCS:
        raise ValueError(f"unknown stage {stage!r}")
    col = collection_from_doc(doc, "sections")
    frame = ctx.frame if not col.crs_local else col.origin
    sections = parse_sections(col, list(ctx.buildings.values()), frame)
    groups: dict = {}
    for s in sections:
        groups.setdefault(s.building_id, []).append(s)
    keys = sorted(groups)
    if keys:
        for name in STAGE_INPUTS[stage]:  # load shared inputs once, before any worker starts
            getattr(ctx, name)
    fn = _guarded(stage, STAGE_FUNCS[stage])
    workers = n_workers(workers)
    if workers == 1 or len(keys) <= 1:
        parts = [fn(ctx, k, groups[k]) for k in keys]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda k: fn(ctx, k, groups[k]), keys))
    out = sorted((s for part in parts for s in part), key=lambda s: s.id)
    origin = ctx.frame if ctx.frame is not None else col.origin
    return collection_doc([section_feature(s) for s in out], origin, col.extra)


def normalize(doc: dict) -> dict:
    """The document exactly as a reader of the written file would see it."""
    return json.loads(dumps_doc(doc))


@dataclass
class RunResult:
    report: dict
    summary: dict

    @property
    def n_sections(self) -> int:
        return self.summary["n_sections"]

    @property
    def n_errors(self) -> int:
        return self.summary["n_errors"]

    @property
    def failed(self) -> bool:
        return self.summary["failed"]


def summarize(report: dict, config: RunConfig, elapsed_s: float) -> dict:
    feats = report["features"]
    errors = [f for f in feats if f["properties"].get("error")]
    ok = [f["properties"] for f in feats if not f["properties"].get("error")]
    n = len(feats)
    return {
        "version": __version__,
        "n_sections": n,
        "n_buildings": len({f["properties"]["building_id"] for f in feats}),
        "n_errors": len(errors),
        "errors": {f["properties"]["id"]: f["properties"]["error"] for f in errors},
        "failed": n > 0 and len(errors) / n > config.failure_threshold,
        "total_modules": int(sum(p.get("n_modules") or 0 for p in ok)),
        "total_potential_kwh_per_year": math.fsum(p.get("potential_kwh_per_year") or 0.0 for p in ok),
        "config": config.to_dict(),
        "timing_s": elapsed_s,
    }


def run_pipeline(config: RunConfig, sections_doc: Optional[dict] = None, stages=STAGES,
                 workers: Optional[int] = None) -> RunResult:
    t0 = time.perf_counter()
    ctx = Context(config)
    if sections_doc is None:
        sections_doc = json.loads(ctx._path("sections").read_text())
    workers = config.workers if workers is None else workers
    doc = sections_doc
    for stage in stages:
        doc = normalize(run_stage(stage, ctx, doc, workers))
        log.info("stage %s done", stage)
    return RunResult(doc, summarize(doc, config, time.perf_counter() - t0))


def aggregate(report: dict, cell_size_m: float) -> dict:
    """Sum section potentials on a square grid keyed by the section centroid.

    The grid is anchored at the lower-left centroid, so a cell larger than
    the data extent holds everything.  The anchor is recorded as
    ``grid_origin``.
    """
    if not cell_size_m > 0:
        raise ValueError("cell_size_m must be > 0")
    col = collection_from_doc(report, "report")
    rows = []
    for f in col.features:
        p = f.get("properties") or {}
        if p.get("error") or p.get("potential_kwh_per_year") is None:
            continue
        rings = f["geometry"]["coordinates"]
        c = Polygon(rings[0], rings[1:]).centroid
        rows.append((c.x, c.y, float(p["potential_kwh_per_year"]), p.get("building_id")))
    if not rows:
        return collection_doc([], col.origin, {"cell_size_m": cell_size_m, "grid_origin": None})
    x0 = min(r[0] for r in rows)
    y0 = min(r[1] for r in rows)
    cells: dict = {}
    for cx, cy, v, bid in rows:
        key = (int(math.floor((cx - x0) / cell_size_m)), int(math.floor((cy - y0) / cell_size_m)))
        c = cells.setdefault(key, {"values": [], "buildings": set()})
        c["values"].append(v)
        c["buildings"].add(bid)
    feats = []
    for (i, j) in sorted(cells):
        c = cells[(i, j)]
        g = box(x0 + i * cell_size_m, y0 + j * cell_size_m, x0 + (i + 1) * cell_size_m, y0 + (j + 1) * cell_size_m)
        feats.append(feature(g, {"id": f"{i}_{j}", "potential_kwh_per_year": math.fsum(c["values"]),
                                 "building_count": len(c["buildings"]), "section_count": len(c["values"])}))
    return collection_doc(feats, col.origin, {"cell_size_m": cell_size_m, "grid_origin": [x0, y0]})
