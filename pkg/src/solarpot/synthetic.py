"""Synthetic cities and pitch training tables for tests, demos and benchmarks.

Everything here is deterministic given its seed.  Roof sections come out
slightly jittered, the way a segmentation network would hand them over, so
regularization has real work to do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geom import make_polygon, rotate_frame
from .pitch import VOCABULARY, FeatureVector, PitchTrainingRow
from .roofs import Building, RoofObject, RoofSection

ROOF_KINDS = ("gable", "hipped", "flat")


@dataclass
class City:
    buildings: list
    sections: list
    objects: list


def _jitter(rng, pts, noise):
    pts = np.asarray(pts, dtype=float)
    return pts + rng.uniform(-noise, noise, pts.shape) if noise > 0 else pts


def _place(poly_pts, angle, center):
    p = make_polygon(poly_pts)
    p = rotate_frame(p, angle, (0.0, 0.0))
    return make_polygon(np.asarray(p.exterior.coords)[:-1] + center)


def _seg(a, b, angle, center):
    t = math.radians(angle)
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    a, b = rot @ np.asarray(a, float) + center, rot @ np.asarray(b, float) + center
    return (tuple(map(float, a)), tuple(map(float, b)))


def make_building(rng, bid: str, kind: str, center, width: float, depth: float, angle: float,
                  height: float, ground: float = 0.0, noise: float = 0.08, pitch_known: float = 0.3):
    """One building and its raw roof sections; ``width`` runs along the ridge."""
    w, d = width / 2, depth / 2
    center = np.asarray(center, dtype=float)
    fp = _place([(-w, -d), (w, -d), (w, d), (-w, d)], angle, center)
    b = Building(bid, fp, float(height), float(ground))
    material = str(rng.choice(("tile", "slate", "metal")) if kind != "flat" else rng.choice(("concrete", "membrane")))
    base = {"roof_material": material, "roof_type": kind, "roof_shape": "rectangular"}

    if kind == "gable":
        parts = [[(-w, -d), (w, -d), (w, 0), (-w, 0)], [(-w, 0), (w, 0), (w, d), (-w, d)]]
        ridges = [(_seg((-w, 0), (w, 0), angle, center),)] * 2
    elif kind == "hipped":
        r = min(d, w)
        parts = [[(-w, -d), (w, -d), (w - r, 0), (-w + r, 0)],
                 [(w, -d), (w, d), (w - r, 0)],
                 [(w, d), (-w, d), (-w + r, 0), (w - r, 0)],
                 [(-w, d), (-w, -d), (-w + r, 0)]]
        ridge = _seg((-w + r, 0), (w - r, 0), angle, center)
        ridges = [(ridge,)] * 4
    elif kind == "flat":
        parts = [[(-w, -d), (w, -d), (w, d), (-w, d)]]
        ridges = [()]
    else:
        raise ValueError(f"unknown roof kind {kind!r}")

    sections = []
    for k, (pts, rid) in enumerate(zip(parts, ridges)):
        pts = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
        poly = _place(_jitter(rng, pts, noise), angle, center)
        props = dict(base)
        pitch = None
        if kind == "flat":
            pitch = 0.0
        elif rng.random() < pitch_known:
            pitch = float(np.round(rng.uniform(25, 45), 1))
        sections.append(RoofSection(f"{bid}-{k}", bid, poly, rid, pitch, None,
                                    FeatureVector.from_mapping(props), props))
    return b, sections


def synthetic_city(n_buildings: int, seed: int = 0, spacing_m: float = 28.0,
                   kinds: Optional[list] = None, object_rate: float = 0.3) -> City:
    """Buildings on a jittered square grid with gable, hipped and flat roofs."""
    rng = np.random.default_rng(seed)
    side = int(math.ceil(math.sqrt(n_buildings)))
    buildings, sections, objects = [], [], []
    for i in range(n_buildings):
        gx, gy = i % side, i // side
        center = (np.array([gx, gy], dtype=float) - (side - 1) / 2) * spacing_m + rng.uniform(-3, 3, 2)
        kind = kinds[i] if kinds is not None else str(rng.choice(ROOF_KINDS, p=(0.5, 0.25, 0.25)))
        width, depth = float(rng.uniform(10, 18)), float(rng.uniform(7, 11))
        angle = float(rng.choice((0.0, 90.0)) + rng.uniform(-25, 25))
        height = float(np.round(rng.uniform(5, 18) if kind != "flat" else rng.uniform(8, 30), 2))
        b, secs = make_building(rng, f"b{i:04d}", kind, center, width, depth, angle, height)
        buildings.append(b)
        sections.extend(secs)
        if rng.random() < object_rate:
            s = secs[int(rng.integers(len(secs)))]
            c = s.plan_polygon.representative_point()
            objects.append(RoofObject(f"o{len(objects):04d}", s.id,
                                      make_polygon([(c.x - 0.35, c.y - 0.35), (c.x + 0.35, c.y - 0.35),
                                                    (c.x + 0.35, c.y + 0.35), (c.x - 0.35, c.y + 0.35)]),
                                      "chimney"))
    return City(buildings, sections, objects)


def fixture_city() -> City:
    """Ten buildings, 23 roof sections: seven gables, two hipped roofs, one flat roof."""
    kinds = ["gable", "hipped", "gable", "flat", "gable", "gable", "hipped", "gable", "gable", "gable"]
    return synthetic_city(10, seed=2021, kinds=kinds, object_rate=0.5)


# -- pitch training tables --------------------------------------------------------------

TRAINING_LATITUDES = (43.3, 43.6, 45.2, 47.2, 48.6, 50.6)
_TYPE_EFFECT = {"flat": -0.9, "gable": 0.1, "hipped": -0.05, "shed": -0.3}
_MATERIAL_EFFECT = {"tile": 0.0, "slate": 0.35, "metal": -0.15, "concrete": -0.5, "membrane": -0.6}


def synthetic_pitch_rows(n: int, seed: int = 0, noise_deg: float = 2.0) -> list:
    """Training rows whose normalized pitch depends non-linearly on the attributes.

    Mean pitch grows with latitude; roof type and material shift it, and
    tall buildings get flatter roofs.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        kind = str(rng.choice(list(_TYPE_EFFECT)))
        material = str(rng.choice(("concrete", "membrane")) if kind == "flat"
                        else rng.choice(("tile", "slate", "metal")))
        height = float(np.round(rng.uniform(3, 30), 2))
        area = float(np.round(rng.uniform(60, 400), 1))
        shape = str(rng.choice(VOCABULARY["roof_shape"][:4]))
        lat = float(rng.choice(TRAINING_LATITUDES))
        mean = 1.6 * lat - 40.0
        norm = _TYPE_EFFECT[kind] + _MATERIAL_EFFECT[material] * (kind != "flat") - 0.15 * (height > 15)
        pitch = float(np.clip(mean * (1 + norm) + rng.normal(0, noise_deg), 0.0, 75.0))
        f = FeatureVector(material, kind, height, shape, area)
        rows.append(PitchTrainingRow(f, lat, round(pitch, 2)))
    return rows
