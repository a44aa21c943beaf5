"""Roof-section regularization and geometric azimuth estimation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from shapely.geometry import LineString, Polygon, box

from .geom import TOL, GeometryError, _ring_coords, compass_to_vector, oriented_bbox, rotate_frame
from .pitch import FeatureVector

log = logging.getLogger(__name__)

FLAT_PITCH_DEG = 5.0
OBJECT_KINDS = ("smoke_vent", "roof_window", "chimney", "dormer", "other")


@dataclass(frozen=True)
class Building:
    id: str
    footprint: Polygon
    height_m: float
    ground_elev_m: float = 0.0

    def __post_init__(self):
        if not self.height_m > 0:
            raise ValueError(f"building {self.id}: height_m must be > 0")
        if not math.isfinite(self.ground_elev_m):
            raise ValueError(f"building {self.id}: ground_elev_m must be finite")

    @property
    def top_elev_m(self) -> float:
        return self.ground_elev_m + self.height_m


@dataclass(frozen=True)
class RoofSection:
    """A planar roof face seen in plan view.

    ``azimuth_deg`` is the compass direction the slope faces (clockwise from
    north); ``None`` means not yet assigned.
    """

    id: str
    building_id: str
    plan_polygon: Polygon
    ridge_segments: tuple = ()
    pitch_deg: Optional[float] = None
    azimuth_deg: Optional[float] = None
    features: Optional[FeatureVector] = None
    properties: dict = field(default_factory=dict, compare=False)

    @property
    def is_flat(self) -> bool:
        return self.pitch_deg is not None and self.pitch_deg < FLAT_PITCH_DEG


@dataclass(frozen=True)
class RoofObject:
    id: str
    section_id: str
    polygon: Polygon
    kind: str = "other"


@dataclass
class Regularized:
    """Output of :func:`regularize_sections`.

    ``source_index[k]`` is the position in the input list that produced
    ``polygons[k]``; dropped inputs are listed in ``warnings``.
    """

    polygons: list
    source_index: list
    warnings: list


def principal_facade_angle(footprint: Polygon) -> float:
    """Orientation of the longest exterior edge, modulo 90 degrees.

    Equal-length edges (within 1e-9 relative) are resolved in favour of the
    edge whose start vertex is lexicographically smallest.
    """
    ring = _ring_coords(footprint.exterior)
    if len(ring) < 3:
        raise GeometryError("degenerate footprint")
    edges = np.roll(ring, -1, axis=0) - ring
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    if lengths.max() <= TOL:
        raise GeometryError("degenerate footprint")
    longest = np.flatnonzero(lengths >= lengths.max() * (1 - 1e-9))
    i = min(longest, key=lambda k: (ring[k, 0], ring[k, 1]))
    angle = math.degrees(math.atan2(edges[i, 1], edges[i, 0])) % 90.0
    return 0.0 if angle > 90.0 - 1e-9 else angle


def _cut_overlaps(boxes: list) -> None:
    """Split pairwise overlaps between axis-aligned boxes in place.

    Boxes are ``[minx, miny, maxx, maxy]``.  The overlap is cut along its
    centerline parallel to its longer side; each box keeps its own side.
    """
    n = len(boxes)
    for _ in range(n * n + 1):
        changed = False
        for i in range(n):
            for j in range(i + 1, n):
                a, b = boxes[i], boxes[j]
                if a is None or b is None:
                    continue
                ox = min(a[2], b[2]) - max(a[0], b[0])
                oy = min(a[3], b[3]) - max(a[1], b[1])
                if ox <= TOL or oy <= TOL:
                    continue
                axis = 1 if ox >= oy else 0
                lo, hi = axis, axis + 2
                cut = (max(a[lo], b[lo]) + min(a[hi], b[hi])) / 2
                first_low = (a[lo] + a[hi]) <= (b[lo] + b[hi])
                low, high = (a, b) if first_low else (b, a)
                low[hi] = min(low[hi], cut)
                high[lo] = max(high[lo], cut)
                changed = True
        for k, bx in enumerate(boxes):
            if bx is not None and (bx[2] - bx[0] <= TOL or bx[3] - bx[1] <= TOL):
                boxes[k] = None
        if not changed:
            return


def regularize_sections(footprint: Polygon, raw_sections: list) -> Regularized:
    """Snap raw section polygons to facade-aligned rectangles.

    Each raw section is replaced by its bounding box in the footprint's facade
    frame, clipped to the footprint's box in that frame, and overlapping boxes
    are cut along the overlap centerline.
    """
    theta = principal_facade_angle(footprint)
    origin = footprint.centroid.coords[0]
    fx0, fy0, fx1, fy1 = rotate_frame(footprint, -theta, origin).bounds

    boxes, warnings = [], []
    for k, raw in enumerate(raw_sections):
        if raw.intersection(footprint).area <= TOL * TOL:
            msg = f"section {k} does not overlap its footprint; skipped"
            log.warning(msg)
            warnings.append(msg)
            boxes.append(None)
            continue
        x0, y0, x1, y1 = rotate_frame(raw, -theta, origin).bounds
        bx = [max(x0, fx0), max(y0, fy0), min(x1, fx1), min(y1, fy1)]
        boxes.append(bx if bx[2] - bx[0] > TOL and bx[3] - bx[1] > TOL else None)

    _cut_overlaps(boxes)

    polygons, index = [], []
    for k, bx in enumerate(boxes):
        if bx is None:
            if not any(w.startswith(f"section {k} ") for w in warnings):
                warnings.append(f"section {k} annihilated by clipping")
            continue
        polygons.append(rotate_frame(box(*bx), theta, origin))
        index.append(k)
    return Regularized(polygons, index, warnings)


def bbox_compass_angle(polygon: Polygon) -> float:
    """Orientation of the section's minimum box as a compass bearing modulo 90."""
    angle = (-oriented_bbox(polygon).angle_deg) % 90.0
    return 0.0 if angle > 90.0 - 1e-9 else angle


def estimate_azimuth(section: RoofSection, neighbor_sections: list,
                     latitude_deg: float = 45.0) -> float:
    """Compass azimuth the section faces.

    Candidates are the box orientation plus 0/90/180/270 degrees.  With
    neighbors, the winner maximizes ``d . (c - mean neighbor centroid)`` where
    ``d`` points at the candidate bearing, so sections face away from their
    siblings.  Without neighbors the candidate closest to the equator wins.
    Ties go to the smaller offset.
    """
    base = bbox_compass_angle(section.plan_polygon)
    candidates = [(base + k * 90.0) % 360.0 for k in range(4)]

    if neighbor_sections:
        c = np.asarray(section.plan_polygon.centroid.coords[0])
        others = np.array([n.plan_polygon.centroid.coords[0] for n in neighbor_sections])
        away = c - others.mean(axis=0)
        scores = [float(np.dot(compass_to_vector(a), away)) for a in candidates]
    else:
        facing = 180.0 if latitude_deg >= 0 else 0.0
        scores = [-abs((a - facing + 180.0) % 360.0 - 180.0) for a in candidates]

    best = 0
    for k in range(1, 4):
        if scores[k] > scores[best] + 1e-9:
            best = k
    return candidates[best]


def assign_azimuths(sections: list, latitude_deg: float = 45.0,
                    flat_azimuth_deg: Optional[float] = None) -> list:
    """Fill missing azimuths for the sections of one building.

    Provided azimuths are never overwritten.  Sections known to be flat get
    the mounting azimuth instead of a geometric estimate.
    """
    if flat_azimuth_deg is None:
        flat_azimuth_deg = 180.0 if latitude_deg >= 0 else 0.0
    out = []
    for s in sections:
        if s.azimuth_deg is not None:
            out.append(s)
            continue
        if s.is_flat:
            az = flat_azimuth_deg
        else:
            neighbors = [n for n in sections if n.id != s.id and n.building_id == s.building_id]
            az = estimate_azimuth(s, neighbors, latitude_deg)
        out.append(replace(s, azimuth_deg=az))
    return out


def ridge_lines(section: RoofSection) -> list:
    return [LineString(seg) for seg in section.ridge_segments]
