"""Planar geometry kernel.

Polygons are plain :class:`shapely.Polygon` objects in a local metric frame
(x east, y north, meters).  :func:`make_polygon` is the validating constructor;
everything downstream assumes polygons went through it once at ingestion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import Polygon
from shapely.geometry.polygon import orient

TOL = 1e-6


class GeometryError(ValueError):
    """Raised for degenerate or invalid geometry."""


@dataclass(frozen=True)
class ObbFit:
    """Minimum-area oriented bounding box.

    ``angle_deg`` is the counter-clockwise angle of the box's first axis from
    the +x axis, reduced modulo 90.
    """

    center: tuple[float, float]
    angle_deg: float
    half_extent_u: float
    half_extent_v: float

    @property
    def area(self) -> float:
        return 4.0 * self.half_extent_u * self.half_extent_v

    def polygon(self) -> Polygon:
        return OrientedRect(self.center, 2 * self.half_extent_u, 2 * self.half_extent_v,
                            self.angle_deg).to_polygon()


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle of size ``width`` x ``height`` rotated ``angle_deg`` CCW about its center."""

    center: tuple[float, float]
    width: float
    height: float
    angle_deg: float = 0.0

    def corners(self) -> np.ndarray:
        a = math.radians(self.angle_deg)
        u = np.array([math.cos(a), math.sin(a)])
        v = np.array([-math.sin(a), math.cos(a)])
        c = np.asarray(self.center, dtype=float)
        hw, hh = self.width / 2, self.height / 2
        return np.array([c - hw * u - hh * v, c + hw * u - hh * v,
                         c + hw * u + hh * v, c - hw * u + hh * v])

    def to_polygon(self) -> Polygon:
        return Polygon(self.corners())


def _ring_coords(ring) -> np.ndarray:
    xy = np.asarray(ring.coords if hasattr(ring, "coords") else ring, dtype=float)
    if len(xy) > 1 and np.allclose(xy[0], xy[-1]):
        xy = xy[:-1]
    return xy


def _shoelace(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def make_polygon(exterior, holes=()) -> Polygon:
    """Build a validated polygon with a CCW exterior and CW holes.

    Raises
    ------
    GeometryError
        If a ring has fewer than 3 distinct vertices, self-intersects, or the
        polygon has no area.
    """
    ext = _ring_coords(exterior)
    hole_rings = [_ring_coords(h) for h in holes]
    for ring in [ext, *hole_rings]:
        if len(ring) < 3 or not np.all(np.isfinite(ring)):
            raise GeometryError("ring needs at least 3 finite vertices")
    poly = Polygon(ext, hole_rings)
    validate_polygon(poly)
    return orient(poly, sign=1.0)


def validate_polygon(p: Polygon) -> None:
    if not isinstance(p, Polygon) or p.is_empty:
        raise GeometryError("expected a non-empty polygon")
    if len(_ring_coords(p.exterior)) < 3:
        raise GeometryError("exterior ring has fewer than 3 vertices")
    if not p.is_valid:
        raise GeometryError(f"invalid polygon: {shapely.is_valid_reason(p)}")
    if p.area <= 0:
        raise GeometryError("polygon has zero area")


def polygon_area(p: Polygon) -> float:
    """Shoelace area of the exterior minus its holes."""
    ext = _ring_coords(p.exterior)
    if len(ext) < 3:
        raise GeometryError("exterior ring has fewer than 3 vertices")
    area = abs(_shoelace(ext)) - sum(abs(_shoelace(_ring_coords(h))) for h in p.interiors)
    if area <= 0:
        raise GeometryError("polygon has zero area")
    return area


def convex_hull_points(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, CCW, without repeated closing vertex."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def oriented_bbox(p) -> ObbFit:
    """Minimum-area oriented bounding box by rotating calipers over the hull.

    Among boxes whose areas agree to 1e-9 relative, the one flush with the
    longest hull edge wins, so symmetric shapes (right isosceles triangles,
    squares) get a stable orientation.
    """
    pts = _ring_coords(p.exterior) if isinstance(p, Polygon) else np.asarray(p, dtype=float)
    hull = convex_hull_points(pts)
    if len(hull) < 3 or abs(_shoelace(hull)) <= TOL * TOL:
        raise GeometryError("cannot fit a box to a degenerate polygon")

    edges = np.roll(hull, -1, axis=0) - hull
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    keep = lengths > TOL
    edges, lengths = edges[keep], lengths[keep]
    angles = np.mod(np.arctan2(edges[:, 1], edges[:, 0]), np.pi / 2)

    c, s = np.cos(angles), np.sin(angles)
    # Hull coordinates projected onto each candidate (u, v) frame.
    u = np.outer(c, hull[:, 0]) + np.outer(s, hull[:, 1])
    v = -np.outer(s, hull[:, 0]) + np.outer(c, hull[:, 1])
    areas = (u.max(1) - u.min(1)) * (v.max(1) - v.min(1))

    best_area = areas.min()
    near = np.flatnonzero(areas <= best_area * (1 + 1e-9))
    i = near[np.argmax(lengths[near])]

    umin, umax, vmin, vmax = u[i].min(), u[i].max(), v[i].min(), v[i].max()
    cu, cv = (umin + umax) / 2, (vmin + vmax) / 2
    center = (float(c[i] * cu - s[i] * cv), float(s[i] * cu + c[i] * cv))
    angle = math.degrees(angles[i]) % 90.0
    if angle > 90.0 - 1e-9:
        angle = 0.0
    return ObbFit(center, angle, float((umax - umin) / 2), float((vmax - vmin) / 2))


def erode(p: Polygon, margin: float) -> list[Polygon]:
    """Offset ``p`` inward by ``margin`` with mitred joins.

    The result may be empty or split into several pieces.
    """
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    if margin == 0:
        return [p]
    shrunk = p.buffer(-margin, join_style="mitre", mitre_limit=5.0)
    parts = [g for g in getattr(shrunk, "geoms", [shrunk]) if isinstance(g, Polygon)]
    return [orient(g, sign=1.0) for g in parts if not g.is_empty and g.area > TOL * TOL]


def _as_geometry(shape):
    return shape.to_polygon() if isinstance(shape, OrientedRect) else shape


def _sat_disjoint(ca: np.ndarray, cb: np.ndarray, tol: float) -> bool:
    for corners in (ca, cb):
        edges = np.roll(corners, -1, axis=0) - corners
        axes = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        axes /= np.linalg.norm(axes, axis=1)[:, None]
        pa = ca @ axes.T
        pb = cb @ axes.T
        gap = np.maximum(pb.min(0) - pa.max(0), pa.min(0) - pb.max(0))
        if np.any(gap > -tol):
            return True
    return False


def intersects(a, b, tol: float = 0.0) -> bool:
    """True when ``a`` and ``b`` share any point.

    ``tol > 0`` tolerates overlaps thinner than ``tol``, so shapes that merely
    touch (within tolerance) are reported as disjoint.  Pairs of
    :class:`OrientedRect` use a separating-axis test; anything else goes
    through shapely.
    """
    if isinstance(a, OrientedRect) and isinstance(b, OrientedRect):
        return not _sat_disjoint(a.corners(), b.corners(), tol)
    ga, gb = _as_geometry(a), _as_geometry(b)
    if tol > 0:
        return ga.buffer(-tol / 2, join_style="mitre").intersects(
            gb.buffer(-tol / 2, join_style="mitre"))
    return ga.intersects(gb)


def rotate_frame(p, angle_deg: float, origin=(0.0, 0.0)):
    """Rigidly rotate ``p`` by ``angle_deg`` CCW about ``origin``."""
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    ox, oy = origin

    def _rot(xy):
        dx, dy = xy[:, 0] - ox, xy[:, 1] - oy
        return np.column_stack([ox + c * dx - s * dy, oy + s * dx + c * dy])

    if angle_deg == 0:
        return p
    return shapely.transform(p, _rot)


def stretch(p, direction: tuple[float, float], factor: float, origin=(0.0, 0.0)):
    """Scale coordinates along a unit ``direction`` by ``factor`` about ``origin``."""
    dx, dy = direction
    ox, oy = origin

    def _stretch(xy):
        rel = xy - (ox, oy)
        along = rel @ np.array([dx, dy])
        return xy + np.outer((factor - 1.0) * along, (dx, dy))

    return shapely.transform(p, _stretch)


def compass_to_vector(azimuth_deg: float) -> tuple[float, float]:
    """Unit vector pointing at a compass bearing (clockwise from north)."""
    a = math.radians(azimuth_deg)
    return (math.sin(a), math.cos(a))
