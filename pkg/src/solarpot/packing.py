"""Maximum-count placement of rectangular modules on a roof section.

Packing happens in the roof plane, not in plan view.  The section is
unprojected (stretched along its slope by 1/cos(pitch)) and then rotated so
that the downslope direction points to -y, which makes module rows
horizontal.  Each candidate layout is a regular lattice anchored at the lower
left corner of the eroded region and shifted by a phase offset.  Lattice
cells that leave the region or hit an obstacle are dropped.

Every offset of the sweep and both orientations are scored in one
vectorized pass.  The validity of the union of all candidate rectangles is
computed once, then reshaped per offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Polygon

from .geom import TOL, compass_to_vector, erode, rotate_frame, stretch
from .roofs import RoofObject, RoofSection, ridge_lines

OFFSET_STEP_M = 0.1
RIDGE_BUFFER_M = 0.3
LANDSCAPE = "landscape"
PORTRAIT = "portrait"


class PackingStateError(RuntimeError):
    """The section is missing the pitch or azimuth needed to pack it."""


@dataclass(frozen=True)
class PanelSpec:
    width_m: float = 1.7
    height_m: float = 1.0
    power_wp: float = 350.0
    edge_margin_m: float = 0.3
    inter_row_gap_m: float = 0.02
    inter_col_gap_m: float = 0.02

    def __post_init__(self):
        if not self.width_m >= self.height_m > 0:
            raise ValueError("panel needs width_m >= height_m > 0")
        if not self.power_wp > 0:
            raise ValueError("power_wp must be > 0")
        for name in ("edge_margin_m", "inter_row_gap_m", "inter_col_gap_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def size(self, orientation: str) -> tuple[float, float]:
        """(extent along rows, extent along slope)."""
        if orientation == LANDSCAPE:
            return self.width_m, self.height_m
        return self.height_m, self.width_m


@dataclass(frozen=True)
class PanelLayout:
    """Module placements in the packing frame.

    The packing frame is the roof plane rotated so the slope runs down along
    -y; ``origin``, ``pitch_deg`` and ``azimuth_deg`` map it back to plan
    view (see :meth:`plan_polygons`).
    """

    placements: tuple
    count: int
    plane_polygon: Polygon
    panel_size: tuple = (0.0, 0.0)
    origin: tuple = (0.0, 0.0)
    pitch_deg: float = 0.0
    azimuth_deg: float = 180.0

    def __post_init__(self):
        if self.count != len(self.placements):
            raise ValueError("count must equal the number of placements")

    def panel_polygons(self) -> list[Polygon]:
        out = []
        for (cx, cy), orientation in self.placements:
            a, b = self.panel_size if orientation == LANDSCAPE else self.panel_size[::-1]
            out.append(shapely.box(cx - a / 2, cy - b / 2, cx + a / 2, cy + b / 2))
        return out

    def plan_polygons(self) -> list[Polygon]:
        """Module outlines projected back onto the plan view."""
        down = compass_to_vector(self.azimuth_deg)
        back = math.cos(math.radians(self.pitch_deg))
        return [stretch(rotate_frame(p, -(self.azimuth_deg - 180.0), self.origin), down, back, self.origin)
                for p in self.panel_polygons()]

    def without(self, index: int) -> "PanelLayout":
        rest = self.placements[:index] + self.placements[index + 1:]
        return PanelLayout(rest, len(rest), self.plane_polygon, self.panel_size, self.origin,
                           self.pitch_deg, self.azimuth_deg)


def unproject_to_roof_plane(plan, pitch_deg: float, azimuth_deg: float, origin=None):
    """Stretch plan geometry along the downslope axis by 1/cos(pitch).

    ``origin`` defaults to the centroid of ``plan``; pass it explicitly to put
    several shapes in the same plane frame.
    """
    if not 0 <= pitch_deg < 90:
        raise ValueError(f"pitch must lie in [0, 90), got {pitch_deg}")
    if pitch_deg == 0:
        return plan
    if origin is None:
        c = plan.centroid
        origin = (c.x, c.y)
    return stretch(plan, compass_to_vector(azimuth_deg), 1.0 / math.cos(math.radians(pitch_deg)), origin)


def _offsets(period: float) -> np.ndarray:
    n = max(1, math.ceil(period / OFFSET_STEP_M - 1e-9))
    return np.arange(n) * OFFSET_STEP_M


def _edges(geom) -> np.ndarray:
    """All ring segments of a (multi)polygon as rows ``x1, y1, x2, y2``."""
    segs = []
    for poly in getattr(geom, "geoms", [geom]):
        for ring in [poly.exterior, *poly.interiors]:
            xy = np.asarray(ring.coords)
            segs.append(np.hstack([xy[:-1], xy[1:]]))
    return np.vstack(segs) if segs else np.zeros((0, 4))


def _band_extents(e: np.ndarray, y_lo: np.ndarray, y_hi: np.ndarray):
    """x-extent of every segment clipped to every band ``[y_lo, y_hi]``.

    Returns ``(lo, hi)`` of shape ``(n_bands, n_segments)``; empty clips get
    ``lo = +inf`` and ``hi = -inf``.
    """
    x1, y1, x2, y2 = (e[:, k][None, :] for k in range(4))
    ya, yb = y_lo[:, None], y_hi[:, None]
    dy = y2 - y1
    flat = dy == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = np.where(flat, 0.0, (ya - y1) / np.where(flat, 1.0, dy))
        tb = np.where(flat, 1.0, (yb - y1) / np.where(flat, 1.0, dy))
    t0 = np.clip(np.minimum(ta, tb), 0.0, 1.0)
    t1 = np.clip(np.maximum(ta, tb), 0.0, 1.0)
    hit = np.where(flat, (ya <= y1) & (y1 <= yb), (np.minimum(ta, tb) <= 1.0) & (np.maximum(ta, tb) >= 0.0))
    xa, xb = x1 + t0 * (x2 - x1), x1 + t1 * (x2 - x1)
    lo = np.where(hit, np.minimum(xa, xb), np.inf)
    hi = np.where(hit, np.maximum(xa, xb), -np.inf)
    return lo, hi


def _crossed(e, y_lo, y_hi, x0, x1):
    """``[band, cell]``: some segment meets the box ``[x0, x1] x [y_lo, y_hi]``."""
    lo, hi = _band_extents(e, y_lo, y_hi)
    return ((lo[:, None, :] <= x1[None, :, None]) & (hi[:, None, :] >= x0[None, :, None])).any(axis=2)


def _inside_parity(e, yc, xc, groups=None):
    """Even-odd point-in-polygon test of points ``(xc[j], yc[i])``.

    With ``groups`` (start index of each polygon's segments) the parity is
    taken per polygon and the result is True where any polygon contains the
    point.
    """
    x1, y1, x2, y2 = (e[:, k][None, :] for k in range(4))
    y = yc[:, None]
    straddle = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = np.where(straddle, x1 + (y - y1) * (x2 - x1) / np.where(straddle, y2 - y1, 1.0), -np.inf)
    right = xcross[:, None, :] > xc[None, :, None]
    if groups is None:
        return right.sum(axis=2) % 2 == 1
    return (np.add.reduceat(right, groups, axis=2) % 2 == 1).any(axis=2)


def _valid_cells(region_edges, blockers, xs, ys, a, b, chunk=64):
    """``valid[i, j]``: the module with lower-left corner ``(xs[j], ys[i])`` fits.

    A module fits when no region edge crosses it and its centre is inside the
    region, and when no obstacle edge crosses it, its centre is in no obstacle
    and no obstacle vertex is inside it.  Modules are shrunk by ``TOL`` so
    contact along edges is allowed.
    """
    x0, x1 = xs + TOL, xs + a - TOL
    xc = xs + a / 2
    if blockers:
        obst_edges = np.vstack([_edges(o) for o in blockers])
        sizes = [len(_edges(o)) for o in blockers]
        groups = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
        verts = obst_edges[:, :2]
    out = np.zeros((len(ys), len(xs)), dtype=bool)
    for s in range(0, len(ys), chunk):
        y = ys[s:s + chunk]
        y0, y1 = y + TOL, y + b - TOL
        yc = y + b / 2
        ok = ~_crossed(region_edges, y0, y1, x0, x1) & _inside_parity(region_edges, yc, xc)
        if blockers:
            ok &= ~_crossed(obst_edges, y0, y1, x0, x1)
            ok &= ~_inside_parity(obst_edges, yc, xc, groups)
            vx, vy = verts[:, 0], verts[:, 1]
            in_y = (vy[None, :] > y0[:, None]) & (vy[None, :] < y1[:, None])
            in_x = (vx[None, :] > x0[:, None]) & (vx[None, :] < x1[:, None])
            ok &= ~(in_y[:, None, :] & in_x[None, :, :]).any(axis=2)
        out[s:s + chunk] = ok
    return out


def _lattice_counts(region_edges, blockers, bounds, a, b, gx, gy):
    """Valid-cell counts for every (row offset, column offset) of one orientation.

    Returns ``(counts, valid, xs, ys)`` where ``counts[j, i]`` is the count
    for row offset ``j`` and column offset ``i`` and ``valid`` has shape
    ``(n_oy, n_rows, n_ox, n_cols)``.
    """
    minx, miny, maxx, maxy = bounds
    px, py = a + gx, b + gy
    ox, oy = _offsets(px), _offsets(py)
    n_cols = int(math.floor((maxx - minx + gx) / px + 1e-9))
    n_rows = int(math.floor((maxy - miny + gy) / py + 1e-9))
    if n_cols == 0 or n_rows == 0:
        return np.zeros((len(oy), len(ox)), dtype=int), None, None, None
    xs = minx + ox[:, None] + np.arange(n_cols)[None, :] * px   # (n_ox, n_cols) lower-left x
    ys = miny + oy[:, None] + np.arange(n_rows)[None, :] * py
    xf, yf = xs.ravel(), ys.ravel()
    cols = xf + a <= maxx + TOL
    rows = yf + b <= maxy + TOL
    valid = np.zeros((yf.size, xf.size), dtype=bool)
    if cols.any() and rows.any():
        valid[np.ix_(rows, cols)] = _valid_cells(region_edges, blockers, xf[cols], yf[rows], a, b)
    valid = valid.reshape(len(oy), n_rows, len(ox), n_cols)
    return valid.sum(axis=(1, 3)), valid, xs, ys


def _frame(section: RoofSection):
    if section.pitch_deg is None or section.azimuth_deg is None:
        raise PackingStateError(f"section {section.id}: pitch and azimuth must be assigned before packing")
    c = section.plan_polygon.centroid
    return (c.x, c.y), float(section.pitch_deg), float(section.azimuth_deg)


def _to_frame(geom, origin, pitch, az):
    return rotate_frame(unproject_to_roof_plane(geom, pitch, az, origin), az - 180.0, origin)


def pack_panels(section: RoofSection, obstacles: Sequence[RoofObject], spec: PanelSpec) -> PanelLayout:
    origin, pitch, az = _frame(section)
    plane = _to_frame(section.plan_polygon, origin, pitch, az)
    empty = PanelLayout((), 0, plane, (spec.width_m, spec.height_m), origin, pitch, az)

    parts = erode(plane, spec.edge_margin_m)
    if not parts:
        return empty
    region = parts[0] if len(parts) == 1 else MultiPolygon(parts)
    region_edges = _edges(region)

    blocking = [_to_frame(o.polygon, origin, pitch, az) for o in obstacles]
    # square caps turn each ridge buffer into a rectangle enclosing the round one
    blocking += [_to_frame(r, origin, pitch, az).buffer(RIDGE_BUFFER_M, cap_style="square", join_style="mitre")
                 for r in ridge_lines(section)]
    blocking = [g for o in blocking for g in getattr(o, "geoms", [o]) if isinstance(g, Polygon) and not g.is_empty]

    bounds = region.bounds
    best = None
    for orientation in (LANDSCAPE, PORTRAIT):
        a, b = spec.size(orientation)
        counts, valid, xs, ys = _lattice_counts(region_edges, blocking, bounds, a, b,
                                                spec.inter_col_gap_m, spec.inter_row_gap_m)
        # argmax returns the first maximum: smallest row offset, then column offset
        j, i = np.unravel_index(int(np.argmax(counts)), counts.shape)
        n = int(counts[j, i])
        if n > 0 and (best is None or n > best[0]):
            best = (n, orientation, a, b, valid[j, :, i, :], xs[i], ys[j])
        if spec.width_m == spec.height_m:
            break
    if best is None:
        return empty

    n, orientation, a, b, cell_ok, xrow, ycol = best
    rows, cols = np.nonzero(cell_ok)  # row-major: bottom-up, left to right
    placements = tuple(((float(xrow[c] + a / 2), float(ycol[r] + b / 2)), orientation)
                       for r, c in zip(rows, cols))
    return PanelLayout(placements, n, plane, (spec.width_m, spec.height_m), origin, pitch, az)


def max_module_count(layout: PanelLayout) -> int:
    return layout.count

