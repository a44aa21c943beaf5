"""Horizon masks from neighbouring buildings and terrain, and the sky-view factor.

A horizon mask stores, for each of ``n_sectors`` equal compass sectors, the
elevation angle (degrees) of the highest obstruction seen from a point.
Sector ``i`` covers bearings ``[i * 360/n, (i + 1) * 360/n)`` and is probed
along its central bearing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from shapely.geometry import box
from shapely.strtree import STRtree

from .geom import _ring_coords

DEFAULT_SECTORS = 72
BUILDING_MAX_DIST_M = 500.0
DEM_MAX_DIST_M = 20_000.0
DEM_NEAR_CELLS = 3


@dataclass(frozen=True)
class HorizonMask:
    gamma_deg: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma_deg, dtype=float)
        if g.ndim != 1 or len(g) == 0:
            raise ValueError("gamma_deg must be a non-empty 1-D array")
        if np.any(g < 0) or np.any(g > 90) or not np.all(np.isfinite(g)):
            raise ValueError("horizon angles must lie in [0, 90]")
        g.setflags(write=False)
        object.__setattr__(self, "gamma_deg", g)

    @classmethod
    def open_sky(cls, n_sectors: int = DEFAULT_SECTORS) -> "HorizonMask":
        return cls(np.zeros(n_sectors))

    @property
    def n_sectors(self) -> int:
        return len(self.gamma_deg)

    @property
    def sector_width_deg(self) -> float:
        return 360.0 / self.n_sectors

    def sector_starts(self) -> np.ndarray:
        return np.arange(self.n_sectors) * self.sector_width_deg

    def sector_of(self, azimuth_deg):
        return np.floor(np.mod(azimuth_deg, 360.0) / self.sector_width_deg).astype(int) % self.n_sectors

    def floored(self, min_gamma_deg: float) -> "HorizonMask":
        """Zero out angles below ``min_gamma_deg``."""
        g = self.gamma_deg
        return HorizonMask(np.where(g < min_gamma_deg, 0.0, g))

    def to_csv(self) -> str:
        lines = ["sector_start_deg,gamma_deg"]
        lines += [f"{s!r},{g!r}" for s, g in zip(self.sector_starts().tolist(), self.gamma_deg.tolist())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "HorizonMask":
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        return cls(np.array([float(g) for _, g in rows]))


def sector_centers(n_sectors: int) -> np.ndarray:
    return (np.arange(n_sectors) + 0.5) * 360.0 / n_sectors


# -- buildings -------------------------------------------------------------

class SpatialIndex:
    """Bounding-box index over building footprints (STR-packed R-tree)."""

    def __init__(self, buildings: Sequence):
        self.buildings = list(buildings)
        self._tree = STRtree([b.footprint for b in self.buildings])
        self._bounds = (np.array([b.footprint.bounds for b in self.buildings])
                        if self.buildings else np.zeros((0, 4)))
        self._tops = np.array([b.top_elev_m for b in self.buildings])
        self.max_top = float(self._tops.max()) if self.buildings else -math.inf
        self._edges = {}

    def __len__(self):
        return len(self.buildings)

    def query(self, bbox) -> list:
        """Indices of buildings whose bounding boxes intersect ``bbox``."""
        if not self.buildings:
            return []
        return sorted(int(i) for i in self._tree.query(box(*bbox)))

    def bbox_distance(self, idx: np.ndarray, point) -> np.ndarray:
        b = self._bounds[idx]
        dx = np.maximum(np.maximum(b[:, 0] - point[0], point[0] - b[:, 2]), 0)
        dy = np.maximum(np.maximum(b[:, 1] - point[1], point[1] - b[:, 3]), 0)
        return np.hypot(dx, dy)

    def edges(self, i: int) -> np.ndarray:
        """Footprint edges of building ``i`` as an ``(m, 4)`` array of x0, y0, x1, y1."""
        if i not in self._edges:
            fp = self.buildings[i].footprint
            segs = []
            for ring in [fp.exterior, *fp.interiors]:
                xy = _ring_coords(ring)
                segs.append(np.hstack([xy, np.roll(xy, -1, axis=0)]))
            self._edges[i] = np.vstack(segs)
        return self._edges[i]


def prefilter_buildings(index: SpatialIndex, eval_point, eval_height_m: float, min_gamma_deg: float,
                        max_dist_m: float = BUILDING_MAX_DIST_M) -> list:
    """Buildings that could raise some sector above ``min_gamma_deg``.

    The test uses the building's own top and the distance to its bounding
    box, both optimistic, so no building that could cast a horizon angle of
    at least ``min_gamma_deg`` is dropped.
    """
    x, y = eval_point
    if max_dist_m <= 0 or len(index) == 0:
        return []
    reach = max_dist_m
    if min_gamma_deg > 0:
        # nothing shorter than the tallest building can matter beyond this
        reach = min(reach, max(index.max_top - eval_height_m, 0.0) / math.tan(math.radians(min_gamma_deg)))
    idx = np.array(index.query((x - reach, y - reach, x + reach, y + reach)), dtype=int)
    if idx.size == 0:
        return []
    rise = index._tops[idx] - eval_height_m
    dist = index.bbox_distance(idx, (x, y))
    keep = rise > 0
    with np.errstate(divide="ignore"):
        best = np.degrees(np.arctan2(rise, dist))
    keep &= (best >= min_gamma_deg) & (dist <= max_dist_m)
    return idx[keep].tolist()


def building_horizon(eval_point, eval_height_m: float, index: SpatialIndex,
                     n_sectors: int = DEFAULT_SECTORS, max_dist_m: float = BUILDING_MAX_DIST_M,
                     candidates=None, min_gamma_deg: float = 0.0) -> HorizonMask:
    """Trace one ray per sector against building footprint edges.

    Each hit at distance ``d`` on a building whose top is ``h`` above the
    evaluation height contributes ``atan(h / d)``; a sector keeps the
    largest.  ``candidates`` restricts the buildings considered; when omitted
    they come from :func:`prefilter_buildings` with ``min_gamma_deg``.
    """
    if n_sectors < 8:
        raise ValueError("need at least 8 sectors")
    if max_dist_m <= 0:
        raise ValueError("max_dist_m must be > 0")
    if candidates is None:
        candidates = prefilter_buildings(index, eval_point, eval_height_m, min_gamma_deg, max_dist_m)
    gamma = np.zeros(n_sectors)
    if not len(candidates):
        return HorizonMask(gamma)

    az = np.radians(sector_centers(n_sectors))
    dirs = np.column_stack([np.sin(az), np.cos(az)])
    px, py = eval_point

    segs, rises = [], []
    for i in candidates:
        rise = index._tops[i] - eval_height_m
        if rise <= 0:
            continue
        e = index.edges(i)
        segs.append(e)
        rises.append(np.full(len(e), rise))
    if not segs:
        return HorizonMask(gamma)
    e = np.vstack(segs)
    rise = np.concatenate(rises)

    # ray p + t*d against segment a + s*(b - a), 0 <= s <= 1, t > 0
    ax, ay = e[:, 0] - px, e[:, 1] - py
    ex, ey = e[:, 2] - e[:, 0], e[:, 3] - e[:, 1]
    dx, dy = dirs[:, 0:1], dirs[:, 1:2]
    denom = dx * ey - dy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ax * ey - ay * ex) / denom
        s = (ax * dy - ay * dx) / denom
    hit = (np.abs(denom) > 1e-12) & (s >= -1e-12) & (s <= 1 + 1e-12) & (t > 1e-9) & (t <= max_dist_m)
    with np.errstate(divide="ignore", invalid="ignore"):
        ang = np.where(hit, np.degrees(np.arctan2(rise, t)), 0.0)
    gamma = ang.max(axis=1)
    return HorizonMask(np.clip(gamma, 0.0, 90.0))


# -- terrain ---------------------------------------------------------------

@dataclass(frozen=True)
class DemRaster:
    """Terrain grid; row 0 is the northernmost row, as in ESRI ASCII files."""

    origin: tuple
    cell_size_m: float
    elevation_m: np.ndarray
    nodata: float = -9999.0

    def __post_init__(self):
        if self.cell_size_m <= 0:
            raise ValueError("cell_size_m must be > 0")
        z = np.asarray(self.elevation_m, dtype=float)
        if z.ndim != 2 or z.size == 0:
            raise ValueError("elevation grid must be 2-D and non-empty")
        object.__setattr__(self, "elevation_m", z)

    @property
    def n_rows(self) -> int:
        return self.elevation_m.shape[0]

    @property
    def n_cols(self) -> int:
        return self.elevation_m.shape[1]

    def contains(self, x, y) -> bool:
        x0, y0 = self.origin
        return x0 <= x <= x0 + self.n_cols * self.cell_size_m and y0 <= y <= y0 + self.n_rows * self.cell_size_m

    def sample(self, x, y, fill: float) -> np.ndarray:
        """Bilinear elevation between cell centers; nodata and outside points give ``fill``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x0, y0 = self.origin
        c = (x - x0) / self.cell_size_m - 0.5
        r = (y0 + self.n_rows * self.cell_size_m - y) / self.cell_size_m - 0.5
        inside = (c >= -0.5) & (c <= self.n_cols - 0.5) & (r >= -0.5) & (r <= self.n_rows - 0.5)
        c = np.clip(c, 0, self.n_cols - 1)
        r = np.clip(r, 0, self.n_rows - 1)
        c0 = np.minimum(np.floor(c).astype(int), max(self.n_cols - 2, 0))
        r0 = np.minimum(np.floor(r).astype(int), max(self.n_rows - 2, 0))
        c1 = np.minimum(c0 + 1, self.n_cols - 1)
        r1 = np.minimum(r0 + 1, self.n_rows - 1)
        fc, fr = c - c0, r - r0
        z = self.elevation_m
        corners = [z[r0, c0], z[r0, c1], z[r1, c0], z[r1, c1]]
        nod = np.zeros_like(fc, dtype=bool)
        for zz in corners:
            nod |= zz == self.nodata
        val = (corners[0] * (1 - fc) * (1 - fr) + corners[1] * fc * (1 - fr)
               + corners[2] * (1 - fc) * fr + corners[3] * fc * fr)
        return np.where(inside & ~nod, val, fill)


def dem_horizon(eval_point, eval_height_m: float, dem: DemRaster, n_sectors: int = DEFAULT_SECTORS,
                max_dist_m: float = DEM_MAX_DIST_M, step_m=None, min_dist_m=None) -> HorizonMask:
    """March outward along each sector's central bearing over the terrain grid.

    Sampling starts at ``min_dist_m`` (default three cells): the terrain right
    next to the building is its own plot, and bilinear sampling that close to
    the evaluation point overstates slopes around peaks and pits.
    """
    step_m = dem.cell_size_m if step_m is None else step_m
    min_dist_m = DEM_NEAR_CELLS * dem.cell_size_m if min_dist_m is None else min_dist_m
    if step_m < dem.cell_size_m / 2:
        raise ValueError("step_m must be at least half the cell size")
    if not dem.contains(*eval_point):
        raise ValueError(f"evaluation point {tuple(eval_point)} is outside the terrain grid")
    dist = np.arange(max(min_dist_m, step_m), max_dist_m + step_m * 1e-9, step_m)
    az = np.radians(sector_centers(n_sectors))
    xs = eval_point[0] + np.outer(np.sin(az), dist)
    ys = eval_point[1] + np.outer(np.cos(az), dist)
    z = dem.sample(xs, ys, fill=eval_height_m)
    ang = np.degrees(np.arctan2(z - eval_height_m, dist))
    return HorizonMask(np.clip(ang.max(axis=1), 0.0, 90.0))


# -- combination and sky-view factor ----------------------------------------------

def combine_masks(masks: Sequence[HorizonMask]) -> HorizonMask:
    if not masks:
        raise ValueError("no masks to combine")
    n = {m.n_sectors for m in masks}
    if len(n) != 1:
        raise ValueError(f"masks have different sector counts: {sorted(n)}")
    return HorizonMask(np.max([m.gamma_deg for m in masks], axis=0))


def sky_view_factor(mask: HorizonMask) -> float:
    """Visible fraction of isotropic sky radiance on a horizontal plane: mean of cos^2(gamma)."""
    return float(np.mean(np.cos(np.radians(mask.gamma_deg)) ** 2))


def direct_blocked(mask: HorizonMask, sun_azimuth_deg, sun_elevation_deg):
    """True where the sun is below the horizon line of its sector (or below the horizon)."""
    gamma = mask.gamma_deg[mask.sector_of(sun_azimuth_deg)]
    out = (np.asarray(sun_elevation_deg) < gamma) | (np.asarray(sun_elevation_deg) <= 0)
    return bool(out) if out.ndim == 0 else out
