"""Synthetic roof fixtures shared by several test modules."""

import numpy as np
from shapely.geometry import Polygon

from solarpot.geom import make_polygon, rotate_frame
from solarpot.roofs import RoofSection


def gable(width=10.0, depth=8.0, angle=0.0, offset=(0.0, 0.0)):
    """Two rectangles split by an east-west ridge; returns (south, north) sections."""
    south = make_polygon([(0, 0), (width, 0), (width, depth / 2), (0, depth / 2)])
    north = make_polygon([(0, depth / 2), (width, depth / 2), (width, depth), (0, depth)])
    return [_place(p, angle, offset, f"g{i}") for i, p in enumerate((south, north))]


def hipped(side=10.0, angle=0.0, offset=(0.0, 0.0)):
    """Square footprint split into four triangles: south, east, north, west."""
    c = (side / 2, side / 2)
    corners = [(0, 0), (side, 0), (side, side), (0, side)]
    tris = [make_polygon([corners[i], corners[(i + 1) % 4], c]) for i in range(4)]
    return [_place(p, angle, offset, f"h{i}") for i, p in enumerate(tris)]


def _place(poly, angle, offset, sid):
    p = rotate_frame(poly, angle, (0, 0))
    p = Polygon(np.asarray(p.exterior.coords) + offset)
    return RoofSection(id=sid, building_id="b", plan_polygon=p)
