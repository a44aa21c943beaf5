"""
Planar geometry toolkit
=======================

Everything downstream works in a local metric frame (x east, y north).
This walks through the few primitives the roof modules lean on.
"""

import numpy as np

from solarpot.geom import erode, intersects, make_polygon, oriented_bbox, polygon_area, rotate_frame

# A 4 x 2 rectangle, then the same shape turned by 30 and 120 degrees.
rect = make_polygon([(0, 0), (4, 0), (4, 2), (0, 2)])
for angle in (0, 30, 120):
    fit = oriented_bbox(rotate_frame(rect, angle, (2, 1)))
    print(f"rotated {angle:>3} deg -> box angle {fit.angle_deg:5.1f}, half extents "
          f"{fit.half_extent_u:.2f} x {fit.half_extent_v:.2f}")

# Areas subtract holes
hole = [(0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75)][::-1]
print("unit square with a 0.5 hole:", polygon_area(make_polygon([(0, 0), (1, 0), (1, 1), (0, 1)], [hole])))

# Erosion can shrink, split or erase a shape.  A dumbbell with a thin neck
# falls apart into its two lobes.
dumbbell = make_polygon([(0, 0), (2, 0), (2, 0.8), (3, 0.8), (3, 0), (5, 0),
                         (5, 2), (3, 2), (3, 1.2), (2, 1.2), (2, 2), (0, 2)])
for margin in (0.0, 0.1, 0.25, 1.2):
    parts = erode(dumbbell, margin)
    print(f"erode by {margin:4.2f} m -> {len(parts)} part(s), area {sum(p.area for p in parts):.3f}")

# Intersection tests treat touching as intersecting; tol relaxes that.
a = make_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
b = make_polygon(np.array(a.exterior.coords)[:-1] + [1.0, 0.0])
print("edge-sharing squares intersect:", intersects(a, b), "| with 1e-6 tolerance:", intersects(a, b, tol=1e-6))
