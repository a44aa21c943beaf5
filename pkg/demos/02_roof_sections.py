"""
From noisy roof outlines to oriented sections
=============================================

Segmentation hands over wobbly polygons.  We square them up against the
building footprint, then decide which way each slope faces.
"""

from dataclasses import replace

import numpy as np

from solarpot.roofs import assign_azimuths, bbox_compass_angle, regularize_sections
from solarpot.synthetic import make_building

rng = np.random.default_rng(3)

# a gable roof whose ridge runs 25 degrees off east-west, with 8 cm noise on every vertex
building, raw = make_building(rng, "b1", "gable", (0, 0), 14.0, 9.0, 25.0, 9.0)
reg = regularize_sections(building.footprint, [s.plan_polygon for s in raw])
print("raw areas        :", [round(s.plan_polygon.area, 2) for s in raw])
print("regularized areas:", [round(p.area, 2) for p in reg.polygons], "warnings:", reg.warnings)
print("footprint area   :", round(building.footprint.area, 2))

sections = [replace(raw[k], plan_polygon=p) for p, k in zip(reg.polygons, reg.source_index)]
for s in assign_azimuths(sections, latitude_deg=43.6):
    print(f"{s.id}: box angle {bbox_compass_angle(s.plan_polygon):6.2f} deg, faces {s.azimuth_deg:6.2f} deg")

# A hipped roof: four sections, each should face away from the others.
building, raw = make_building(rng, "b2", "hipped", (50, 0), 12.0, 10.0, -10.0, 8.0, noise=0.03)
for s in assign_azimuths(raw, latitude_deg=43.6):
    print(f"{s.id}: faces {s.azimuth_deg:6.2f} deg")
