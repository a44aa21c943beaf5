"""
Fitting modules on a roof section
=================================

The section is stretched from plan view onto the sloped roof plane,
turned so rows run across the slope, shrunk by the edge margin, and then
filled with a regular grid of modules.  Grid phase and orientation are
searched; chimneys and ridges knock out the cells they touch.
"""

from shapely.geometry import box

from solarpot.geom import make_polygon
from solarpot.packing import PanelSpec, pack_panels
from solarpot.roofs import RoofObject, RoofSection

spec = PanelSpec(width_m=1.7, height_m=1.0, power_wp=350, edge_margin_m=0.3)

# south-facing slope, 12 m wide and 5 m deep in plan, pitched 35 degrees
plan = make_polygon([(0, 0), (12, 0), (12, 5), (0, 5)])
roof = RoofSection("s", "b", plan, ridge_segments=(((0.0, 5.0), (12.0, 5.0)),), pitch_deg=35.0, azimuth_deg=180.0)
layout = pack_panels(roof, [], spec)
print(f"plan area {plan.area:.1f} m2, roof-plane area {layout.plane_polygon.area:.1f} m2")
print(f"{layout.count} modules ({layout.placements[0][1]}) = {layout.count * spec.power_wp / 1000:.2f} kWp")

chimney = RoofObject("c", "s", box(5.5, 2.0, 6.3, 2.8), "chimney")
with_chimney = pack_panels(roof, [chimney], spec)
print(f"with a chimney: {with_chimney.count} modules")

# crude picture of the layout in the roof-plane frame, 0.25 m per character
minx, miny, maxx, maxy = with_chimney.plane_polygon.bounds
cells = [p for p in with_chimney.panel_polygons()]
for row in range(int((maxy - miny) / 0.5), -1, -1):
    y = miny + row * 0.5 + 0.25
    line = ""
    for col in range(int((maxx - minx) / 0.25)):
        x = minx + col * 0.25 + 0.125
        line += "#" if any(p.bounds[0] <= x <= p.bounds[2] and p.bounds[1] <= y <= p.bounds[3] for p in cells) else "."
    print(line)
