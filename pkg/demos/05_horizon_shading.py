"""
Horizons from neighbours and terrain
====================================

Each roof gets a horizon mask: for every azimuth sector, the highest
elevation angle blocked by another building or by the terrain.  The sky
view factor summarizes how much diffuse light still gets through.
"""

import numpy as np
from shapely.geometry import box

from solarpot.roofs import Building
from solarpot.shading import DemRaster, SpatialIndex, building_horizon, combine_masks, dem_horizon, sky_view_factor

# a small street: our roof at the origin, taller blocks to the south and west
city = [Building("tower", box(-5, -40, 15, -25), 45.0, 0.0),
        Building("west", box(-35, -5, -25, 10), 20.0, 0.0),
        Building("far", box(900, 900, 920, 920), 200.0, 0.0)]
index = SpatialIndex(city)
mask = building_horizon((0.0, 0.0), 10.0, index, n_sectors=36)
for start, g in zip(mask.sector_starts(), mask.gamma_deg):
    if g > 0:
        print(f"sector {start:5.0f} deg: blocked up to {g:5.1f} deg")
print("sky view factor, buildings only:", round(sky_view_factor(mask), 4))

# a ridge of hills 2 km to the east, 150 m high
x = np.arange(-3000, 3000, 25.0) + 12.5
hills = np.tile(150 * np.exp(-((x - 2000) / 300) ** 2), (240, 1))
dem = DemRaster((-3000.0, -3000.0), 25.0, hills)
terrain = dem_horizon((0.0, 0.0), 10.0, dem, n_sectors=36, max_dist_m=2900)
both = combine_masks([mask, terrain])
print("terrain horizon due east:", round(float(terrain.gamma_deg[terrain.sector_of(90.0)]), 2), "deg")
print("sky view factor, buildings + terrain:", round(sky_view_factor(both), 4))
print(both.to_csv().splitlines()[0], "...")
