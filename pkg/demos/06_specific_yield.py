"""
Annual yield per installed kWp
==============================

Hour by hour: sun position, plane-of-array irradiance, cell temperature,
DC power, system losses and the inverter.  Summed over a year this gives
kWh per kWp, the number the roof potential scales with.
"""

import numpy as np

from solarpot.shading import HorizonMask
from solarpot.solar import clearsky_year, pvout_annual, solar_position

lat, lon = 43.6, 3.87  # Montpellier
noon = solar_position(np.datetime64("2021-06-21T11:45"), lat, lon)
print(f"summer solstice near solar noon: elevation {noon.elevation_deg:.2f}, azimuth {noon.azimuth_deg:.1f}")

weather = clearsky_year(2021, lat, lon)
print(f"clear-sky year: {len(weather)} hours, GHI {weather.ghi.sum() / 1000:.0f} kWh/m2")

print("\nkWh/kWp by tilt and orientation (open sky)")
print("tilt   N      E      S      W")
for tilt in (0, 15, 27, 37, 47, 60):
    vals = [pvout_annual(weather, None, tilt, az).total for az in (0, 90, 180, 270)]
    print(f"{tilt:>3}  " + " ".join(f"{v:6.0f}" for v in vals))

# A southern horizon at 20 degrees hurts mostly in winter
mask = HorizonMask(np.where(np.abs(np.arange(72) * 5 + 2.5 - 180) < 60, 20.0, 0.0))
open_sky = pvout_annual(weather, None, 37, 180)
shaded = pvout_annual(weather, mask, 37, 180)
print(f"\n37 deg south: open {open_sky.total:.0f}, with 20 deg southern horizon {shaded.total:.0f} kWh/kWp"
      f" (direct {shaded.direct:.0f} + diffuse {shaded.diffuse:.0f}, SVF {shaded.svf:.3f})")
