"""Reference values computed outside this package and frozen here.

Sun positions come from NREL's SPA as implemented in pvlib 0.15.2
(``pvlib.solarposition.spa_python``, geometric ``elevation``), run in a
separate environment.  The yield references were computed with pvlib's
solar position and isotropic transposition plus the same temperature, DC,
loss and inverter parameters, on the 2021 Montpellier clear-sky series.
"""

# (site, latitude, longitude, UTC instant, elevation_deg, azimuth_deg)
SUN_TABLE = [
    ("montpellier", 43.6, 3.87, "2021-03-20T00:00", -46.5241, 2.8794),
    ("montpellier", 43.6, 3.87, "2021-03-20T04:00", -19.9504, 69.9247),
    ("montpellier", 43.6, 3.87, "2021-03-20T08:00", 22.5477, 113.3358),
    ("montpellier", 43.6, 3.87, "2021-03-20T12:00", 46.4002, 182.9266),
    ("montpellier", 43.6, 3.87, "2021-03-20T16:00", 19.9298, 249.9626),
    ("montpellier", 43.6, 3.87, "2021-03-20T20:00", -22.4691, 293.4695),
    ("montpellier", 43.6, 3.87, "2021-06-21T00:00", -22.8907, 3.4195),
    ("montpellier", 43.6, 3.87, "2021-06-21T04:00", -1.3177, 55.1624),
    ("montpellier", 43.6, 3.87, "2021-06-21T08:00", 39.8046, 94.5102),
    ("montpellier", 43.6, 3.87, "2021-06-21T12:00", 69.6419, 189.0163),
    ("montpellier", 43.6, 3.87, "2021-06-21T16:00", 34.8748, 270.3277),
    ("montpellier", 43.6, 3.87, "2021-06-21T20:00", -5.2448, 309.7091),
    ("montpellier", 43.6, 3.87, "2021-09-23T00:00", -46.1741, 8.3296),
    ("montpellier", 43.6, 3.87, "2021-09-23T04:00", -17.3916, 72.8611),
    ("montpellier", 43.6, 3.87, "2021-09-23T08:00", 24.8957, 116.5800),
    ("montpellier", 43.6, 3.87, "2021-09-23T12:00", 45.8225, 188.3404),
    ("montpellier", 43.6, 3.87, "2021-09-23T16:00", 17.0133, 252.5503),
    ("montpellier", 43.6, 3.87, "2021-09-23T20:00", -25.3890, 296.1834),
    ("montpellier", 43.6, 3.87, "2021-12-21T00:00", -69.5146, 11.5852),
    ("montpellier", 43.6, 3.87, "2021-12-21T04:00", -34.1727, 90.9947),
    ("montpellier", 43.6, 3.87, "2021-12-21T08:00", 5.7730, 130.4178),
    ("montpellier", 43.6, 3.87, "2021-12-21T12:00", 22.8423, 184.3124),
    ("montpellier", 43.6, 3.87, "2021-12-21T16:00", 0.7839, 235.7802),
    ("montpellier", 43.6, 3.87, "2021-12-21T20:00", -40.4396, 275.1583),
    ("sydney", -33.87, 151.21, "2021-03-20T00:00", 45.6932, 46.9272),
    ("sydney", -33.87, 151.21, "2021-03-20T04:00", 46.4462, 314.6842),
    ("sydney", -33.87, 151.21, "2021-03-20T08:00", 0.5560, 270.3427),
    ("sydney", -33.87, 151.21, "2021-03-20T12:00", -45.6241, 226.7818),
    ("sydney", -33.87, 151.21, "2021-03-20T16:00", -46.4378, 134.6302),
    ("sydney", -33.87, 151.21, "2021-03-20T20:00", -0.6105, 90.2023),
    ("sydney", -33.87, 151.21, "2021-06-21T00:00", 26.3031, 29.9820),
    ("sydney", -33.87, 151.21, "2021-06-21T04:00", 25.6514, 328.6256),
    ("sydney", -33.87, 151.21, "2021-06-21T08:00", -13.4002, 289.4241),
    ("sydney", -33.87, 151.21, "2021-06-21T12:00", -62.4145, 255.5094),
    ("sydney", -33.87, 151.21, "2021-06-21T16:00", -61.2177, 103.1158),
    ("sydney", -33.87, 151.21, "2021-06-21T20:00", -12.2400, 69.8451),
    ("sydney", -33.87, 151.21, "2021-09-23T00:00", 47.8305, 42.3780),
    ("sydney", -33.87, 151.21, "2021-09-23T04:00", 44.1713, 310.3908),
    ("sydney", -33.87, 151.21, "2021-09-23T08:00", -2.4838, 268.0857),
    ("sydney", -33.87, 151.21, "2021-09-23T12:00", -47.5715, 222.0373),
    ("sydney", -33.87, 151.21, "2021-09-23T16:00", -43.7782, 130.7599),
    ("sydney", -33.87, 151.21, "2021-09-23T20:00", 2.8529, 88.5638),
    ("sydney", -33.87, 151.21, "2021-12-21T00:00", 63.2033, 74.5451),
    ("sydney", -33.87, 151.21, "2021-12-21T04:00", 60.4253, 282.2536),
    ("sydney", -33.87, 151.21, "2021-12-21T08:00", 11.4860, 249.3654),
    ("sydney", -33.87, 151.21, "2021-12-21T12:00", -26.6753, 209.1583),
    ("sydney", -33.87, 151.21, "2021-12-21T16:00", -25.2682, 147.8338),
    ("sydney", -33.87, 151.21, "2021-12-21T20:00", 14.0814, 108.9951),
]

MONTPELLIER = (43.6, 3.87)
MONTPELLIER_SOLSTICE_NOON_ELEVATION = 69.836

# kWh/kWp/yr, open sky, albedo 0.2, PvSystemConfig defaults
PVOUT_REF = {
    (37, 180): 1942.2454676378743,
    (37, 90): 1484.513662964684,
    (27, 180): 1913.2092843207386,
    (47, 180): 1926.1087029834252,
}
