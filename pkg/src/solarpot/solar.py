"""Specific photovoltaic yield (kWh per kWp per year).

Hourly chain: sun position at mid-hour, isotropic-sky transposition onto the
roof plane, horizon shading of the direct beam and sky-view scaling of the
sky diffuse, NOCT cell temperature, PVWatts DC, flat DC losses, inverter with
clipping, then a chronological sum.

Sun position follows the NOAA spreadsheet formulation (mean anomaly, equation
of center, obliquity, equation of time); it reports geometric elevation
without refraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .shading import HorizonMask, direct_blocked, sky_view_factor

HOUR = np.timedelta64(3600, "s")


@dataclass(frozen=True)
class SolarPosition:
    zenith_deg: np.ndarray
    azimuth_deg: np.ndarray

    @property
    def elevation_deg(self):
        return 90.0 - self.zenith_deg


@dataclass(frozen=True)
class PvSystemConfig:
    pdc0_w: float = 1000.0
    gamma_pdc_per_degC: float = -0.004
    noct_degC: float = 45.0
    inv_eff_nom: float = 0.96
    dc_ac_ratio: float = 1.1
    system_loss_fraction: float = 0.14
    albedo: float = 0.2

    def __post_init__(self):
        if self.pdc0_w <= 0:
            raise ValueError("pdc0_w must be > 0")
        if not self.gamma_pdc_per_degC < 0:
            raise ValueError("gamma_pdc_per_degC must be negative")
        for name in ("inv_eff_nom", "system_loss_fraction", "albedo"):
            v = getattr(self, name)
            if not 0 <= v <= 1 or (name == "inv_eff_nom" and v == 0):
                raise ValueError(f"{name} must be a fraction, got {v}")
        if self.dc_ac_ratio < 1:
            raise ValueError("dc_ac_ratio must be >= 1")


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: np.datetime64
    ghi: float
    dni: float
    dhi: float
    temp_air: float = 15.0
    wind_speed: float = 2.0


@dataclass
class WeatherSeries:
    """One year of hourly weather as parallel arrays.

    ``times`` label the start of each hour (UTC).
    """

    times: np.ndarray
    ghi: np.ndarray
    dni: np.ndarray
    dhi: np.ndarray
    temp_air: np.ndarray
    wind_speed: np.ndarray
    latitude_deg: float
    longitude_deg: float
    _sun: Optional[SolarPosition] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype="datetime64[s]")
        for name in ("ghi", "dni", "dhi", "temp_air", "wind_speed"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def __len__(self):
        return len(self.times)

    def record(self, i: int) -> WeatherRecord:
        return WeatherRecord(self.times[i], float(self.ghi[i]), float(self.dni[i]), float(self.dhi[i]),
                             float(self.temp_air[i]), float(self.wind_speed[i]))

    def check_full_year(self) -> None:
        n = len(self.times)
        if n not in (8760, 8784):
            raise ValueError(f"weather series must hold 8760 or 8784 hourly rows, got {n}")
        steps = np.diff(self.times)
        if np.any(steps != HOUR):
            k = int(np.flatnonzero(steps != HOUR)[0])
            raise ValueError(f"weather series is not hourly after {self.times[k]}")

    def sun(self) -> SolarPosition:
        """Mid-hour sun positions, cached."""
        if self._sun is None:
            self._sun = solar_position(self.times + HOUR // 2, self.latitude_deg, self.longitude_deg)
        return self._sun


def _julian_day(t) -> np.ndarray:
    secs = (np.asarray(t, dtype="datetime64[s]") - np.datetime64("1970-01-01T00:00:00", "s"))
    return secs.astype(np.float64) / 86400.0 + 2440587.5


def solar_position(t, latitude_deg: float, longitude_deg: float) -> SolarPosition:
    """Sun zenith and azimuth (clockwise from north) for UTC instants ``t``."""
    if abs(latitude_deg) > 90:
        raise ValueError("latitude must be within [-90, 90]")
    jd = _julian_day(t)
    T = (jd - 2451545.0) / 36525.0

    L0 = np.mod(280.46646 + T * (36000.76983 + 0.0003032 * T), 360.0)
    M = 357.52911 + T * (35999.05029 - 0.0001537 * T)
    e = 0.016708634 - T * (0.000042037 + 0.0000001267 * T)
    Mr = np.radians(M)
    C = (np.sin(Mr) * (1.914602 - T * (0.004817 + 0.000014 * T))
         + np.sin(2 * Mr) * (0.019993 - 0.000101 * T) + np.sin(3 * Mr) * 0.000289)
    omega = np.radians(125.04 - 1934.136 * T)
    lam = np.radians(L0 + C - 0.00569 - 0.00478 * np.sin(omega))
    eps0 = 23 + (26 + (21.448 - T * (46.815 + T * (0.00059 - T * 0.001813))) / 60) / 60
    eps = np.radians(eps0 + 0.00256 * np.cos(omega))
    decl = np.arcsin(np.sin(eps) * np.sin(lam))

    y = np.tan(eps / 2) ** 2
    L0r = np.radians(L0)
    eot = 4 * np.degrees(y * np.sin(2 * L0r) - 2 * e * np.sin(Mr) + 4 * e * y * np.sin(Mr) * np.cos(2 * L0r)
                         - 0.5 * y * y * np.sin(4 * L0r) - 1.25 * e * e * np.sin(2 * Mr))

    minutes_utc = np.mod(jd - 0.5, 1.0) * 1440.0
    true_solar = np.mod(minutes_utc + eot + 4 * longitude_deg, 1440.0)
    H = np.radians(true_solar / 4 - 180.0)

    phi = math.radians(latitude_deg)
    cos_z = np.clip(math.sin(phi) * np.sin(decl) + math.cos(phi) * np.cos(decl) * np.cos(H), -1, 1)
    zenith = np.degrees(np.arccos(cos_z))
    az = np.degrees(np.arctan2(np.sin(H), np.cos(H) * math.sin(phi) - np.tan(decl) * math.cos(phi)))
    return SolarPosition(zenith, np.mod(az + 180.0, 360.0))


def angle_of_incidence(tilt_deg, surface_azimuth_deg, sun: SolarPosition):
    z = np.radians(sun.zenith_deg)
    b = np.radians(tilt_deg)
    cos_aoi = np.cos(z) * np.cos(b) + np.sin(z) * np.sin(b) * np.cos(
        np.radians(sun.azimuth_deg - surface_azimuth_deg))
    return np.degrees(np.arccos(np.clip(cos_aoi, -1, 1)))


@dataclass(frozen=True)
class PoaComponents:
    direct: np.ndarray
    sky_diffuse: np.ndarray
    ground_reflected: np.ndarray

    @property
    def total(self):
        return self.direct + self.sky_diffuse + self.ground_reflected


def transpose(ghi, dni, dhi, tilt_deg, surface_azimuth_deg, sun: SolarPosition,
              albedo: float = 0.2) -> PoaComponents:
    """Isotropic-sky plane-of-array irradiance."""
    cos_aoi = np.cos(np.radians(angle_of_incidence(tilt_deg, surface_azimuth_deg, sun)))
    up = np.asarray(sun.zenith_deg) < 90.0
    direct = np.where(up, np.asarray(dni) * np.maximum(cos_aoi, 0.0), 0.0)
    cb = math.cos(math.radians(tilt_deg))
    sky = np.asarray(dhi, dtype=float) * (1 + cb) / 2
    ground = np.asarray(ghi, dtype=float) * albedo * (1 - cb) / 2
    return PoaComponents(direct, sky, ground)


def cell_temperature(poa_total, temp_air, wind_speed, noct: float = 45.0):
    """Wind-adjusted NOCT cell temperature (deg C)."""
    return temp_air + (noct - 20.0) / 800.0 * poa_total * 9.5 / (5.7 + 3.8 * np.asarray(wind_speed))


def pvwatts_dc(poa_eff, t_cell, pdc0_w: float, gamma_pdc: float = -0.004):
    return np.maximum(pdc0_w * np.asarray(poa_eff) / 1000.0 * (1 + gamma_pdc * (np.asarray(t_cell) - 25.0)), 0.0)


def inverter_ac(p_dc, cfg: PvSystemConfig, pdc0_w: Optional[float] = None):
    """Fixed-efficiency inverter clipped at ``pdc0 / dc_ac_ratio * eff``."""
    pdc0 = cfg.pdc0_w if pdc0_w is None else pdc0_w
    rated = pdc0 / cfg.dc_ac_ratio * cfg.inv_eff_nom
    return np.minimum(np.asarray(p_dc) * cfg.inv_eff_nom, rated)


# -- clear-sky weather --------------------------------------------------------------

CLEARSKY_TEMP_AIR = 15.0
CLEARSKY_WIND = 2.0


def clearsky_irradiance(sun: SolarPosition):
    """Haurwitz global irradiance split with a fixed-form diffuse fraction.

    ``ghi = 1098 cos z exp(-0.057 / cos z)``; the diffuse share grows from 10 %
    at zenith to 30 % at the horizon.
    """
    cz = np.cos(np.radians(sun.zenith_deg))
    up = cz > 0
    czs = np.where(up, cz, 1.0)
    ghi = np.where(up, 1098.0 * czs * np.exp(-0.057 / czs), 0.0)
    kd = 0.1 + 0.2 * (1 - czs)
    dhi = np.where(up, kd * ghi, 0.0)
    dni = np.where(up, (ghi - dhi) / czs, 0.0)
    return ghi, dni, dhi


def clearsky(t, latitude_deg: float, longitude_deg: float) -> WeatherRecord:
    sun = solar_position(np.datetime64(t, "s"), latitude_deg, longitude_deg)
    ghi, dni, dhi = (float(v) for v in clearsky_irradiance(sun))
    return WeatherRecord(np.datetime64(t, "s"), ghi, dni, dhi, CLEARSKY_TEMP_AIR, CLEARSKY_WIND)


def clearsky_year(year: int, latitude_deg: float, longitude_deg: float) -> WeatherSeries:
    """Hourly clear-sky series; irradiance of each hour is evaluated at mid-hour."""
    start = np.datetime64(f"{year}-01-01T00:00:00", "s")
    end = np.datetime64(f"{year + 1}-01-01T00:00:00", "s")
    times = np.arange(start, end, HOUR)
    sun = solar_position(times + HOUR // 2, latitude_deg, longitude_deg)
    ghi, dni, dhi = clearsky_irradiance(sun)
    n = len(times)
    return WeatherSeries(times, ghi, dni, dhi, np.full(n, CLEARSKY_TEMP_AIR), np.full(n, CLEARSKY_WIND),
                         latitude_deg, longitude_deg, _sun=sun)


# -- annual integration -------------------------------------------------------------

@dataclass(frozen=True)
class PvoutResult:
    """Annual specific yield in kWh/kWp with its direct and diffuse shares.

    The hourly AC output is attributed to the direct beam and to the diffuse
    (sky + ground) part in proportion to their plane-of-array irradiance, so
    ``direct + diffuse == total`` up to rounding.
    """

    total: float
    direct: float
    diffuse: float
    poa_insolation_kwh_m2: float
    svf: float


def pvout_annual(weather: WeatherSeries, mask: Optional[HorizonMask], tilt_deg: float,
                 surface_azimuth_deg: float, cfg: PvSystemConfig = PvSystemConfig()) -> PvoutResult:
    weather.check_full_year()
    if not 0 <= tilt_deg <= 90:
        raise ValueError("tilt must lie in [0, 90]")
    mask = mask if mask is not None else HorizonMask.open_sky()
    sun = weather.sun()
    poa = transpose(weather.ghi, weather.dni, weather.dhi, tilt_deg, surface_azimuth_deg, sun, cfg.albedo)

    blocked = direct_blocked(mask, sun.azimuth_deg, sun.elevation_deg)
    svf = sky_view_factor(mask)
    direct = np.where(blocked, 0.0, poa.direct)
    diffuse = poa.sky_diffuse * svf + poa.ground_reflected
    total_poa = direct + diffuse

    t_cell = cell_temperature(total_poa, weather.temp_air, weather.wind_speed, cfg.noct_degC)
    dc = pvwatts_dc(total_poa, t_cell, 1000.0, cfg.gamma_pdc_per_degC) * (1 - cfg.system_loss_fraction)
    ac = inverter_ac(dc, cfg, pdc0_w=1000.0)

    with np.errstate(invalid="ignore", divide="ignore"):
        direct_share = np.where(total_poa > 0, direct / total_poa, 0.0)
    ac_direct = ac * direct_share
    return PvoutResult(
        total=float(np.sum(ac)) / 1000.0,
        direct=float(np.sum(ac_direct)) / 1000.0,
        diffuse=float(np.sum(ac - ac_direct)) / 1000.0,
        poa_insolation_kwh_m2=float(np.sum(total_poa)) / 1000.0,
        svf=svf,
    )
