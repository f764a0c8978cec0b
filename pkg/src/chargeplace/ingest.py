"""Region data loading and per-station feature construction.

A region is five CSV tables (stations, roads, POIs, EV registrations per ZIP
and monthly charging energy per ZIP).  ``build_features`` turns any site,
real or hypothetical, into the 18-column feature vector used by the demand
model:

    t_s   mean AADT of the 3 nearest roads
    v_s   EV registrations in the site's ZIP
    n_s   other stations closer than 1 km
    p_c   Level 2 ports
    p_d   DC fast-charging ports
    i_1 .. i_13   POI counts per category closer than 500 m
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from chargeplace.errors import DataError

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0
STATION_RADIUS_M = 1_000.0
POI_RADIUS_M = 500.0
NEAREST_ROADS = 3

POI_CATEGORIES = (
    "food_beverage",
    "sustenance",
    "outdoor_sport",
    "entertainment",
    "financial",
    "education",
    "healthcare",
    "tourism",
    "leisure",
    "public_building",
    "general_shop",
    "transportation",
    "worship",
)
_CATEGORY_INDEX = {name: k for k, name in enumerate(POI_CATEGORIES)}

FEATURE_NAMES = ("t_s", "v_s", "n_s", "p_c", "p_d") + tuple(
    f"i_{k + 1}" for k in range(len(POI_CATEGORIES))
)
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinates out of range: ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class Station:
    id: str
    point: GeoPoint
    zip: str
    level2_ports: int
    dcfc_ports: int


@dataclass(frozen=True)
class Road:
    id: str
    point: GeoPoint
    aadt: float


@dataclass(frozen=True)
class Poi:
    id: str
    point: GeoPoint
    category: str


def _id_key(value: str):
    # numeric ids order numerically, everything else lexicographically after them
    try:
        return (0, int(value), "")
    except ValueError:
        return (1, 0, value)


@dataclass
class RegionData:
    stations: list[Station] = field(default_factory=list)
    roads: list[Road] = field(default_factory=list)
    pois: list[Poi] = field(default_factory=list)
    ev_registrations: dict[str, int] = field(default_factory=dict)
    zip_energy: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for road in self.roads:
            if road.aadt < 0:
                raise DataError(f"road {road.id}: negative AADT")
        for st in self.stations:
            if st.level2_ports < 0 or st.dcfc_ports < 0:
                raise DataError(f"station {st.id}: negative port count")
        for poi in self.pois:
            if poi.category not in _CATEGORY_INDEX:
                raise DataError(f"poi {poi.id}: unknown category {poi.category!r}")
        for z, kwh in self.zip_energy.items():
            if kwh < 0:
                raise DataError(f"zip {z}: negative energy")

    @cached_property
    def _road_arrays(self):
        lat = np.array([r.point.lat for r in self.roads], dtype=float)
        lon = np.array([r.point.lon for r in self.roads], dtype=float)
        aadt = np.array([r.aadt for r in self.roads], dtype=float)
        order = sorted(range(len(self.roads)), key=lambda i: _id_key(self.roads[i].id))
        rank = np.empty(len(self.roads), dtype=np.int64)
        rank[order] = np.arange(len(self.roads))
        return lat, lon, aadt, rank

    @cached_property
    def _station_arrays(self):
        lat = np.array([s.point.lat for s in self.stations], dtype=float)
        lon = np.array([s.point.lon for s in self.stations], dtype=float)
        return lat, lon

    @cached_property
    def _poi_arrays(self):
        lat = np.array([p.point.lat for p in self.pois], dtype=float)
        lon = np.array([p.point.lon for p in self.pois], dtype=float)
        cat = np.array([_CATEGORY_INDEX[p.category] for p in self.pois], dtype=np.int64)
        return lat, lon, cat


@dataclass(frozen=True)
class StationFeatures:
    t_s: float
    v_s: float
    n_s: int
    p_c: int
    p_d: int
    poi_counts: tuple[int, ...]
    target_kwh: float | None = None

    def __post_init__(self):
        if len(self.poi_counts) != len(POI_CATEGORIES):
            raise ValueError(f"expected {len(POI_CATEGORIES)} POI counts, got {len(self.poi_counts)}")

    def to_vector(self) -> np.ndarray:
        return np.array(
            [self.t_s, self.v_s, self.n_s, self.p_c, self.p_d, *self.poi_counts], dtype=float
        )


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters."""
    return float(_haversine(a.lat, a.lon, b.lat, b.lon))


def _haversine(lat1, lon1, lat2, lon2):
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(lon2) - np.radians(lon1)
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def offset_point(origin: GeoPoint, south_m: float, east_m: float) -> GeoPoint:
    """Shift ``origin`` by metric offsets using a local equirectangular approximation."""
    lat = origin.lat - math.degrees(south_m / EARTH_RADIUS_M)
    lon = origin.lon + math.degrees(east_m / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    return GeoPoint(lat, lon)


def build_features(
    region: RegionData,
    site: GeoPoint,
    zip_code: str,
    ports: tuple[int, int] = (1, 0),
) -> StationFeatures:
    """Feature vector for a charger at ``site``.

    Radius predicates are strict.  Equidistant roads are ranked by id so the
    three nearest are well defined; a station sitting exactly on ``site`` is
    not counted as its own neighbour.
    """
    if len(region.roads) < NEAREST_ROADS:
        raise DataError("insufficient road data")

    r_lat, r_lon, aadt, rank = region._road_arrays
    d_road = _haversine(site.lat, site.lon, r_lat, r_lon)
    nearest = np.lexsort((rank, d_road))[:NEAREST_ROADS]
    t_s = float(aadt[nearest].sum() / NEAREST_ROADS)

    if zip_code in region.ev_registrations:
        v_s = float(region.ev_registrations[zip_code])
    else:
        logger.warning("zip %s has no EV registration count; using 0", zip_code)
        v_s = 0.0

    n_s = 0
    if region.stations:
        s_lat, s_lon = region._station_arrays
        d_st = _haversine(site.lat, site.lon, s_lat, s_lon)
        same_site = (s_lat == site.lat) & (s_lon == site.lon)
        n_s = int(np.count_nonzero((d_st < STATION_RADIUS_M) & ~same_site))

    counts = np.zeros(len(POI_CATEGORIES), dtype=np.int64)
    if region.pois:
        p_lat, p_lon, cat = region._poi_arrays
        d_poi = _haversine(site.lat, site.lon, p_lat, p_lon)
        counts = np.bincount(cat[d_poi < POI_RADIUS_M], minlength=len(POI_CATEGORIES))

    p_c, p_d = ports
    if p_c < 0 or p_d < 0:
        raise ValueError("port counts must be nonnegative")
    return StationFeatures(
        t_s=t_s,
        v_s=v_s,
        n_s=n_s,
        p_c=int(p_c),
        p_d=int(p_d),
        poi_counts=tuple(int(c) for c in counts),
    )


def disaggregate_energy(
    e_total: float, aadts: Sequence[float], mode: str = "proportional"
) -> list[float]:
    """Split a ZIP's monthly energy among its chargers by traffic.

    ``proportional`` gives each charger ``e_total * a / sum(aadts)`` so the
    shares add back up to ``e_total``.  ``paper-literal`` divides by the mean
    AADT instead, which inflates the total by the charger count; it exists
    only to reproduce the formula as published.
    """
    if e_total < 0:
        raise ValueError("e_total must be nonnegative")
    a = np.asarray(aadts, dtype=float)
    if a.size == 0:
        raise ValueError("aadts must be non-empty")
    if np.any(a < 0):
        raise ValueError("aadts must be nonnegative")
    total = a.sum()
    if total <= 0:
        raise DataError("cannot apportion energy: all AADT values are zero")
    if mode == "proportional":
        shares = e_total * (a / total)
    elif mode == "paper-literal":
        shares = e_total * (a / (total / a.size))
    else:
        raise ValueError(f"unknown disaggregation mode {mode!r}")
    return shares.tolist()


def station_training_rows(region: RegionData, mode: str = "proportional") -> list[tuple[Station, StationFeatures]]:
    """Features plus disaggregated energy targets for every existing station.

    Stations in ZIPs without an energy total are dropped.
    """
    feats = [
        build_features(region, st.point, st.zip, (st.level2_ports, st.dcfc_ports))
        for st in region.stations
    ]
    by_zip: dict[str, list[int]] = {}
    for idx, st in enumerate(region.stations):
        if st.zip in region.zip_energy:
            by_zip.setdefault(st.zip, []).append(idx)
        else:
            logger.warning("station %s: zip %s has no energy total; dropped", st.id, st.zip)

    targets: dict[int, float] = {}
    for z, members in by_zip.items():
        shares = disaggregate_energy(region.zip_energy[z], [feats[i].t_s for i in members], mode)
        targets.update(zip(members, shares))

    rows = []
    for idx, st in enumerate(region.stations):
        if idx in targets:
            f = feats[idx]
            rows.append((st, StationFeatures(f.t_s, f.v_s, f.n_s, f.p_c, f.p_d, f.poi_counts, targets[idx])))
    return rows


# --- CSV loading ---------------------------------------------------------

def _read_table(path: Path, columns: Iterable[str]) -> list[tuple[int, dict[str, str]]]:
    columns = tuple(columns)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: missing header row")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: header lacks column(s) {', '.join(missing)}")
        rows = []
        for row in reader:
            if None in row or any(row[c] is None for c in columns):
                raise DataError(f"{path}:{reader.line_num}: wrong number of fields")
            rows.append((reader.line_num, {c: row[c].strip() for c in columns}))
        return rows


def _parse(path: Path, line: int, name: str, text: str, kind):
    try:
        value = kind(text)
    except ValueError:
        raise DataError(f"{path}:{line}: bad {name} value {text!r}") from None
    if kind is float and not math.isfinite(value):
        raise DataError(f"{path}:{line}: non-finite {name}")
    return value


def _point(path: Path, line: int, row: dict[str, str]) -> GeoPoint:
    lat = _parse(path, line, "lat", row["lat"], float)
    lon = _parse(path, line, "lon", row["lon"], float)
    try:
        return GeoPoint(lat, lon)
    except ValueError as exc:
        raise DataError(f"{path}:{line}: {exc}") from None


def _nonneg(path: Path, line: int, name: str, value):
    if value < 0:
        raise DataError(f"{path}:{line}: {name} must be nonnegative")
    return value


def load_region(
    stations: str | Path,
    roads: str | Path,
    pois: str | Path,
    ev_registrations: str | Path,
    zip_energy: str | Path,
) -> RegionData:
    """Read the five region CSV files.  Malformed rows raise ``DataError`` naming the line."""
    stations, roads, pois = Path(stations), Path(roads), Path(pois)
    ev_registrations, zip_energy = Path(ev_registrations), Path(zip_energy)

    station_list = []
    for line, row in _read_table(stations, ("id", "lat", "lon", "zip", "level2_ports", "dcfc_ports")):
        station_list.append(
            Station(
                id=row["id"],
                point=_point(stations, line, row),
                zip=row["zip"],
                level2_ports=_nonneg(stations, line, "level2_ports",
                                     _parse(stations, line, "level2_ports", row["level2_ports"], int)),
                dcfc_ports=_nonneg(stations, line, "dcfc_ports",
                                   _parse(stations, line, "dcfc_ports", row["dcfc_ports"], int)),
            )
        )

    road_list = []
    for line, row in _read_table(roads, ("id", "lat", "lon", "aadt")):
        aadt = _nonneg(roads, line, "aadt", _parse(roads, line, "aadt", row["aadt"], float))
        road_list.append(Road(row["id"], _point(roads, line, row), aadt))

    poi_list = []
    for line, row in _read_table(pois, ("id", "lat", "lon", "category")):
        if row["category"] not in _CATEGORY_INDEX:
            raise DataError(f"{pois}:{line}: unknown POI category {row['category']!r}")
        poi_list.append(Poi(row["id"], _point(pois, line, row), row["category"]))

    registrations = {}
    for line, row in _read_table(ev_registrations, ("zip", "count")):
        registrations[row["zip"]] = _nonneg(
            ev_registrations, line, "count", _parse(ev_registrations, line, "count", row["count"], int)
        )

    energy = {}
    for line, row in _read_table(zip_energy, ("zip", "kwh_month")):
        energy[row["zip"]] = _nonneg(
            zip_energy, line, "kwh_month", _parse(zip_energy, line, "kwh_month", row["kwh_month"], float)
        )

    return RegionData(station_list, road_list, poi_list, registrations, energy)
