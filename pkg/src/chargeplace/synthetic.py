"""Synthetic grids, regions and regression data for demos and tests."""

from __future__ import annotations

import numpy as np

from chargeplace.demand.grid import DemandGrid, minmax_normalize
from chargeplace.ingest import POI_CATEGORIES, GeoPoint, Poi, RegionData, Road, Station, offset_point


def blob_grid(n: int = 26, seed: int = 0, noise: float = 0.3, width: float | None = None,
              center: tuple[float, float] | None = None) -> DemandGrid:
    """Normalized grid: one Gaussian demand hot spot plus uniform noise."""
    rng = np.random.default_rng(seed)
    if center is None:
        center = tuple(rng.uniform(0.25 * n, 0.75 * n, size=2))
    width = width if width is not None else n / 6.0
    ii, jj = np.mgrid[0:n, 0:n] + 0.5
    d2 = (ii - center[0]) ** 2 + (jj - center[1]) ** 2
    demand = np.exp(-d2 / (2 * width**2)) + noise * rng.uniform(size=(n, n))
    return minmax_normalize(DemandGrid(demand))


def hot_cell_grid(n: int = 5, cell: int | None = None, background: float = 0.0) -> DemandGrid:
    values = np.full((n, n), float(background))
    values.flat[(n * n) // 2 if cell is None else cell] = 1.0
    return DemandGrid(values, normalized=True)


def regression_dataset(n_rows: int = 500, seed: int = 0, noise: float = 0.1):
    """18-column feature matrix whose target is ``3*q(t_s) + 2*q(v_s) + noise``.

    ``q`` is the empirical CDF over the sample, so t_s and v_s arrive already
    quantile-scaled in the returned matrix; other columns are POI-like
    counts and station attributes that carry no signal.
    """
    rng = np.random.default_rng(seed)
    t_raw = rng.lognormal(9.0, 1.0, n_rows)
    v_raw = rng.poisson(300, n_rows).astype(float)
    ranks_t = np.argsort(np.argsort(t_raw, kind="stable"), kind="stable") / (n_rows - 1)
    ranks_v = np.argsort(np.argsort(v_raw, kind="stable"), kind="stable") / (n_rows - 1)
    X = np.column_stack(
        [
            ranks_t,
            ranks_v,
            rng.poisson(3, n_rows),
            rng.integers(1, 5, n_rows),
            rng.integers(0, 3, n_rows),
            rng.poisson(2.0, (n_rows, len(POI_CATEGORIES))),
        ]
    ).astype(float)
    y = 3.0 * X[:, 0] + 2.0 * X[:, 1] + rng.normal(0.0, noise, n_rows)
    return X, y


def synthetic_region(seed: int = 0, origin: GeoPoint = GeoPoint(42.65, -73.80), extent_m: float = 6500.0,
                     n_stations: int = 40, n_roads: int = 120, n_pois: int = 300,
                     hotspot: tuple[float, float] = (0.25, 0.25)) -> RegionData:
    """A random region with traffic concentrated around ``hotspot``.

    ``hotspot`` is given as fractions (south, east) of ``extent_m`` from the
    north-west ``origin``.
    """
    rng = np.random.default_rng(seed)
    hs = np.array(hotspot) * extent_m

    def place(k, spread):
        pts = rng.uniform(0, extent_m, size=(k, 2))
        near = rng.random(k) < 0.5
        pts[near] = np.clip(hs + rng.normal(0, spread, size=(near.sum(), 2)), 0, extent_m)
        return pts

    zips = ["12201", "12202", "12203", "12204"]

    def zip_of(p):
        return zips[int(p[0] > extent_m / 2) * 2 + int(p[1] > extent_m / 2)]

    road_pts = place(n_roads, extent_m / 10)
    roads = []
    for k, p in enumerate(road_pts):
        dist = np.hypot(*(p - hs))
        aadt = 2000 + 40000 * np.exp(-dist / (extent_m / 8)) + rng.uniform(0, 1000)
        roads.append(Road(str(k), offset_point(origin, p[0], p[1]), float(round(aadt))))

    st_pts = place(n_stations, extent_m / 8)
    stations = [
        Station(str(k), offset_point(origin, p[0], p[1]), zip_of(p), int(rng.integers(1, 5)), int(rng.integers(0, 3)))
        for k, p in enumerate(st_pts)
    ]

    poi_pts = place(n_pois, extent_m / 8)
    pois = [
        Poi(str(k), offset_point(origin, p[0], p[1]), POI_CATEGORIES[int(rng.integers(len(POI_CATEGORIES)))])
        for k, p in enumerate(poi_pts)
    ]

    registrations = {z: int(rng.integers(100, 2000)) for z in zips}
    energy = {z: float(round(rng.uniform(2000, 12000), 1)) for z in zips}
    return RegionData(stations, roads, pois, registrations, energy)
