"""Demand rasters: prediction over a cell grid, normalization, and file formats."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from chargeplace.demand.gbrt import GbrtModel
from chargeplace.demand.quantile import QuantileTransform
from chargeplace.errors import DataError
from chargeplace.ingest import (
    FEATURE_NAMES,
    GeoPoint,
    RegionData,
    _haversine,
    _id_key,
    build_features,
    offset_point,
)

DEFAULT_CELL_SIZE = 250.0


@dataclass
class DemandModel:
    """A boosted ensemble plus the quantile scalers applied around it.

    ``feature_columns`` lists the feature names passed through
    ``feature_transform`` before prediction.  When ``target_transform`` is set
    the ensemble was trained on quantile-scaled targets and predictions are
    mapped back to kWh/month.
    """

    gbrt: GbrtModel
    feature_columns: tuple[str, ...] = ()
    feature_transform: QuantileTransform | None = None
    target_transform: QuantileTransform | None = None
    cv_scores: list[float] = field(default_factory=list)

    def prepare(self, X) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        if X.ndim == 1:
            X = X[None, :]
        if self.feature_transform is not None:
            for k, name in enumerate(self.feature_columns):
                j = FEATURE_NAMES.index(name)
                X[:, j] = self.feature_transform.transform_column(X[:, j], k)
        return X

    def predict(self, X) -> np.ndarray:
        out = self.gbrt.predict(self.prepare(X))
        if self.target_transform is not None:
            out = self.target_transform.inverse_column(out, 0)
        return out

    def to_dict(self) -> dict:
        return {
            "gbrt": self.gbrt.to_dict(),
            "feature_columns": list(self.feature_columns),
            "feature_transform": self.feature_transform.to_dict() if self.feature_transform else None,
            "target_transform": self.target_transform.to_dict() if self.target_transform else None,
            "cv_scores": list(self.cv_scores),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DemandModel":
        ft = d.get("feature_transform")
        tt = d.get("target_transform")
        return cls(
            gbrt=GbrtModel.from_dict(d["gbrt"]),
            feature_columns=tuple(d.get("feature_columns", ())),
            feature_transform=QuantileTransform.from_dict(ft) if ft else None,
            target_transform=QuantileTransform.from_dict(tt) if tt else None,
            cv_scores=list(d.get("cv_scores", [])),
        )


@dataclass
class DemandGrid:
    """Row-major n x n demand raster anchored at its north-west corner.

    Row ``i`` runs south from the origin and column ``j`` runs east.
    """

    demand: np.ndarray
    cell_size: float = DEFAULT_CELL_SIZE
    origin: GeoPoint = field(default_factory=lambda: GeoPoint(0.0, 0.0))
    normalized: bool = False

    def __post_init__(self):
        self.demand = np.array(self.demand, dtype=float)
        if self.demand.ndim != 2 or self.demand.shape[0] != self.demand.shape[1] or self.demand.shape[0] < 1:
            raise ValueError(f"demand must be a non-empty square array, got shape {self.demand.shape}")
        if not np.all(np.isfinite(self.demand)) or np.any(self.demand < 0):
            raise ValueError("demand values must be finite and nonnegative")

    @property
    def n(self) -> int:
        return self.demand.shape[0]

    def copy(self) -> "DemandGrid":
        return DemandGrid(self.demand.copy(), self.cell_size, self.origin, self.normalized)

    def cell_center(self, row: int, col: int) -> GeoPoint:
        return offset_point(self.origin, self.cell_size * (row + 0.5), self.cell_size * (col + 0.5))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "cell_size": self.cell_size,
            "origin": {"lat": self.origin.lat, "lon": self.origin.lon},
            "normalized": self.normalized,
            "demand": self.demand.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DemandGrid":
        n = int(d["n"])
        values = np.array(d["demand"], dtype=float)
        if values.size != n * n:
            raise DataError(f"grid declares n={n} but holds {values.size} values")
        return cls(
            values.reshape(n, n),
            float(d["cell_size"]),
            GeoPoint(float(d["origin"]["lat"]), float(d["origin"]["lon"])),
            bool(d["normalized"]),
        )

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load_json(cls, path) -> "DemandGrid":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: not a demand grid ({exc})") from None

    def to_pgm(self) -> str:
        values = self.demand if self.normalized else minmax_normalize(self).demand
        return pgm_text(np.rint(255 * values).astype(int))


def pgm_text(pixels: np.ndarray, maxval: int = 255) -> str:
    """Plain (P2) PGM for a 2-D integer array."""
    h, w = pixels.shape
    lines = ["P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(int(v)) for v in row) for row in pixels]
    return "\n".join(lines) + "\n"


def minmax_normalize(g: DemandGrid) -> DemandGrid:
    lo, hi = g.demand.min(), g.demand.max()
    if hi > lo:
        values = (g.demand - lo) / (hi - lo)
    else:
        values = np.zeros_like(g.demand)
    return DemandGrid(values, g.cell_size, g.origin, normalized=True)


def nearest_station_zip(region: RegionData, site: GeoPoint) -> str:
    """ZIP of the closest existing station (ties by station id); '' when there are none."""
    if not region.stations:
        return ""
    lat, lon = region._station_arrays
    d = _haversine(site.lat, site.lon, lat, lon)
    best = min(range(len(d)), key=lambda i: (d[i], _id_key(region.stations[i].id)))
    return region.stations[best].zip


def grid_features(
    region: RegionData,
    n: int,
    cell_size: float,
    origin: GeoPoint,
    ports: tuple[int, int] = (1, 0),
) -> np.ndarray:
    """Feature rows for hypothetical chargers at every cell centre, row-major."""
    rows = []
    for i in range(n):
        for j in range(n):
            site = offset_point(origin, cell_size * (i + 0.5), cell_size * (j + 0.5))
            rows.append(build_features(region, site, nearest_station_zip(region, site), ports).to_vector())
    return np.array(rows)


def build_demand_grid(
    model,
    region: RegionData,
    n: int = 26,
    cell_size: float = DEFAULT_CELL_SIZE,
    origin: GeoPoint | None = None,
    ports: tuple[int, int] = (1, 0),
) -> DemandGrid:
    """Predict demand for a charger at each cell centre.

    ``model`` is anything with ``predict(X)`` over raw feature rows (a
    ``GbrtModel`` or ``DemandModel``).  Each cell takes the ZIP of its
    nearest existing station for the EV-registration feature.  Negative
    predictions are clamped to zero.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if origin is None:
        raise ValueError("origin is required")
    X = grid_features(region, n, cell_size, origin, ports)
    pred = np.maximum(np.asarray(model.predict(X), dtype=float), 0.0)
    return DemandGrid(pred.reshape(n, n), cell_size, origin, normalized=False)
