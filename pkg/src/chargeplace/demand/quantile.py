"""Empirical-CDF normalization onto [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class QuantileTransform:
    """Per-column reference quantiles at evenly spaced levels 0..1.

    ``references`` has shape (n_quantiles, n_columns) and is non-decreasing
    down each column.
    """

    references: np.ndarray
    n_quantiles: int

    @property
    def levels(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_quantiles)

    @property
    def n_columns(self) -> int:
        return self.references.shape[1]

    def transform_column(self, x, dim: int):
        ref = self.references[:, dim]
        q = self.levels
        x = np.asarray(x, dtype=float)
        # average of forward and reversed interpolation so runs of equal
        # references map to the middle of their level range
        up = np.interp(x, ref, q)
        down = -np.interp(-x, -ref[::-1], -q[::-1])
        return np.clip(0.5 * (up + down), 0.0, 1.0)

    def inverse_column(self, u, dim: int):
        return np.interp(np.clip(np.asarray(u, dtype=float), 0.0, 1.0), self.levels, self.references[:, dim])

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_columns:
            raise ValueError(f"expected shape (n, {self.n_columns}), got {X.shape}")
        return np.column_stack([self.transform_column(X[:, j], j) for j in range(self.n_columns)])

    def to_dict(self) -> dict:
        return {"n_quantiles": self.n_quantiles, "references": self.references.T.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "QuantileTransform":
        return cls(np.array(d["references"], dtype=float).T.copy(), int(d["n_quantiles"]))


def quantile_fit(values, n_quantiles: int = 1000) -> QuantileTransform:
    """Fit on a 1-D sample or an (n_samples, n_columns) matrix."""
    X = np.asarray(values, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("quantile_fit needs at least 2 values per column")
    if not np.all(np.isfinite(X)):
        raise ValueError("quantile_fit needs finite values")
    if n_quantiles < 2:
        raise ValueError("n_quantiles must be at least 2")
    m = min(n_quantiles, X.shape[0])
    refs = np.quantile(X, np.linspace(0.0, 1.0, m), axis=0)
    # np.quantile can wobble by an ulp on equal neighbours
    refs = np.maximum.accumulate(refs, axis=0)
    return QuantileTransform(refs, m)


def quantile_transform(t: QuantileTransform, x: float, dim: int = 0) -> float:
    return float(t.transform_column(x, dim))
