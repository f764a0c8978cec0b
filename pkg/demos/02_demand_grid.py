"""Train the demand model on a region and rasterize its predictions.

Uses a small ensemble so the script finishes in seconds.  Writes
demand_grid.json and demand_grid.pgm to the working directory.
"""

import numpy as np

from chargeplace.demand import DemandModel, GbrtHyperparams, build_demand_grid, gbrt_train, kfold_cv, minmax_normalize, quantile_fit
from chargeplace.ingest import FEATURE_NAMES, GeoPoint, station_training_rows
from chargeplace.synthetic import synthetic_region

region = synthetic_region(seed=7, n_stations=80)
rows = station_training_rows(region)
X = np.array([f.to_vector() for _, f in rows])
y = np.array([f.target_kwh for _, f in rows])
print(f"{len(y)} training stations, energy {y.min():.0f} to {y.max():.0f} kWh/month")

# traffic and the target are quantile-scaled; the model undoes the target scaling on predict
t_ts = quantile_fit(X[:, :1])
t_y = quantile_fit(y[:, None])
model = DemandModel(None, ("t_s",), t_ts, t_y)
Xs, ys = model.prepare(X), t_y.transform_column(y, 0)

hp = GbrtHyperparams(n_estimators=150, min_samples_split=4)
scores, mean = kfold_cv(Xs, ys, hp, k=5)
print("held-out R2 per fold:", " ".join(f"{s:.3f}" for s in scores), f"(mean {mean:.3f})")
model.gbrt = gbrt_train(Xs, ys, hp)

top = np.argsort(model.gbrt.importances)[::-1][:4]
print("largest importances:", ", ".join(f"{FEATURE_NAMES[j]} {model.gbrt.importances[j]:.2f}" for j in top))

origin = GeoPoint(42.65, -73.80)
raw = build_demand_grid(model, region, n=26, cell_size=250, origin=origin)
grid = minmax_normalize(raw)
i, j = np.unravel_index(np.argmax(grid.demand), grid.demand.shape)
print(f"predicted demand {raw.demand.min():.0f} to {raw.demand.max():.0f} kWh; peak at cell ({i}, {j})")
grid.save_json("demand_grid.json")
with open("demand_grid.pgm", "w") as fh:
    fh.write(grid.to_pgm())
print("wrote demand_grid.json and demand_grid.pgm")
