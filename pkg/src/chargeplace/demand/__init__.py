from chargeplace.demand.gbrt import (
    GbrtHyperparams,
    GbrtModel,
    RegressionTree,
    gbrt_predict,
    gbrt_train,
    kfold_cv,
    kfold_indices,
    r_squared,
)
from chargeplace.demand.grid import (
    DemandGrid,
    DemandModel,
    build_demand_grid,
    grid_features,
    minmax_normalize,
    pgm_text,
)
from chargeplace.demand.quantile import QuantileTransform, quantile_fit, quantile_transform

__all__ = [
    "GbrtHyperparams",
    "GbrtModel",
    "RegressionTree",
    "gbrt_predict",
    "gbrt_train",
    "kfold_cv",
    "kfold_indices",
    "r_squared",
    "DemandGrid",
    "DemandModel",
    "build_demand_grid",
    "grid_features",
    "minmax_normalize",
    "pgm_text",
    "QuantileTransform",
    "quantile_fit",
    "quantile_transform",
]
