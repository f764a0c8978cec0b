"""Charging-station placement: demand modelling and Deep Q-learning placement."""

from chargeplace.ingest import (
    POI_CATEGORIES,
    GeoPoint,
    RegionData,
    StationFeatures,
    build_features,
    disaggregate_energy,
    haversine_distance,
    load_region,
)
from chargeplace.demand import (
    DemandGrid,
    DemandModel,
    GbrtHyperparams,
    GbrtModel,
    QuantileTransform,
    build_demand_grid,
    gbrt_predict,
    gbrt_train,
    kfold_cv,
    minmax_normalize,
    quantile_fit,
    quantile_transform,
    r_squared,
)
from chargeplace.env import EnvConfig, Observation, PlacementState, coverage_gain, dynamic_decay, reset, step
from chargeplace.dqn import QNetwork, ReplayBuffer, TrainConfig, boltzmann_sample, train
from chargeplace.evaluation import EvalReport, evaluate, good_reward, random_baseline

__version__ = "0.1.0"

__all__ = [
    "POI_CATEGORIES",
    "GeoPoint",
    "RegionData",
    "StationFeatures",
    "build_features",
    "disaggregate_energy",
    "haversine_distance",
    "load_region",
    "DemandGrid",
    "DemandModel",
    "GbrtHyperparams",
    "GbrtModel",
    "QuantileTransform",
    "build_demand_grid",
    "gbrt_predict",
    "gbrt_train",
    "kfold_cv",
    "minmax_normalize",
    "quantile_fit",
    "quantile_transform",
    "r_squared",
    "EnvConfig",
    "Observation",
    "coverage_gain",
    "reset",
    "step",
    "PlacementState",
    "dynamic_decay",
    "QNetwork",
    "ReplayBuffer",
    "TrainConfig",
    "boltzmann_sample",
    "train",
    "EvalReport",
    "evaluate",
    "good_reward",
    "random_baseline",
]
