"""Command-line pipeline: region CSVs -> features -> demand model -> grid -> agent -> reports.

Every setting is a flat key with a default.  A ``key = value`` config file
overrides the defaults and a ``--key`` flag overrides the config file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from chargeplace.demand.gbrt import GbrtHyperparams, gbrt_train, kfold_cv
from chargeplace.demand.grid import DemandGrid, DemandModel, build_demand_grid, minmax_normalize
from chargeplace.demand.quantile import quantile_fit
from chargeplace.dqn import TrainConfig, load_checkpoint, save_checkpoint, train
from chargeplace.env import EnvConfig
from chargeplace.errors import DataError
from chargeplace.evaluation import SWEEP_PARAMETERS, best_subset, evaluate, save_report, sweep, write_sweep_csv
from chargeplace.ingest import FEATURE_NAMES, GeoPoint, RegionData, load_region, station_training_rows
from chargeplace.seeding import subseed

logger = logging.getLogger("chargeplace")


def _bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str):
    return None if str(text).strip().lower() in ("", "none") else float(text)


@dataclass
class RunConfig:
    # inputs
    stations: str = "stations.csv"
    roads: str = "roads.csv"
    pois: str = "pois.csv"
    ev_registrations: str = "ev_registrations.csv"
    zip_energy: str = "zip_energy.csv"
    # intermediate artifacts; empty means "the default file inside out"
    features: str = ""
    model: str = ""
    grid: str = ""
    checkpoint: str = ""
    out: str = "out"
    seed: int = 0
    # ingestion and demand model
    disaggregation: str = "proportional"
    quantile_columns: str = "t_s"
    quantile_target: bool = True
    n_quantiles: int = 1000
    cv_folds: int = 5
    learning_rate: float = 0.038
    n_estimators: int = 6873
    max_features: float = 0.894
    max_depth: int = 14
    min_samples_split: int = 30
    min_samples_leaf: int = 1
    # grid
    grid_n: int = 26
    cell_size: float = 250.0
    origin_lat: float | None = None
    origin_lon: float | None = None
    # environment
    budget: int = 10
    coverage_radius: int = 2
    w_d: float = 1.0
    w_c: float = 1.0
    dynamic: bool = False
    f: float = 2.0
    r_d: int = 2
    duplicate_penalty: float = 1.0
    # agent
    episodes: int = 5000
    batch_size: int = 32
    gamma: float = 0.99
    tau: float = 0.01
    lr: float = 0.001
    temperature: float = TrainConfig.temperature
    warmup_steps: int = 1000
    memory_size: int = 50_000
    # evaluation
    eval_episodes: int = 200
    pool_size: int = 30
    sweep_parameter: str = "coverage_radius"
    sweep_values: str = "1,2,3"

    def path(self, key: str, default_name: str) -> Path:
        value = getattr(self, key)
        return Path(value) if value else Path(self.out) / default_name

    def gbrt(self) -> GbrtHyperparams:
        return GbrtHyperparams(self.learning_rate, self.n_estimators, self.max_features, self.max_depth,
                               self.min_samples_split, self.min_samples_leaf, subseed(self.seed, "gbrt"))

    def env(self) -> EnvConfig:
        return EnvConfig(self.budget, self.coverage_radius, self.w_d, self.w_c, self.dynamic,
                         self.f, self.r_d, self.duplicate_penalty)

    def training(self) -> TrainConfig:
        return TrainConfig(self.episodes, self.batch_size, self.gamma, self.tau, self.lr, self.temperature,
                           self.warmup_steps, self.memory_size, self.seed)


# annotations are strings under postponed evaluation
KEY_TYPES = {
    f.name: {"bool": _bool, "int": int, "float": float, "str": str, "float | None": _optional_float}[f.type]
    for f in fields(RunConfig)
}


class UsageError(Exception):
    pass


def read_config(path) -> dict[str, object]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values: dict[str, object] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read config ({exc.strerror})") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEY_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = KEY_TYPES[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


COMMANDS = {
    "features": "region CSVs -> per-station feature table",
    "train-demand": "feature table -> demand model, CV report, importances",
    "grid": "demand model + region -> normalized demand grid (JSON and PGM)",
    "train-dqn": "grid -> agent checkpoint and episode log",
    "evaluate": "checkpoint + grid -> evaluation report",
    "sweep": "train and evaluate across values of one environment parameter",
    "oracle": "grid -> best top-demand placement subset",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chargeplace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat key = value settings file")
        for f in fields(RunConfig):
            flag = "--" + f.name.replace("_", "-")
            p.add_argument(flag, dest=f.name, type=KEY_TYPES[f.name], default=argparse.SUPPRESS,
                           metavar=f.name.upper(), help=f"default: {f.default!r}")
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file, then flags."""
    values = asdict(RunConfig())
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    values.update({k: v for k, v in vars(args).items() if k in values})
    try:
        cfg = RunConfig(**values)
        cfg.gbrt(), cfg.env(), cfg.training()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.disaggregation not in ("proportional", "paper-literal"):
        raise UsageError(f"disaggregation must be 'proportional' or 'paper-literal', not {cfg.disaggregation!r}")
    if cfg.sweep_parameter not in SWEEP_PARAMETERS:
        raise UsageError(f"sweep_parameter must be one of {', '.join(SWEEP_PARAMETERS)}")
    if cfg.eval_episodes < 1 or cfg.pool_size < 1 or cfg.grid_n < 1 or not cfg.cell_size > 0:
        raise UsageError("eval_episodes, pool_size, grid_n and cell_size must be positive")
    return cfg


# --- artifacts -------------------------------------------------------------

def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _region(cfg: RunConfig) -> RegionData:
    paths = [Path(p) for p in (cfg.stations, cfg.roads, cfg.pois, cfg.ev_registrations, cfg.zip_energy)]
    for p in paths:
        if not p.is_file():
            raise DataError(f"{p}: no such file")
    return load_region(*paths)


def write_features_csv(rows, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "zip", *FEATURE_NAMES, "target_kwh"])
        for st, feat in rows:
            w.writerow([st.id, st.zip, *(repr(float(v)) for v in feat.to_vector()), repr(float(feat.target_kwh))])


def read_features_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    X, y = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in (*FEATURE_NAMES, "target_kwh") if c not in (reader.fieldnames or ())]
        if missing:
            raise DataError(f"{path}: header lacks column(s) {', '.join(missing)}")
        for row in reader:
            try:
                X.append([float(row[c]) for c in FEATURE_NAMES])
                y.append(float(row["target_kwh"]))
            except (TypeError, ValueError):
                raise DataError(f"{path}:{reader.line_num}: bad numeric value") from None
    if not y:
        raise DataError(f"{path}: no feature rows")
    return np.array(X), np.array(y)


def _load_grid(cfg: RunConfig) -> DemandGrid:
    path = cfg.path("grid", "grid.json")
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    grid = DemandGrid.load_json(path)
    if not grid.normalized:
        grid = minmax_normalize(grid)
    return grid


def _progress(label: str, every: int):
    def report(episode, reward):
        if (episode + 1) % every == 0:
            logger.info("%s episode %d reward %.4f", label, episode + 1, reward)
    return report


# --- subcommands -----------------------------------------------------------

def cmd_features(cfg: RunConfig) -> None:
    region = _region(cfg)
    rows = station_training_rows(region, cfg.disaggregation)
    path = cfg.path("features", "features.csv")
    write_features_csv(rows, path)
    logger.info("wrote %d station rows to %s", len(rows), path)


def cmd_train_demand(cfg: RunConfig) -> None:
    X, y = read_features_csv(cfg.path("features", "features.csv"))
    columns = tuple(c.strip() for c in cfg.quantile_columns.split(",") if c.strip())
    unknown = [c for c in columns if c not in FEATURE_NAMES]
    if unknown:
        raise UsageError(f"unknown quantile column(s): {', '.join(unknown)}")
    idx = [FEATURE_NAMES.index(c) for c in columns]
    feature_t = quantile_fit(X[:, idx], cfg.n_quantiles) if columns else None
    target_t = quantile_fit(y[:, None], cfg.n_quantiles) if cfg.quantile_target else None
    model = DemandModel(None, columns, feature_t, target_t)
    Xs = model.prepare(X)
    ys = target_t.transform_column(y, 0) if target_t else y
    hp = cfg.gbrt()
    logger.info("cross-validating %d folds on %d rows", cfg.cv_folds, len(y))
    if not 2 <= cfg.cv_folds <= len(y):
        raise DataError(f"cannot run {cfg.cv_folds}-fold CV on {len(y)} rows")
    scores, mean = kfold_cv(Xs, ys, hp, cfg.cv_folds, subseed(cfg.seed, "shuffle"))
    logger.info("mean held-out R2 %.4f; fitting final model", mean)
    model.gbrt = gbrt_train(Xs, ys, hp)
    model.cv_scores = scores

    out = Path(cfg.out)
    _write_json(cfg.path("model", "demand_model.json"), model.to_dict())
    _write_json(out / "cv_report.json", {"folds": cfg.cv_folds, "rows": int(len(y)), "scores": scores,
                                         "mean_r2": mean, "hyperparams": asdict(hp)})
    with open(out / "importances.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "importance"])
        for name, value in zip(FEATURE_NAMES, model.gbrt.importances):
            w.writerow([name, repr(float(value))])


def _default_origin(region: RegionData) -> GeoPoint:
    # north-west corner of everything in the region
    points = [s.point for s in region.stations] + [r.point for r in region.roads] + [p.point for p in region.pois]
    if not points:
        raise DataError("region is empty; set origin_lat and origin_lon")
    return GeoPoint(max(p.lat for p in points), min(p.lon for p in points))


def cmd_grid(cfg: RunConfig) -> None:
    model = DemandModel.from_dict(_read_json(cfg.path("model", "demand_model.json")))
    region = _region(cfg)
    if (cfg.origin_lat is None) != (cfg.origin_lon is None):
        raise UsageError("origin_lat and origin_lon must be given together")
    origin = _default_origin(region) if cfg.origin_lat is None else GeoPoint(cfg.origin_lat, cfg.origin_lon)
    logger.info("predicting demand for %d cells", cfg.grid_n ** 2)
    grid = minmax_normalize(build_demand_grid(model, region, cfg.grid_n, cfg.cell_size, origin))
    path = cfg.path("grid", "grid.json")
    grid.save_json(path)
    path.with_suffix(".pgm").write_text(grid.to_pgm(), encoding="utf-8")


def cmd_train_dqn(cfg: RunConfig) -> None:
    grid = _load_grid(cfg)
    tc = cfg.training()
    net, log = train(grid, cfg.env(), tc, progress=_progress("train", 100))
    save_checkpoint(net, cfg.path("checkpoint", "checkpoint.json"), tc)
    log.to_csv(Path(cfg.out) / "episodes.csv")


def cmd_evaluate(cfg: RunConfig) -> None:
    grid = _load_grid(cfg)
    net = load_checkpoint(cfg.path("checkpoint", "checkpoint.json"))
    if net.n_actions != grid.n * grid.n:
        raise DataError(f"dimension mismatch: checkpoint has {net.n_actions} actions, "
                        f"grid has {grid.n * grid.n} cells")
    env = cfg.env()
    good = best_subset(grid, env, cfg.pool_size)[0] if grid.n * grid.n >= env.budget else float("nan")
    report = evaluate(net, grid, env, cfg.eval_episodes, cfg.seed, good=good)
    save_report(report, Path(cfg.out) / "eval_report.json")
    logger.info("agent %.4f random %.4f good %.4f", report.agent_mean_reward, report.random_mean_reward,
                report.good_reward)


def cmd_sweep(cfg: RunConfig) -> None:
    grid = _load_grid(cfg)
    try:
        values = [float(v) for v in cfg.sweep_values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad sweep_values {cfg.sweep_values!r}") from None
    try:
        rows = sweep(grid, cfg.env(), cfg.training(), cfg.sweep_parameter, values, cfg.eval_episodes,
                     progress=lambda row: logger.info("%s = %s done", row["parameter"], row["value"]))
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise UsageError(str(exc)) from None
    write_sweep_csv(rows, Path(cfg.out) / f"sweep_{cfg.sweep_parameter}.csv")


def cmd_oracle(cfg: RunConfig) -> None:
    grid = _load_grid(cfg)
    env = cfg.env()
    if grid.n * grid.n < env.budget:
        raise DataError(f"grid of {grid.n * grid.n} cells is smaller than the budget {env.budget}")
    value, cells = best_subset(grid, env, cfg.pool_size)
    _write_json(Path(cfg.out) / "oracle.json", {"good_reward": value, "cells": list(cells),
                                                "pool_size": cfg.pool_size, "budget": env.budget})


HANDLERS = {
    "features": cmd_features,
    "train-demand": cmd_train_demand,
    "grid": cmd_grid,
    "train-dqn": cmd_train_dqn,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
}


def run_subcommand(argv) -> int:
    """Run one subcommand; returns 0 on success, 1 on usage error, 2 on data error."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        return run_subcommand(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
