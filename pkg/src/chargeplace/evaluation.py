"""Benchmarks for a placement agent: random placements and the best top-demand subset."""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from chargeplace.demand.grid import DemandGrid
from chargeplace.dqn import QNetwork, TrainConfig, boltzmann_sample, greedy_episode, train
from chargeplace.env import EnvConfig, reset, step
from chargeplace.errors import DataError

DEFAULT_POOL = 30
# C(30, 10) is about 3.0e7; anything bigger falls back to local search
DEFAULT_MAX_SUBSETS = 50_000_000


def random_baseline(grid: DemandGrid, cfg: EnvConfig, episodes: int = 200, seed: int = 0) -> float:
    """Mean episode reward of uniformly random placements under ``cfg``."""
    if episodes < 1:
        raise ValueError("episodes must be positive")
    rng = np.random.default_rng(seed)
    n_cells = grid.n * grid.n
    totals = []
    for _ in range(episodes):
        state, _ = reset(grid, cfg)
        total = 0.0
        for a in rng.integers(0, n_cells, size=cfg.budget):
            total += step(state, a)[1]
        totals.append(total)
    return float(np.mean(totals))


def candidate_pool(grid: DemandGrid, size: int = DEFAULT_POOL) -> np.ndarray:
    """The ``size`` highest-demand cells, ties by ascending cell index."""
    flat = grid.demand.ravel()
    order = np.lexsort((np.arange(flat.size), -flat))
    return order[:size]


def coverage_mask(n: int, cell: int, r: int) -> int:
    """Bitmask (bit ``k`` = cell ``k``) of the clipped square around ``cell``."""
    row, col = divmod(int(cell), n)
    mask = 0
    for i in range(max(row - r, 0), min(row + r + 1, n)):
        lo, hi = max(col - r, 0), min(col + r + 1, n)
        mask |= ((1 << (hi - lo)) - 1) << (i * n + lo)
    return mask


def subset_reward(grid: DemandGrid, cfg: EnvConfig, cells) -> float:
    """Episode reward of placing once on each of ``cells`` (order-free)."""
    side = 2 * cfg.coverage_radius + 1
    covered = 0
    for c in cells:
        covered |= coverage_mask(grid.n, c, cfg.coverage_radius)
    demand = math.fsum(float(grid.demand.flat[c]) for c in cells)
    return cfg.w_d * demand + cfg.w_c * covered.bit_count() / (side * side)


def _enumerate(demand: list[float], masks: list[int], k: int, w_d: float, w_cov: float):
    """Exhaustive search over k-subsets with running demand sums and mask unions."""
    m = len(demand)
    best = [-math.inf, ()]

    def dfs(start, depth, dsum, union, chosen):
        if depth == k - 1:
            for j in range(start, m):
                val = w_d * (dsum + demand[j]) + w_cov * (union | masks[j]).bit_count()
                if val > best[0]:
                    best[0] = val
                    best[1] = (*chosen, j)
            return
        for j in range(start, m - (k - 1 - depth)):
            dfs(j + 1, depth + 1, dsum + demand[j], union | masks[j], (*chosen, j))

    dfs(0, 0, 0.0, 0, ())
    return best[1]


def _local_search(demand: list[float], masks: list[int], k: int, w_d: float, w_cov: float):
    """Greedy build followed by single-swap improvement until no swap helps."""

    def value(sel):
        u = 0
        for j in sel:
            u |= masks[j]
        return w_d * sum(demand[j] for j in sel) + w_cov * u.bit_count()

    chosen: list[int] = []
    for _ in range(k):
        rest = [j for j in range(len(demand)) if j not in chosen]
        chosen.append(max(rest, key=lambda j: (value(chosen + [j]), -j)))
    current = value(chosen)
    improved = True
    while improved:
        improved = False
        for pos in range(k):
            for j in range(len(demand)):
                if j in chosen:
                    continue
                trial = chosen[:pos] + [j] + chosen[pos + 1:]
                v = value(trial)
                if v > current + 1e-12:
                    chosen, current, improved = trial, v, True
    return tuple(sorted(chosen))


def best_subset(grid: DemandGrid, cfg: EnvConfig, pool_size: int = DEFAULT_POOL,
                max_subsets: int = DEFAULT_MAX_SUBSETS) -> tuple[float, tuple[int, ...]]:
    """Best ``cfg.budget`` cells among the top-demand pool, with their reward.

    Exhaustive when the subset count is at most ``max_subsets``, otherwise a
    greedy-plus-swap heuristic.  Demand is taken from the grid as given (no
    decay), since a set of distinct cells collects each demand once.
    """
    pool = candidate_pool(grid, pool_size)
    k = cfg.budget
    if len(pool) < k:
        raise ValueError(f"candidate pool of {len(pool)} cells is smaller than the budget {k}")
    side = 2 * cfg.coverage_radius + 1
    demand = [float(grid.demand.flat[c]) for c in pool]
    masks = [coverage_mask(grid.n, c, cfg.coverage_radius) for c in pool]
    w_cov = cfg.w_c / (side * side)
    if math.comb(len(pool), k) <= max_subsets:
        picked = _enumerate(demand, masks, k, cfg.w_d, w_cov)
    else:
        picked = _local_search(demand, masks, k, cfg.w_d, w_cov)
    cells = tuple(int(pool[j]) for j in picked)
    return subset_reward(grid, cfg, cells), cells


def good_reward(grid: DemandGrid, cfg: EnvConfig, pool_size: int = DEFAULT_POOL,
                max_subsets: int = DEFAULT_MAX_SUBSETS) -> float:
    return best_subset(grid, cfg, pool_size, max_subsets)[0]


def naive_good_reward(grid: DemandGrid, cfg: EnvConfig, pool_size: int = DEFAULT_POOL) -> float:
    """Slow reference: every subset scored from explicit boolean coverage rasters."""
    pool = candidate_pool(grid, pool_size)
    n, r = grid.n, cfg.coverage_radius
    side = 2 * r + 1
    best = -math.inf
    for cells in itertools.combinations(pool.tolist(), cfg.budget):
        covered = np.zeros((n, n), dtype=bool)
        for c in cells:
            i, j = divmod(c, n)
            covered[max(i - r, 0):i + r + 1, max(j - r, 0):j + r + 1] = True
        demand = math.fsum(float(grid.demand.flat[c]) for c in cells)
        best = max(best, cfg.w_d * demand + cfg.w_c * int(covered.sum()) / (side * side))
    return best


@dataclass
class EvalReport:
    agent_mean_reward: float
    random_mean_reward: float
    good_reward: float
    ratio_vs_random: float | None
    ratio_vs_good: float | None
    episodes_evaluated: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def _sampled_episode(net: QNetwork, grid: DemandGrid, cfg: EnvConfig, temperature: float, rng) -> float:
    state, obs = reset(grid, cfg)
    total, done = 0.0, False
    while not done:
        obs, reward, done, _ = step(state, boltzmann_sample(net.forward(np.array(obs)), temperature, rng))
        total += reward
    return total


def evaluate(agent: QNetwork, grid: DemandGrid, cfg: EnvConfig, episodes: int = 200, seed: int = 0,
             good: float | None = None, temperature: float | None = None) -> EvalReport:
    """Agent mean reward against the random and best-subset benchmarks.

    The agent acts greedily unless ``temperature`` is given, in which case it
    samples from its Boltzmann policy.  A ratio is ``None`` when its
    benchmark is not positive.
    """
    if agent.n_actions != grid.n * grid.n:
        raise DataError(
            f"dimension mismatch: network has {agent.n_actions} actions, grid has {grid.n * grid.n} cells"
        )
    if episodes < 1:
        raise ValueError("episodes must be positive")
    if temperature is None:
        totals = [greedy_episode(agent, grid, cfg)[0] for _ in range(episodes)]
    else:
        rng = np.random.default_rng([seed, 1])
        totals = [_sampled_episode(agent, grid, cfg, temperature, rng) for _ in range(episodes)]
    agent_mean = float(np.mean(totals))
    random_mean = random_baseline(grid, cfg, episodes, seed)
    if good is None:
        good = good_reward(grid, cfg) if grid.n * grid.n >= cfg.budget else math.nan
    return EvalReport(
        agent_mean_reward=agent_mean,
        random_mean_reward=random_mean,
        good_reward=float(good),
        ratio_vs_random=_ratio(agent_mean, random_mean),
        ratio_vs_good=_ratio(agent_mean, good),
        episodes_evaluated=episodes,
        seed=seed,
    )


SWEEP_PARAMETERS = ("coverage_radius", "w_c", "w_d")


def sweep(grid: DemandGrid, base: EnvConfig, train_cfg: TrainConfig, parameter: str, values,
          eval_episodes: int = 200, progress=None) -> list[dict]:
    """Train and evaluate one agent per value of an environment parameter."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {parameter!r}; choose from {', '.join(SWEEP_PARAMETERS)}")
    rows = []
    for v in values:
        v = int(v) if parameter == "coverage_radius" else float(v)
        cfg = replace(base, **{parameter: v})
        net, _ = train(grid, cfg, train_cfg)
        report = evaluate(net, grid, cfg, eval_episodes, train_cfg.seed)
        rows.append({"parameter": parameter, "value": v, "ratio_vs_good": report.ratio_vs_good,
                     "ratio_vs_random": report.ratio_vs_random})
        if progress is not None:
            progress(rows[-1])
    return rows


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", "ratio_vs_good", "ratio_vs_random"])
        for row in rows:
            w.writerow([row["parameter"], row["value"],
                        "" if row["ratio_vs_good"] is None else repr(row["ratio_vs_good"]),
                        "" if row["ratio_vs_random"] is None else repr(row["ratio_vs_random"])])


def save_report(report: EvalReport, path) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8")
