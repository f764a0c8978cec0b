"""Charger placement as an episodic MDP over a normalized demand grid.

Each action places one charger in a cell (row-major index).  A placement
earns the cell's demand the first time that cell is chosen plus the fraction
of its (2r+1) x (2r+1) coverage square that was not yet covered.  Placing on
an already used cell earns nothing and costs ``duplicate_penalty``.

The agent only sees two numbers: how far the collected demand is from the
best attainable total, and how far the accumulated coverage is from its cap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from chargeplace.demand.grid import DemandGrid, minmax_normalize, pgm_text


@dataclass
class EnvConfig:
    budget: int = 10
    coverage_radius: int = 2
    w_d: float = 1.0
    w_c: float = 1.0
    dynamic: bool = False
    f: float = 2.0
    r_d: int = 2
    # guessed magnitude; repeats must cost something for early episodes to go negative
    duplicate_penalty: float = 1.0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.coverage_radius < 0 or self.r_d < 0:
            raise ValueError("radii must be nonnegative")
        if self.w_d < 0 or self.w_c < 0:
            raise ValueError("reward weights must be nonnegative")
        if not self.f > 1:
            raise ValueError("decay parameter f must exceed 1")


class Observation(NamedTuple):
    demand_gap: float
    coverage_gap: float


@dataclass
class PlacementState:
    grid: DemandGrid
    cfg: EnvConfig
    d_max: float
    c_max: float
    covered: np.ndarray
    collected: np.ndarray
    placed: list[int] = field(default_factory=list)
    d_acc: float = 0.0
    c_acc: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.placed)

    @property
    def done(self) -> bool:
        return self.steps >= self.cfg.budget

    def observation(self) -> Observation:
        return Observation(max(self.d_max - self.d_acc, 0.0), max(self.c_max - self.c_acc, 0.0))


def _square(n: int, row: int, col: int, r: int) -> tuple[slice, slice]:
    return slice(max(row - r, 0), min(row + r + 1, n)), slice(max(col - r, 0), min(col + r + 1, n))


def max_demand(demand: np.ndarray, budget: int) -> float:
    """Sum of the ``budget`` largest cell demands."""
    flat = np.sort(demand.ravel())[::-1]
    return float(flat[:budget].sum())


def reset(grid: DemandGrid, cfg: EnvConfig | None = None, seed: int | None = None) -> tuple[PlacementState, Observation]:
    """Start an episode.  ``seed`` is accepted for interface symmetry; the
    environment itself has no randomness."""
    cfg = cfg or EnvConfig()
    if not grid.normalized:
        raise ValueError("environment expects a min-max normalized grid")
    g = grid.copy() if cfg.dynamic else grid
    n = grid.n
    state = PlacementState(
        grid=g,
        cfg=cfg,
        d_max=max_demand(grid.demand, cfg.budget),
        c_max=float(cfg.budget),
        covered=np.zeros((n, n), dtype=bool),
        collected=np.zeros((n, n), dtype=bool),
    )
    return state, state.observation()


def coverage_gain(state: PlacementState, cell: int, r: int | None = None) -> int:
    """Cells in the grid-clipped square around ``cell`` not yet covered."""
    n = state.grid.n
    if not 0 <= cell < n * n:
        raise IndexError(f"cell {cell} outside grid of {n * n} cells")
    r = state.cfg.coverage_radius if r is None else r
    rows, cols = _square(n, *divmod(int(cell), n), r)
    return int(np.count_nonzero(~state.covered[rows, cols]))


def step(state: PlacementState, action: int) -> tuple[Observation, float, bool, dict]:
    """Place a charger at ``action``; returns (observation, reward, done, info).

    ``info`` carries the demand and coverage components and whether the
    action repeated an earlier placement.
    """
    if state.done:
        raise RuntimeError("episode finished")
    cfg = state.cfg
    n = state.grid.n
    action = int(action)
    if not 0 <= action < n * n:
        raise IndexError(f"action {action} outside grid of {n * n} cells")
    row, col = divmod(action, n)

    repeat = action in state.placed
    demand = 0.0 if state.collected[row, col] else float(state.grid.demand[row, col])
    side = 2 * cfg.coverage_radius + 1
    rows, cols = _square(n, row, col, cfg.coverage_radius)
    gain = int(np.count_nonzero(~state.covered[rows, cols]))
    coverage = gain / (side * side)

    reward = cfg.w_d * demand + cfg.w_c * coverage
    if repeat:
        reward -= cfg.duplicate_penalty

    state.collected[row, col] = True
    state.covered[rows, cols] = True
    state.placed.append(action)
    state.d_acc += demand
    state.c_acc += coverage
    if cfg.dynamic:
        dynamic_decay(state.grid, action, cfg.f, cfg.r_d)

    info = {"demand_component": demand, "coverage_component": coverage, "repeat": repeat}
    return state.observation(), float(reward), state.done, info


def dynamic_decay(grid: DemandGrid, center: int, f: float = 2.0, r_d: int = 2) -> DemandGrid:
    """Scale demand near ``center`` by ``1 - 1/(dist + f)``, in place.

    ``dist`` is the Euclidean distance between cell centres in cell units,
    over the grid-clipped (2 r_d + 1) square.
    """
    if not f > 1:
        raise ValueError("f must exceed 1")
    n = grid.n
    row, col = divmod(int(center), n)
    rows, cols = _square(n, row, col, r_d)
    di = np.arange(rows.start, rows.stop)[:, None] - row
    dj = np.arange(cols.start, cols.stop)[None, :] - col
    dist = np.sqrt(di * di + dj * dj)
    grid.demand[rows, cols] *= 1.0 - 1.0 / (dist + f)
    return grid


def episode_return(grid: DemandGrid, cfg: EnvConfig, actions) -> float:
    """Total reward of playing ``actions`` from a fresh episode."""
    state, _ = reset(grid, cfg)
    total = 0.0
    for a in actions:
        _, r, _, _ = step(state, a)
        total += r
    return total


def write_trace(records, path) -> None:
    """JSON-lines episode trace, one record per step."""
    keys = ("episode", "step", "action", "reward", "demand_component", "coverage_component", "done")
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({k: rec[k] for k in keys}) + "\n")


def placement_pgm(grid: DemandGrid, placed) -> str:
    """Demand heatmap with placed cells drawn at full intensity."""
    values = grid.demand if grid.normalized else minmax_normalize(grid).demand
    pixels = np.rint(200 * values).astype(int)
    for a in placed:
        r, c = divmod(int(a), grid.n)
        pixels[r, c] = 255
    return pgm_text(pixels)
