"""The two yardsticks for a placement agent.

The random baseline averages uniformly random episodes.  The best subset
searches every 10-cell combination of the 30 highest-demand cells, which
beats simply taking the top 10 because their coverage squares overlap.
"""

import time

from chargeplace.env import EnvConfig
from chargeplace.evaluation import best_subset, candidate_pool, random_baseline, subset_reward
from chargeplace.synthetic import blob_grid

grid = blob_grid(26, seed=0)
cfg = EnvConfig()

print(f"random placements, 200 episodes: {random_baseline(grid, cfg, 200):.3f}")
top10 = candidate_pool(grid, 10).tolist()
print(f"top-10 demand cells:              {subset_reward(grid, cfg, top10):.3f}")

start = time.perf_counter()
value, cells = best_subset(grid, cfg)
print(f"best 10 of the top 30:            {value:.3f}  ({time.perf_counter() - start:.1f}s)")
print("cells (row, col):", sorted(divmod(c, grid.n) for c in cells))
