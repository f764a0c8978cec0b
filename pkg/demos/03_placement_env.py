"""Step through a placement episode by hand.

Shows how the reward splits into demand and coverage, what a repeated cell
costs, and how dynamic mode thins demand around each new charger.
"""

import numpy as np

from chargeplace.env import EnvConfig, reset, step
from chargeplace.synthetic import blob_grid

grid = blob_grid(26, seed=1)
peak = int(np.argmax(grid.demand))
n = grid.n

state, obs = reset(grid, EnvConfig())
print(f"start: demand gap {obs.demand_gap:.3f}, coverage gap {obs.coverage_gap:.1f}")

for action in (peak, peak + 1, peak + 5, peak):
    obs, reward, done, info = step(state, action)
    r, c = divmod(action, n)
    print(f"place ({r:2d},{c:2d}): reward {reward:+.3f} = demand {info['demand_component']:.3f}"
          f" + coverage {info['coverage_component']:.2f}{'  (repeat)' if info['repeat'] else ''}"
          f"  -> gaps {obs.demand_gap:.3f} / {obs.coverage_gap:.2f}")

# dynamic demand: each charger halves its own cell and thins its neighbourhood
state, _ = reset(grid, EnvConfig(dynamic=True))
before = state.grid.demand.copy()
step(state, peak)
r, c = divmod(peak, n)
window = np.s_[r - 2:r + 3, c - 2:c + 3]
print("\nremaining fraction of demand around the charger (dynamic mode):")
print(np.round(state.grid.demand[window] / before[window], 3))
