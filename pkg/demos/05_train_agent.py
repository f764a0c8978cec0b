"""Train the DQN placement agent and compare it with both yardsticks.

EPISODES is kept small so the script runs in about a minute; the full
schedule is 5,000 episodes.
"""

import sys

import numpy as np

from chargeplace.dqn import TrainConfig, greedy_episode, train
from chargeplace.env import EnvConfig
from chargeplace.evaluation import evaluate
from chargeplace.synthetic import blob_grid

EPISODES = int(sys.argv[1]) if len(sys.argv) > 1 else 500

grid = blob_grid(26, seed=0)
env = EnvConfig()


def progress(episode, reward):
    if (episode + 1) % 100 == 0:
        print(f"  episode {episode + 1:5d}  reward {reward:+.3f}", file=sys.stderr)


net, log = train(grid, env, TrainConfig(episodes=EPISODES, seed=0), progress=progress)
print(f"first 100 episodes averaged {np.mean(log.rewards[:100]):.3f}; last 100 averaged {log.moving_average[-1]:.3f}")

total, placed = greedy_episode(net, grid, env)
print(f"greedy episode reward {total:.3f}, cells {[divmod(c, grid.n) for c in placed]}")

report = evaluate(net, grid, env, episodes=200, seed=0)
print(report.to_json())
