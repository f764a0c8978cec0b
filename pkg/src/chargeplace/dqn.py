"""Deep Q-learning for charger placement, in plain numpy.

The Q-network is a ReLU MLP mapping the two-value observation to one
Q-value per grid cell.  Training uses uniform experience replay, Boltzmann
exploration, a Polyak-averaged target network and Adam on the squared TD
error of the taken action.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from chargeplace.demand.grid import DemandGrid
from chargeplace.env import EnvConfig, reset, step
from chargeplace.errors import DataError
from chargeplace.seeding import rng_for, subseed

HIDDEN_SIZES = (300, 256)


class QNetwork:
    """ReLU hidden layers, linear output."""

    def __init__(self, layer_sizes, seed: int = 0):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ValueError(f"bad layer sizes {self.layer_sizes}")
        self.seed = seed
        self._allocate()
        rng = np.random.default_rng(seed)
        for w in self.weights:
            fan_in, fan_out = w.shape
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            w[...] = rng.uniform(-limit, limit, size=(fan_in, fan_out))

    def _allocate(self, flat=None):
        # every parameter is a view into one flat vector so optimizer and
        # target updates touch a single array
        shapes = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            shapes += [(fan_in, fan_out), (fan_out,)]
        total = sum(math.prod(sh) for sh in shapes)
        self.flat = np.zeros(total) if flat is None else flat
        self.weights, self.biases = [], []
        offset = 0
        for k, sh in enumerate(shapes):
            size = math.prod(sh)
            view = self.flat[offset:offset + size].reshape(sh)
            (self.weights if k % 2 == 0 else self.biases).append(view)
            offset += size

    @classmethod
    def for_grid(cls, n: int, seed: int = 0, hidden=HIDDEN_SIZES) -> "QNetwork":
        return cls((2, *hidden, n * n), seed=seed)

    @property
    def n_actions(self) -> int:
        return self.layer_sizes[-1]

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "QNetwork":
        other = QNetwork.__new__(QNetwork)
        other.layer_sizes = self.layer_sizes
        other.seed = self.seed
        other._allocate(self.flat.copy())
        return other

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.flat.sum())) and bool(np.all(np.isfinite(self.flat)))

    def forward(self, obs) -> np.ndarray:
        """Q-values for one observation (1-D result) or a batch (2-D result)."""
        return self._forward(obs)[0]

    def _forward(self, obs):
        x = np.asarray(obs, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"expected {self.layer_sizes[0]} inputs, got {x.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite observation")
        acts = [x]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            acts.append(z if k == last else np.maximum(z, 0.0))
        out = acts[-1]
        return (out[0] if single else out), acts

    def backward(self, acts, grad_out, out: np.ndarray | None = None) -> np.ndarray:
        """Flat parameter gradient (layout of ``self.flat``) given dLoss/dOutput."""
        grad = np.empty_like(self.flat) if out is None else out
        g = QNetwork.__new__(QNetwork)
        g.layer_sizes = self.layer_sizes
        g._allocate(grad)
        delta = grad_out
        for k in range(len(self.weights) - 1, -1, -1):
            np.matmul(acts[k].T, delta, out=g.weights[k])
            delta.sum(axis=0, out=g.biases[k])
            if k > 0:
                delta = (delta @ self.weights[k].T) * (acts[k] > 0)
        return grad

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QNetwork":
        net = cls.__new__(cls)
        net.layer_sizes = tuple(int(s) for s in d["layer_sizes"])
        net.seed = d.get("seed", 0)
        net._allocate()
        if len(d["weights"]) != len(net.weights) or len(d["biases"]) != len(net.biases):
            raise DataError("checkpoint has the wrong number of layers")
        for w, b, w_src, b_src in zip(net.weights, net.biases, d["weights"], d["biases"]):
            w_src = np.array(w_src, dtype=float)
            b_src = np.array(b_src, dtype=float)
            if w_src.size != w.size or b_src.size != b.size:
                raise DataError("checkpoint weights do not match layer sizes")
            w[...] = w_src.reshape(w.shape)
            b[...] = b_src
        if not net.is_finite():
            raise DataError("checkpoint contains non-finite parameters")
        return net


def forward(net: QNetwork, obs) -> np.ndarray:
    return net.forward(obs)


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None

    def update(self, params: np.ndarray, grads: np.ndarray) -> None:
        """In-place Adam step on a flat parameter vector."""
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
            self._tmp = np.empty_like(params)
        elif not hasattr(self, "_tmp"):
            self._tmp = np.empty_like(params)
        if self.m.shape != params.shape:
            raise ValueError("moment shapes do not match parameters")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        m, v, tmp = self.m, self.v, self._tmp
        m *= self.beta1
        np.multiply(grads, 1.0 - self.beta1, out=tmp)
        m += tmp
        v *= self.beta2
        np.multiply(grads, grads, out=tmp)
        tmp *= 1.0 - self.beta2
        v += tmp
        np.multiply(v, 1.0 / bc2, out=tmp)
        np.sqrt(tmp, out=tmp)
        tmp += self.eps
        np.divide(m, tmp, out=tmp)
        tmp *= self.lr / bc1
        params -= tmp


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions."""

    def __init__(self, capacity: int = 50_000, obs_dim: int = 2):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity, dtype=bool)
        self._next = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action, reward, next_obs, done) -> None:
        i = self._next
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = done
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def ordered(self) -> np.ndarray:
        """Slot indices from oldest to newest."""
        start = self._next if self.size == self.capacity else 0
        return (start + np.arange(self.size)) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator):
        if self.size == 0:
            raise ValueError("cannot sample an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx]


def softmax(q, temperature: float = 1.0) -> np.ndarray:
    z = np.asarray(q, dtype=float) / temperature
    z = np.exp(z - z.max())
    return z / z.sum()


def boltzmann_sample(q, temperature: float, rng: np.random.Generator) -> int:
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    p = softmax(q, temperature)
    cdf = np.cumsum(p)
    return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), len(p) - 1))


def td_loss_and_grads(net: QNetwork, target_net: QNetwork, batch, gamma: float):
    obs, actions, rewards, next_obs, dones = batch
    q_next = target_net.forward(next_obs)
    targets = rewards + gamma * np.where(dones, 0.0, q_next.max(axis=1))
    q, acts = net._forward(obs)
    rows = np.arange(len(actions))
    err = q[rows, actions] - targets
    loss = float(np.mean(err * err))
    grad_out = np.zeros_like(q)
    grad_out[rows, actions] = 2.0 * err / len(actions)
    return loss, net.backward(acts, grad_out)


def train_step(net: QNetwork, target_net: QNetwork, adam: AdamState, batch, gamma: float) -> float:
    """One Adam step on the mean squared TD error; returns the pre-update loss."""
    if len(batch[1]) == 0:
        raise ValueError("empty batch")
    loss, grads = td_loss_and_grads(net, target_net, batch, gamma)
    if not math.isfinite(loss):
        raise FloatingPointError("non-finite TD loss")
    adam.update(net.flat, grads)
    if not net.is_finite():
        raise FloatingPointError("non-finite network parameters after update")
    return loss


def soft_update(target_net: QNetwork, net: QNetwork, tau: float) -> None:
    if target_net.layer_sizes != net.layer_sizes:
        raise ValueError("network shapes differ")
    target_net.flat *= 1.0 - tau
    target_net.flat += tau * net.flat


@dataclass
class TrainConfig:
    episodes: int = 5000
    batch_size: int = 32
    gamma: float = 0.99
    tau: float = 0.01
    lr: float = 0.001
    temperature: float = 1.0
    warmup_steps: int = 1000
    memory_size: int = 50_000
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 0:
            raise ValueError("episodes must be nonnegative")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")


@dataclass
class EpisodeLog:
    rewards: list[float] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    window: int = 100

    @property
    def moving_average(self) -> list[float]:
        r = np.asarray(self.rewards, dtype=float)
        if r.size == 0:
            return []
        c = np.concatenate([[0.0], np.cumsum(r)])
        idx = np.arange(1, r.size + 1)
        lo = np.maximum(idx - self.window, 0)
        return ((c[idx] - c[lo]) / (idx - lo)).tolist()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["episode", "total_reward", f"moving_avg_{self.window}"])
            for k, (r, m) in enumerate(zip(self.rewards, self.moving_average)):
                w.writerow([k, repr(float(r)), repr(float(m))])


def train(grid: DemandGrid, env_cfg: EnvConfig | None = None, cfg: TrainConfig | None = None,
          net: QNetwork | None = None, progress=None) -> tuple[QNetwork, EpisodeLog]:
    """Run ``cfg.episodes`` placement episodes and learn from every step.

    After ``warmup_steps`` environment steps, each step does one batch update
    followed by a soft target update.  Network init, exploration and replay
    sampling draw from separate sub-seeds of ``cfg.seed``.
    """
    env_cfg = env_cfg or EnvConfig()
    cfg = cfg or TrainConfig()
    if net is None:
        net = QNetwork.for_grid(grid.n, seed=subseed(cfg.seed, "init"))
    if net.n_actions != grid.n * grid.n:
        raise DataError(f"network has {net.n_actions} outputs for a grid of {grid.n * grid.n} cells")
    target = net.copy()
    adam = AdamState(lr=cfg.lr)
    memory = ReplayBuffer(cfg.memory_size)
    policy_rng = rng_for(cfg.seed, "policy")
    replay_rng = rng_for(cfg.seed, "replay")
    log = EpisodeLog()

    total_steps = 0
    for episode in range(cfg.episodes):
        state, obs = reset(grid, env_cfg)
        obs = np.array(obs)
        ep_reward = 0.0
        done = False
        while not done:
            action = boltzmann_sample(net.forward(obs), cfg.temperature, policy_rng)
            next_obs, reward, done, _ = step(state, action)
            next_obs = np.array(next_obs)
            memory.push(obs, action, reward, next_obs, done)
            ep_reward += reward
            obs = next_obs
            total_steps += 1
            if total_steps > cfg.warmup_steps:
                loss = train_step(net, target, adam, memory.sample(cfg.batch_size, replay_rng), cfg.gamma)
                soft_update(target, net, cfg.tau)
                log.losses.append(loss)
        log.rewards.append(ep_reward)
        if progress is not None:
            progress(episode, ep_reward)
    return net, log


def greedy_episode(net: QNetwork, grid: DemandGrid, env_cfg: EnvConfig) -> tuple[float, list[int]]:
    state, obs = reset(grid, env_cfg)
    total, done = 0.0, False
    while not done:
        action = int(np.argmax(net.forward(np.array(obs))))
        obs, reward, done, _ = step(state, action)
        total += reward
    return total, list(state.placed)


def save_checkpoint(net: QNetwork, path, train_config: TrainConfig | None = None) -> None:
    d = net.to_dict()
    d["train_config"] = asdict(train_config) if train_config else None
    Path(path).write_text(json.dumps(d) + "\n", encoding="utf-8")


def load_checkpoint(path) -> QNetwork:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return QNetwork.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path}: not a network checkpoint ({exc})") from None
