import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chargeplace.demand import DemandGrid
from chargeplace.env import (
    EnvConfig,
    coverage_gain,
    dynamic_decay,
    episode_return,
    placement_pgm,
    reset,
    step,
    write_trace,
)
from chargeplace.synthetic import blob_grid

from oracles import covered_cells, top_k_sum


def grid_of(values):
    return DemandGrid(np.asarray(values, dtype=float), normalized=True)


def zeros(n=26):
    return grid_of(np.zeros((n, n)))


def test_reset_on_zero_grid():
    _, obs = reset(zeros(), EnvConfig())
    assert obs == (0.0, 10.0)


def test_reset_demand_cap_is_top_budget_sum():
    v = np.zeros((26, 26))
    v.flat[np.arange(0, 676, 67)[:10]] = 1.0
    _, obs = reset(grid_of(v), EnvConfig())
    assert obs.demand_gap == 10.0


@pytest.mark.parametrize("seed", range(5))
def test_reset_demand_cap_matches_sort(seed):
    g = blob_grid(26, seed=seed)
    state, obs = reset(g, EnvConfig())
    assert obs.demand_gap == pytest.approx(top_k_sum(g.demand.ravel().tolist(), 10), rel=1e-12)
    assert state.steps == 0


def test_reset_rejects_unnormalized_grid():
    with pytest.raises(ValueError):
        reset(DemandGrid(np.ones((3, 3))), EnvConfig())


def test_coverage_interior_corner_and_repeat():
    state, _ = reset(zeros(10), EnvConfig())
    assert coverage_gain(state, 5 * 10 + 5, 2) == 25
    assert coverage_gain(state, 0, 2) == 9
    step(state, 55)
    assert coverage_gain(state, 55, 2) == 0
    with pytest.raises(IndexError):
        coverage_gain(state, 100, 2)


@given(st.sampled_from([5, 10, 26]), st.integers(0, 3), st.lists(st.integers(0, 10**6), min_size=1, max_size=10))
@settings(max_examples=100, deadline=None)
def test_coverage_matches_mask_union(n, r, raw):
    actions = [a % (n * n) for a in raw]
    cfg = EnvConfig(budget=len(actions), coverage_radius=r)
    state, _ = reset(zeros(n), cfg)
    total_gain = 0
    for a in actions:
        total_gain += coverage_gain(state, a)
        step(state, a)
    expected = covered_cells(n, actions, r)
    assert total_gain == len(expected)
    assert {tuple(c) for c in np.argwhere(state.covered)} == expected
    assert state.c_acc == pytest.approx(len(expected) / (2 * r + 1) ** 2, rel=1e-12)


def test_first_step_reward_by_hand():
    v = np.zeros((26, 26))
    v[10, 10] = 0.8
    state, _ = reset(grid_of(v), EnvConfig())
    obs, reward, done, info = step(state, 10 * 26 + 10)
    assert reward == pytest.approx(1.8)
    assert (info["demand_component"], info["coverage_component"]) == (0.8, 1.0)
    assert not done
    assert obs.coverage_gap == pytest.approx(9.0)


def test_immediate_repeat_is_penalized():
    v = np.zeros((26, 26))
    v[10, 10] = 0.8
    state, _ = reset(grid_of(v), EnvConfig())
    step(state, 270)
    obs_before = state.observation()
    obs, reward, _, info = step(state, 270)
    assert reward == -1.0
    assert info["repeat"]
    assert obs == obs_before


def test_spread_placements_on_zero_grid():
    cells = [r * 26 + c for r in (2, 7, 12, 17, 22) for c in (2, 12)]
    assert episode_return(zeros(), EnvConfig(), cells) == pytest.approx(10.0)


def test_step_after_done():
    state, _ = reset(zeros(4), EnvConfig(budget=1))
    _, _, done, _ = step(state, 0)
    assert done
    with pytest.raises(RuntimeError, match="episode finished"):
        step(state, 1)


@given(st.integers(0, 1000), st.lists(st.integers(0, 675), min_size=10, max_size=10),
       st.floats(0, 3), st.floats(0, 3), st.integers(0, 3))
@settings(max_examples=80, deadline=None)
def test_reward_decomposition_and_bounds(seed, actions, w_d, w_c, r):
    g = blob_grid(26, seed=seed)
    cfg = EnvConfig(w_d=w_d, w_c=w_c, coverage_radius=r, duplicate_penalty=0.7)
    state, obs = reset(g, cfg)
    seen = set()
    before = g.demand.copy()
    for a in actions:
        obs, reward, _, info = step(state, a)
        d, c = info["demand_component"], info["coverage_component"]
        assert 0 <= d <= 1 and 0 <= c <= 1
        expected = w_d * d + w_c * c - (0.7 if a in seen else 0.0)
        assert reward == pytest.approx(expected, abs=1e-12)
        assert obs.demand_gap >= 0 and obs.coverage_gap >= 0
        seen.add(a)
    assert np.array_equal(g.demand, before)
    assert state.d_acc <= state.d_max + 1e-12
    side2 = (2 * r + 1) ** 2
    assert state.c_acc * w_c == pytest.approx(w_c * len(covered_cells(26, actions, r)) / side2, abs=1e-12)


def test_step_is_deterministic():
    g = blob_grid(26, seed=3)
    runs = []
    for _ in range(2):
        state, _ = reset(g, EnvConfig())
        runs.append([step(state, a)[:2] for a in (5, 99, 5, 400, 675)])
    assert runs[0] == runs[1]


def test_dynamic_decay_by_hand():
    g = grid_of(np.full((7, 7), 10.0))
    dynamic_decay(g, 3 * 7 + 3, f=2, r_d=2)
    assert g.demand[3, 3] == 5.0
    assert g.demand[3, 5] == 7.5
    assert g.demand[1, 3] == 7.5
    assert g.demand[4, 4] == pytest.approx(10 * (1 - 1 / (math.sqrt(2) + 2)))
    assert g.demand[4, 4] == pytest.approx(7.071, abs=1e-3)
    assert g.demand[0, 0] == 10.0
    assert g.demand[3, 6] == 10.0


@given(st.integers(0, 200), st.lists(st.integers(0, 675), min_size=10, max_size=10))
@settings(max_examples=30, deadline=None)
def test_dynamic_mode_keeps_demand_positive_and_shrinking(seed, actions):
    base = blob_grid(26, seed=seed)
    base = grid_of(base.demand + 0.01)
    base.demand /= base.demand.max()
    cfg = EnvConfig(dynamic=True)
    state, _ = reset(base, cfg)
    prev = state.grid.demand.copy()
    for a in actions:
        step(state, a)
        cur = state.grid.demand
        assert np.all(cur > 0)
        assert np.all(cur <= prev)
        prev = cur.copy()


def test_dynamic_mode_uses_a_private_grid():
    base = blob_grid(8, seed=1)
    snapshot = base.demand.copy()
    state, _ = reset(base, EnvConfig(dynamic=True, budget=3))
    for a in (0, 9, 27):
        step(state, a)
    assert np.array_equal(base.demand, snapshot)
    assert not np.array_equal(state.grid.demand, snapshot)


def test_dynamic_reward_uses_pre_decay_demand():
    g = grid_of(np.full((5, 5), 0.5))
    state, _ = reset(g, EnvConfig(dynamic=True, coverage_radius=0, w_c=0))
    _, reward, _, _ = step(state, 12)
    assert reward == 0.5
    assert state.grid.demand[2, 2] == 0.25


def test_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(budget=0)
    with pytest.raises(ValueError):
        EnvConfig(f=1.0)
    with pytest.raises(ValueError):
        EnvConfig(w_d=-1)


def test_trace_and_placement_exports(tmp_path):
    g = blob_grid(4, seed=0)
    state, _ = reset(g, EnvConfig(budget=2))
    records = []
    for k, a in enumerate((0, 5)):
        _, r, done, info = step(state, a)
        records.append({"episode": 0, "step": k, "action": a, "reward": r, "done": done, **info})
    write_trace(records, tmp_path / "t.jsonl")
    lines = [json.loads(s) for s in (tmp_path / "t.jsonl").read_text().splitlines()]
    assert [r["action"] for r in lines] == [0, 5]
    assert set(lines[0]) == {"episode", "step", "action", "reward", "demand_component", "coverage_component", "done"}
    pgm = placement_pgm(g, state.placed).split("\n")
    assert pgm[:3] == ["P2", "4 4", "255"]
    assert pgm[3].split()[0] == "255" and pgm[4].split()[1] == "255"
