import itertools
import json

import pytest

from systolic_cost import optimizer as opt
from systolic_cost.arch import BLOCKS
from systolic_cost.dual import DiffScalar
from systolic_cost.hardware import network_cost
from systolic_cost.optimizer import (ChannelSearchSpace, OptimConfig, OptimizationError, SearchCapExceeded,
                                     exhaustive_search, hard_loss, optimize_channels, project, score_operators,
                                     starting_points)
from systolic_cost.smooth import HardwareLossParams

HW_LOSS = HardwareLossParams(1.0, 1.0)


def brute_loss(spec, widths, hl=HW_LOSS):
    cost = network_cost(spec.with_widths(list(widths)))
    return hl.lam * cost.total_cycles / 1e9 * 1e3 - hl.beta * float(cost.network_utilization)


def test_search_space():
    space = ChannelSearchSpace()
    assert space.grid[0] == 64 and space.grid[-1] == 280 and len(space.grid) == 28
    assert space.neighbours(130.5) == (128, 136)
    assert space.neighbours(128.0) == (128,)
    assert space.neighbours(10.0) == (64,)
    assert space.neighbours(999.0) == (280,)
    assert ChannelSearchSpace(64, 100, 8).top == 96
    with pytest.raises(ValueError):
        ChannelSearchSpace(100, 64, 8)


@pytest.mark.parametrize("kw", [{"lr": 0.0}, {"max_iter": 0}, {"restarts": 0}, {"momentum": 1.0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OptimConfig(**kw)


def test_starting_points_are_on_grid_and_seeded(load):
    spec = load("conv3.yaml")
    space = ChannelSearchSpace()
    a = starting_points(spec, space, seed=3, restarts=8)
    assert a == starting_points(spec, space, seed=3, restarts=8)
    assert len(a) == 8 and all(len(s) == 3 and set(s) <= set(space.grid) for s in a)
    # the non-midpoint starts visit every stratum once per width
    for t in range(3):
        strata = sorted(space.grid.index(s[t]) * 7 // 28 for s in a[1:])
        assert strata == list(range(7))
    assert starting_points(spec, space, 0, 1, jitter=False) == [[176, 176, 176]]


def test_projection_picks_best_neighbour(load):
    spec = load("conv2.yaml")
    space = ChannelSearchSpace()
    x = [131.0, 250.5]
    widths, loss, cost = project(spec, x, opt.DEFAULT_HW, space, HW_LOSS)
    candidates = list(itertools.product((128, 136), (248, 256)))
    assert widths in candidates
    assert loss == pytest.approx(min(brute_loss(spec, c) for c in candidates))
    assert cost.total_cycles == network_cost(spec.with_widths(list(widths))).total_cycles


def test_latency_only_shrinks_widths(load):
    spec = load("conv2.yaml")
    res = optimize_channels(spec, cfg=OptimConfig(hl=HardwareLossParams(1000.0, 0.0)))
    assert res.projected == (64, 64)


def test_utilization_only_finds_aligned_width(load):
    spec = load("pointwise1.yaml")
    for seed in range(3):
        res = optimize_channels(spec, cfg=OptimConfig(seed=seed, hl=HardwareLossParams(0.0, 1.0)))
        assert res.projected[0] in (128, 256)
        assert float(res.final_cost.network_utilization) == pytest.approx(1.0)


def test_trajectory_loss_never_increases(load):
    spec = load("conv2.yaml")
    res = optimize_channels(spec, cfg=OptimConfig(seed=4))
    losses = [s.loss for s in res.trajectory]
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    assert res.stop_reason in ("lr_backoff", "max_iter", "converged")
    assert all(64 <= w <= 280 for s in res.trajectory for w in s.widths)


def test_utilization_improves_over_start(load):
    spec = load("conv2.yaml")
    seeds = range(20)
    results = [optimize_channels(spec, cfg=OptimConfig(seed=s)) for s in seeds]
    better = sum(r.final_cost.network_utilization >= r.initial_cost.network_utilization for r in results)
    assert better >= 0.95 * len(seeds)


def test_latency_weight_trades_runtime(load):
    spec = load("conv2.yaml")
    slow = optimize_channels(spec, cfg=OptimConfig(hl=HardwareLossParams(0.1, 1.0)))
    fast = optimize_channels(spec, cfg=OptimConfig(hl=HardwareLossParams(5.0, 1.0)))
    assert fast.final_cost.total_cycles <= slow.final_cost.total_cycles


def test_result_dict_is_json(load):
    res = optimize_channels(load("pointwise1.yaml"), cfg=OptimConfig(restarts=2, max_iter=20))
    doc = json.loads(json.dumps(res.to_dict()))
    assert doc["final_channels"] == list(res.projected)
    assert doc["final_hard_loss"] == pytest.approx(hard_loss(res.final_cost))
    assert len(doc["trajectory"]) == len(res.trajectory)


def test_rejects_flat_networks(load):
    with pytest.raises(ValueError):
        optimize_channels(load("flat.yaml"))


def test_non_finite_loss_raises(load, monkeypatch):
    monkeypatch.setattr(opt, "hardware_loss", lambda *a, **k: DiffScalar(float("nan"), {"cell0": 1.0}))
    with pytest.raises(OptimizationError) as err:
        optimize_channels(load("pointwise1.yaml"))
    assert err.value.iteration == 0


def test_exhaustive_matches_brute_force(load):
    spec = load("pointwise1.yaml")
    widths, loss, _ = exhaustive_search(spec)
    table = {(c,): brute_loss(spec, (c,)) for c in range(64, 281, 8)}
    assert len(table) == 28
    assert loss == pytest.approx(min(table.values()))
    assert table[widths] == pytest.approx(loss)


def test_exhaustive_degenerate_grid_and_cap(load):
    spec = load("conv2.yaml")
    widths, _, _ = exhaustive_search(spec, space=ChannelSearchSpace(128, 128, 8))
    assert widths == (128, 128)
    with pytest.raises(SearchCapExceeded):
        exhaustive_search(spec, cap=100)


def test_operator_scores(load):
    ranking = dict(score_operators(load("conv2.yaml").cell))
    assert set(ranking) == {(0, 2), (1, 2), (2, 3)}
    order = [s.op for s in ranking[(0, 2)]]
    assert set(order) == set(BLOCKS)
    assert order.index("conv2d_3x3") < order.index("dws_3x3")
    scores = {s.op: s for s in ranking[(0, 2)]}
    assert scores["identity"].loss == pytest.approx(-1.0)
    assert scores["zero"].runtime_cycles == 0


def test_operator_ranking_scale_invariant(load):
    cell = load("conv2.yaml").cell
    a = score_operators(cell, hl=HardwareLossParams(1.0, 2.0))
    b = score_operators(cell, hl=HardwareLossParams(3.0, 6.0))
    assert [s.op for s in a[0][1]] == [s.op for s in b[0][1]]
