import warnings

import numpy as np
import pytest

import oracles
from sesdemand.forecast import ForecastState, InfeasibleState
from sesdemand.inventory import (
    CostParams, InventoryState, PeriodRecord, ZeroDemandWindow, inventory_position, run_episodes, simulate, step,
    summarize,
)
from sesdemand.policy import FixedBaseStock, PolicySpec
from sesdemand.rng import Stream, child_keys, seed_key

COSTS = CostParams(1.0, 9.0)


def test_inventory_position_examples():
    assert inventory_position(InventoryState(5, 0, (2, 0))) == 7
    assert inventory_position(InventoryState(0, 4, (0, 0))) == -4
    assert inventory_position(InventoryState(0, 0, ())) == 0


@pytest.mark.parametrize("start,d,expect", [
    ((5, 0), 4, (3, 0, 4, 3.0)),
    ((5, 0), 10, (0, 3, 7, 27.0)),
])
def test_step_examples(start, d, expect):
    new, rec = step(InventoryState(*start, (2,)), 0, d, COSTS)
    assert (new.on_hand, new.backorders, rec.satisfied, rec.cost) == expect


def test_step_backorders_cleared_first():
    new, rec = step(InventoryState(0, 2, (5,)), 1, 1, CostParams(1.0, 9.0))
    assert (new.on_hand, new.backorders, rec.satisfied, rec.cost) == (2, 0, 1, 2.0)
    assert new.pipeline == (1,) and new.on_hand * new.backorders == 0


def test_step_zero_lead_time_receives_own_order():
    new, rec = step(InventoryState(0, 0, ()), 4, 3, COSTS)
    assert rec.arrival == 4 and new.on_hand == 1


def test_deterministic_episode_by_hand():
    init = ForecastState.create(3, 0, 0.1)
    records, metrics = simulate(FixedBaseStock(6), init, COSTS, 1, 12, 4, 0)
    hand = oracles.hand_episode(6, 3, 1, 12, 1.0, 9.0)
    assert [(r.t, r.demand, r.satisfied, r.order, r.on_hand, r.backorders, r.cost, r.stockout) for r in records] == hand
    assert len({r.on_hand for r in records[4:]}) == 1
    assert metrics.fill_rate == 1.0 and metrics.in_stock == 1.0


def test_summarize_examples():
    rec = lambda d, s: PeriodRecord(1, d, s, 0, 0, d - s, 0.0, s < d)
    assert summarize([rec(3, 3), rec(2, 2)], 0).fill_rate == 1.0
    assert summarize([rec(10, 7)], 0).fill_rate == pytest.approx(0.7)
    m = summarize([rec(10, 7), rec(0, 0)], 0)
    assert m.fill_rate == pytest.approx(0.7) and m.in_stock == 0.5
    with pytest.raises(ValueError):
        summarize([rec(1, 1)], 1)


def test_zero_demand_window_flag():
    init = ForecastState.create(0, 0, 0.1)
    with pytest.warns(ZeroDemandWindow):
        _, m = simulate(FixedBaseStock(2), init, COSTS, 1, 10, 2, 0)
    assert m.fill_rate == 1.0 and m.zero_demand_window


@pytest.mark.parametrize("method,recompute", [("s1a", "every_period"), ("s1b", "every_period"),
                                               ("s2", "every_period"), ("s2", "once")])
@pytest.mark.parametrize("lead", [0, 2])
def test_reference_equals_kernel(method, recompute, lead):
    init = ForecastState.create(2, 9, 0.1)
    spec = PolicySpec(method, COSTS.target_p1, lead + 1, 60, recompute)
    keys = child_keys(seed_key(3), 5)
    warm = 2 * (lead + 1)
    batches = [run_episodes(spec, init, COSTS, lead, 30, warm, keys, record=True, backend=b) for b in ("numba", "numpy")]
    assert np.array_equal(batches[0].metrics, batches[1].metrics)
    assert np.array_equal(batches[0].records, batches[1].records)
    for r in range(5):
        records, m = simulate(spec, init, COSTS, lead, 30, warm, Stream(int(keys[r])))
        row = batches[0].metrics[r]
        assert (row[0], row[1], row[2], row[3]) == (m.avg_cost, m.fill_rate, m.in_stock, m.avg_on_hand)
        rec = batches[0].records[r]
        ours = np.array([[x.demand, x.satisfied, x.order, x.on_hand, x.backorders, x.arrival, x.stockout, x.cost]
                         for x in records], dtype=float)
        assert np.array_equal(rec, ours)


def test_identities_and_bounds():
    init = ForecastState.create(2, 4, 0.05)
    spec = PolicySpec("s1b", 0.9, 3)
    b = run_episodes(spec, init, COSTS, 2, 100, 6, child_keys(seed_key(1), 200), record=True)
    d, ds, q, on, back, arr, so, cost = np.moveaxis(b.records, 2, 0)
    prev_on = np.concatenate([np.zeros((200, 1)), on[:, :-1]], axis=1)
    prev_b = np.concatenate([np.zeros((200, 1)), back[:, :-1]], axis=1)
    assert np.array_equal(on - back, prev_on - prev_b + arr - d)
    assert not (on * back).any()
    assert np.array_equal(ds, np.maximum(0, np.minimum(prev_on + arr - prev_b, d)))
    m = b.summary()
    assert 0 <= m.fill_rate <= 1 and 0 <= m.in_stock <= 1 and m.avg_on_hand >= 0


def test_higher_level_never_serves_less():
    init = ForecastState.create(2, 9, 0.1)
    keys = child_keys(seed_key(2), 50)
    low = run_episodes(FixedBaseStock(5), init, COSTS, 1, 60, 4, keys, record=True).records
    high = run_episodes(FixedBaseStock(8), init, COSTS, 1, 60, 4, keys, record=True).records
    assert np.array_equal(low[..., 0], high[..., 0])
    assert (high[..., 1] >= low[..., 1]).all()


def test_same_seed_same_records():
    init = ForecastState.create(2, 4, 0.1)
    spec = PolicySpec("s2", 0.9, 2, 40)
    a, _ = simulate(spec, init, COSTS, 1, 20, 4, 5)
    b, _ = simulate(spec, init, COSTS, 1, 20, 4, 5)
    assert a == b


def test_infeasible_episode_flagged():
    init = ForecastState.create(0.25, 0.1875, 0.05, 0.2)
    b = run_episodes(PolicySpec("s1a", 0.9, 2), init, COSTS, 1, 50, 4, child_keys(seed_key(0), 50))
    assert b.failed.any() and np.isnan(b.metrics[b.failed, 0]).all()
    with pytest.raises(InfeasibleState):
        b.summary()


def test_validation():
    with pytest.raises(ValueError):
        CostParams(0, 1)
    with pytest.raises(ValueError):
        InventoryState(-1, 0, ())
    with pytest.raises(ValueError):
        simulate(FixedBaseStock(1), ForecastState.create(1, 1, 0.1), COSTS, 1, 4, 4, 0)
