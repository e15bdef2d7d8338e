"""Periodic-review inventory with full backlogging and a fixed lead time.

Within a period: place the order, receive the order placed ``l`` periods ago,
serve backorders then new demand, pay holding or backorder cost, update the
forecast.  An order placed in period ``t`` arrives in period ``t + l``, so
``L = l + 1`` periods of demand are exposed.

:func:`simulate` is the readable single-episode reference.  :func:`run_episodes`
runs many episodes through the compiled (or vectorised) kernel and returns
identical numbers.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import _kernels, engine
from .forecast import ForecastState, InfeasibleState, ses_update
from .dgp import next_demand
from .policy import FixedBaseStock, Method, PolicySpec, empirical_base_stock, graves_base_stock, graves_factor
from .rng import Stream, as_stream, derive

RECORD_CSV_HEADER = ("rep_id", "t", "d", "d_s", "q", "I", "b", "cost", "stockout")


class ZeroDemandWindow(UserWarning):
    """No demand fell in the measured window; the fill rate is reported as 1."""


@dataclass(frozen=True)
class InventoryState:
    on_hand: int = 0
    backorders: int = 0
    pipeline: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pipeline", tuple(int(q) for q in self.pipeline))
        if self.on_hand < 0 or self.backorders < 0 or any(q < 0 for q in self.pipeline):
            raise ValueError("stock, backorders and pipeline orders must be non-negative")

    @classmethod
    def empty(cls, lead_time: int) -> InventoryState:
        return cls(0, 0, (0,) * lead_time)


@dataclass(frozen=True)
class CostParams:
    h: float
    p: float

    def __post_init__(self):
        for name in ("h", "p"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")

    @property
    def target_p1(self) -> float:
        """Newsvendor in-stock target ``p / (p + h)``."""
        return self.p / (self.p + self.h)


@dataclass(frozen=True)
class PeriodRecord:
    t: int
    demand: int
    satisfied: int
    order: int
    on_hand: int
    backorders: int
    cost: float
    stockout: bool
    arrival: int = 0


@dataclass(frozen=True)
class RunMetrics:
    """Cost and service statistics; the ``*_se`` fields are zero for a single episode."""

    avg_cost: float
    fill_rate: float
    in_stock: float
    avg_on_hand: float
    avg_cost_se: float = 0.0
    fill_rate_se: float = 0.0
    in_stock_se: float = 0.0
    avg_on_hand_se: float = 0.0
    reps: int = 1
    zero_demand_reps: int = 0

    @property
    def zero_demand_window(self) -> bool:
        return self.zero_demand_reps > 0

    @classmethod
    def aggregate(cls, metrics: np.ndarray) -> RunMetrics:
        """Mean and standard error over replications (rows of kernel metrics)."""
        metrics = np.asarray(metrics, dtype=float)
        reps = metrics.shape[0]
        means = metrics[:, :4].mean(axis=0)
        if reps > 1:
            ses = metrics[:, :4].std(axis=0, ddof=1) / math.sqrt(reps)
        else:
            ses = np.zeros(4)
        return cls(*(float(v) for v in means), *(float(v) for v in ses), reps=reps,
                   zero_demand_reps=int(metrics[:, 4].sum()))


def inventory_position(state: InventoryState) -> int:
    """On hand minus backorders plus everything in the pipeline (may be negative)."""
    return state.on_hand - state.backorders + sum(state.pipeline)


def step(state: InventoryState, order: int, d: int, costs: CostParams, t: int = 0) -> tuple[InventoryState, PeriodRecord]:
    """Advance one period: queue ``order``, receive the pipeline head, serve ``d``."""
    if order < 0 or d < 0:
        raise ValueError("order and demand must be non-negative")
    if state.pipeline:
        arrival = state.pipeline[0]
        pipeline = state.pipeline[1:] + (order,)
    else:
        arrival = order
        pipeline = ()
    available = state.on_hand + arrival - state.backorders
    satisfied = max(0, min(available, d))
    net = available - d
    new = InventoryState(max(net, 0), max(-net, 0), pipeline)
    cost = costs.h * new.on_hand + costs.p * new.backorders
    record = PeriodRecord(t, d, satisfied, order, new.on_hand, new.backorders, cost, available < d, arrival)
    return new, record


def _level(policy, state: ForecastState, init: ForecastState, rep: Stream, t: int, cache: dict) -> float:
    if isinstance(policy, FixedBaseStock):
        return policy.level
    if callable(policy) and not isinstance(policy, PolicySpec):
        return float(policy(state, t))
    L = policy.lead_time_total
    if policy.method is Method.S1A:
        return graves_base_stock(state.f, math.sqrt(init.mse), state.alpha, L, policy.target_p1)
    if policy.method is Method.S1B:
        return graves_base_stock(state.f, math.sqrt(state.mse), state.alpha, L, policy.target_p1)
    if policy.s2_recompute == "once":
        if "once" not in cache:
            cache["once"] = empirical_base_stock(init, L, policy.target_p1, policy.scenario_count,
                                                 key=derive(rep.key, 1))
        return float(cache["once"])
    return float(empirical_base_stock(state, L, policy.target_p1, policy.scenario_count,
                                      key=derive(rep.key, t + 1)))


def simulate(policy, init_forecast: ForecastState, costs: CostParams, lead_time: int, horizon: int,
             warmup: int, rng: Stream | int | None = None) -> tuple[list[PeriodRecord], RunMetrics]:
    """One episode from empty stock.

    ``policy`` is a :class:`PolicySpec`, a :class:`FixedBaseStock` or any
    callable ``(forecast_state, t) -> level``.  Demand uses child stream 0 of
    ``rng``; S2 scenarios for period ``t`` (1-based) use child stream ``t``.
    """
    if horizon <= warmup:
        raise ValueError(f"horizon ({horizon}) must exceed warmup ({warmup})")
    if lead_time < 0:
        raise ValueError("lead_time must be non-negative")
    rep = as_stream(rng)
    demand_stream = rep.spawn(0)
    inv = InventoryState.empty(lead_time)
    state = init_forecast
    cache: dict = {}
    records = []
    for t in range(horizon):
        level = _level(policy, state, init_forecast, rep, t, cache)
        order = max(0, math.ceil(level) - inventory_position(inv))
        try:
            d, new_state = next_demand(state, demand_stream)
        except InfeasibleState as exc:
            raise InfeasibleState(exc.mu, exc.sigma2, step=t + 1) from None
        inv, rec = step(inv, order, d, costs, t + 1)
        records.append(rec)
        state = new_state
    return records, summarize(records, warmup)


def summarize(records: Sequence[PeriodRecord], warmup: int) -> RunMetrics:
    """Metrics over periods after ``warmup``; the fill rate is a ratio of sums."""
    window = list(records)[warmup:]
    if not window:
        raise ValueError("no periods left after the warm-up")
    n = len(window)
    cost = 0.0
    for rec in window:
        cost += rec.cost
    demand = sum(rec.demand for rec in window)
    served = sum(rec.satisfied for rec in window)
    zero = demand == 0
    if zero:
        warnings.warn("no demand after warm-up; fill rate reported as 1.0", ZeroDemandWindow, stacklevel=2)
    return RunMetrics(
        avg_cost=cost / n,
        fill_rate=1.0 if zero else served / demand,
        in_stock=sum(not rec.stockout for rec in window) / n,
        avg_on_hand=sum(rec.on_hand for rec in window) / n,
        zero_demand_reps=int(zero),
    )


def _kernel_policy(policy) -> tuple[int, float, float, int, bool, float]:
    """(method code, z, target, scenario count, once, fixed level)."""
    if isinstance(policy, FixedBaseStock):
        return _kernels.FIXED, 0.0, 0.5, 1, False, float(policy.level)
    code = {Method.S1A: _kernels.S1A, Method.S1B: _kernels.S1B, Method.S2: _kernels.S2}[policy.method]
    return code, policy.z, policy.target_p1, policy.scenario_count, policy.s2_recompute == "once", 0.0


@dataclass
class EpisodeBatch:
    """Per-replication metrics (and optionally per-period records) from the kernel."""

    metrics: np.ndarray
    records: np.ndarray

    @property
    def failed(self) -> np.ndarray:
        return self.metrics[:, 5] >= 0

    def summary(self) -> RunMetrics:
        if self.failed.any():
            r = int(np.nonzero(self.failed)[0][0])
            raise InfeasibleState(float("nan"), float("nan"), step=int(self.metrics[r, 5]) + 1)
        return RunMetrics.aggregate(self.metrics)


def run_episodes(policy, init_forecast: ForecastState, costs: CostParams, lead_time: int, horizon: int,
                 warmup: int, rep_keys, record: bool = False, backend: str | None = None) -> EpisodeBatch:
    """Run one episode per key; episode ``r`` equals ``simulate(..., rng=Stream(rep_keys[r]))``."""
    if horizon <= warmup:
        raise ValueError(f"horizon ({horizon}) must exceed warmup ({warmup})")
    if isinstance(policy, PolicySpec) and policy.lead_time_total != lead_time + 1:
        raise ValueError("policy lead_time_total must equal lead_time + 1")
    code, z, target, n_scen, once, fixed = _kernel_policy(policy)
    init = init_forecast
    metrics, rec = engine.simulate_reps(
        rep_keys, code, init.f, init.mse, init.alpha, init.beta, lead_time, z,
        graves_factor(init.alpha, lead_time + 1), target, n_scen, once, fixed,
        costs.h, costs.p, horizon, warmup, record=record, backend=backend)
    return EpisodeBatch(metrics, rec)
