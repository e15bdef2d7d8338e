"""Base-stock levels for periodic review with lead time.

Three methods share one interface:

* ``S1a``: normal safety stock with the SES autocorrelation correction, using
  the initial standard deviation throughout;
* ``S1b``: the same with the current ``sqrt(mse_t)``;
* ``S2``: the empirical in-stock quantile of lead-time demand, from scenarios
  generated by the demand process itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from statistics import NormalDist

from . import engine
from .forecast import ForecastState, InfeasibleState
from .rng import seed_key

_STANDARD_NORMAL = NormalDist()


class DomainError(ValueError):
    pass


class Method(str, Enum):
    S1A = "s1a"
    S1B = "s1b"
    S2 = "s2"

    @classmethod
    def parse(cls, value) -> Method:
        if isinstance(value, Method):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown method {value!r}; expected one of s1a, s1b, s2") from None

    @property
    def label(self) -> str:
        return {"s1a": "S1a", "s1b": "S1b", "s2": "S2"}[self.value]


RECOMPUTE_MODES = ("every_period", "once")


@dataclass(frozen=True)
class PolicySpec:
    method: Method
    target_p1: float
    lead_time_total: int
    scenario_count: int = 10_000
    s2_recompute: str = "every_period"

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        if not 0.0 < self.target_p1 < 1.0:
            raise ValueError(f"target_p1 must lie strictly between 0 and 1, got {self.target_p1}")
        if self.lead_time_total < 1:
            raise ValueError(f"lead_time_total must be at least 1, got {self.lead_time_total}")
        if self.scenario_count < 1:
            raise ValueError("scenario_count must be positive")
        if self.s2_recompute not in RECOMPUTE_MODES:
            raise ValueError(f"s2_recompute must be one of {RECOMPUTE_MODES}")

    @property
    def z(self) -> float:
        return normal_quantile(self.target_p1)


@dataclass(frozen=True)
class FixedBaseStock:
    """A constant order-up-to level (handy for tests and hand calculations)."""

    level: float


def normal_quantile(p: float) -> float:
    """Standard normal quantile ``z`` with ``Phi(z) = p``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile needs 0 < p < 1, got {p!r}")
    return _STANDARD_NORMAL.inv_cdf(p)


def graves_factor(alpha: float, lead_time_total: int) -> float:
    """``sqrt(L) * sqrt(1 + alpha(L-1) + alpha^2 (L-1)(2L-1)/6)``."""
    L = lead_time_total
    return math.sqrt(L) * math.sqrt(1.0 + alpha * (L - 1) + alpha * alpha * (L - 1) * (2 * L - 1) / 6.0)


def graves_base_stock(f: float, sigma: float, alpha: float, lead_time_total: int, target_p1: float) -> float:
    """Lead-time mean plus ``z * sigma`` inflated for SES-forecast autocorrelation."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if lead_time_total < 1:
        raise ValueError("lead_time_total must be at least 1")
    z = normal_quantile(target_p1)
    return lead_time_total * f + z * sigma * graves_factor(alpha, lead_time_total)


def empirical_base_stock(state: ForecastState, lead_time_total: int, target_p1: float, n: int,
                         master_seed: int | None = None, *, key: int | None = None,
                         backend: str | None = None) -> int:
    """Empirical ``target_p1``-quantile of lead-time demand over ``n`` generated scenarios.

    Scenario ``j`` is the demand path with substream ``derive(key, j)``, where
    ``key = seed_key(master_seed)`` unless a raw ``key`` is given; the result
    is the smallest sum ``x`` whose empirical CDF is at least ``target_p1``.
    """
    if not 0.0 < target_p1 < 1.0:
        raise DomainError(f"target_p1 must lie in (0, 1), got {target_p1}")
    if key is None:
        if master_seed is None:
            raise TypeError("give master_seed or key")
        key = seed_key(master_seed)
    level = engine.empirical_level(key, n, lead_time_total, state.f, state.mse, state.alpha, state.beta,
                                   target_p1, backend=backend)
    if level < 0:
        raise InfeasibleState(state.f, state.mse)
    return int(level)


def order_quantity(S: float, ip: int) -> int:
    """Order up to ``ceil(S)``: ``max(0, ceil(S) - ip)``."""
    return max(0, math.ceil(S) - int(ip))
