"""Simple exponential smoothing of the mean and the mean-square error.

A :class:`ForecastState` ``(f, mse)`` is the whole conditional state of the
demand process: the next demand has mean ``f`` and variance ``mse``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Absolute slack in favour of feasibility; absorbs rounding at exact boundaries
# such as Bernoulli starts.
FEASIBILITY_SLACK = 1e-12


class InfeasibleState(ValueError):
    """No distribution on the non-negative integers has the requested moments."""

    def __init__(self, mu: float, sigma2: float, step: int | None = None):
        self.mu = mu
        self.sigma2 = sigma2
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(f"infeasible moments (mean={mu!r}, variance={sigma2!r}){where}")


@dataclass(frozen=True)
class ForecastState:
    """SES forecast of the next period's mean (``f``) and variance (``mse``)."""

    f: float
    mse: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("f", "mse", "alpha", "beta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.f < 0 or self.mse < 0:
            raise ValueError(f"f and mse must be non-negative, got f={self.f}, mse={self.mse}")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError(f"alpha and beta must lie in [0, 1], got {self.alpha}, {self.beta}")

    @classmethod
    def create(cls, f: float, mse: float, alpha: float, beta: float | None = None) -> ForecastState:
        """Build a state with ``beta`` defaulting to ``alpha``."""
        return cls(float(f), float(mse), float(alpha), float(alpha if beta is None else beta))

    @property
    def is_feasible(self) -> bool:
        return feasible(self.f, self.mse)


def ses_update(state: ForecastState, d: float) -> ForecastState:
    """One SES step after observing demand ``d``.

    ``f' = alpha*d + (1-alpha)*f`` and ``mse' = beta*(d-f)**2 + (1-beta)*mse``.
    """
    if not math.isfinite(d):
        raise ValueError(f"demand must be finite, got {d!r}")
    if d < 0:
        raise ValueError(f"demand must be non-negative, got {d!r}")
    a, b, f = state.alpha, state.beta, state.f
    err = d - f
    # object.__new__ skips re-validation of a state derived from a valid one
    new = object.__new__(ForecastState)
    object.__setattr__(new, "f", a * d + (1.0 - a) * f)
    object.__setattr__(new, "mse", b * err * err + (1.0 - b) * state.mse)
    object.__setattr__(new, "alpha", a)
    object.__setattr__(new, "beta", b)
    return new


def binomial_floor(mu: float) -> float:
    """Smallest variance of an integer-valued variable with mean ``mu``: ``δ(1-δ)``."""
    delta = mu - math.floor(mu)
    return delta * (1.0 - delta)


def _check_moments(mu: float, sigma2: float) -> None:
    if not (math.isfinite(mu) and math.isfinite(sigma2)):
        raise ValueError(f"moments must be finite, got mean={mu!r}, variance={sigma2!r}")
    if mu < 0 or sigma2 < 0:
        raise ValueError(f"moments must be non-negative, got mean={mu!r}, variance={sigma2!r}")


def feasible(mu: float, sigma2: float) -> bool:
    """True iff some distribution on {0, 1, 2, ...} has mean ``mu`` and variance ``sigma2``.

    The condition is ``sigma2 >= δ(1-δ)`` with ``δ = mu - floor(mu)``: the
    variance must be at least that of a Bernoulli(δ) shifted by ``floor(mu)``.
    """
    _check_moments(mu, sigma2)
    return sigma2 + FEASIBILITY_SLACK >= binomial_floor(mu)


def feasible_ratio_form(mu: float, sigma2: float) -> bool:
    """The same test in squared-coefficient-of-variation form (``mu > 0``).

    ``sigma2/mu**2 >= (2k+1)/mu - k(k+1)/mu**2 - 1`` with ``k = floor(mu)``.
    Kept as an independent route for cross-checking :func:`feasible`.
    """
    _check_moments(mu, sigma2)
    if mu == 0:
        raise ValueError("the ratio form is undefined for mean 0")
    k = math.floor(mu)
    lhs = (sigma2 + FEASIBILITY_SLACK) / (mu * mu)
    return lhs >= (2 * k + 1) / mu - k * (k + 1) / (mu * mu) - 1.0
