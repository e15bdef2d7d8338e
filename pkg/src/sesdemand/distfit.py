"""Two-moment fitting of distributions on the non-negative integers.

The class is chosen by the variability statistic ``a = var/mean**2 - 1/mean``:

=====================  ==============================================
``a < 0``              mixture of Bin(k, p) and Bin(k+1, p), k = floor(-1/a)
``a == 0``             Poisson(mean)
``0 < a < 1``          mixture of NB(k, p) and NB(k+1, p), k = floor(1/a)
``a >= 1``             mixture of two geometrics with balanced means
=====================  ==============================================

and ``var == 0`` at an integral mean gives a point mass.  Every fit is checked
against :func:`moments` before it is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np
from scipy import stats

from . import _kernels, _vector
from .forecast import feasible
from .rng import Stream, as_stream, uniform_array

MOMENT_RTOL = 1e-9
_MOMENT_ATOL = 1e-12


class InfeasibleMoments(ValueError):
    """No distribution on the non-negative integers has these moments."""


class NonIntegralPointMass(InfeasibleMoments):
    """Zero variance was requested at a non-integral mean."""


class FitVerificationError(RuntimeError):
    """A fitted distribution failed the moment check (a bug, never user error)."""


@dataclass(frozen=True)
class PointMass:
    k: int
    tag: ClassVar[str] = "point"
    code: ClassVar[int] = _kernels.POINT


@dataclass(frozen=True)
class BinomialMixture:
    """Bin(k, p) with probability q, Bin(k+1, p) otherwise."""

    k: int
    p: float
    q: float
    tag: ClassVar[str] = "binomial_mixture"
    code: ClassVar[int] = _kernels.BINOMIAL


@dataclass(frozen=True)
class Poisson:
    lam: float
    tag: ClassVar[str] = "poisson"
    code: ClassVar[int] = _kernels.POISSON


@dataclass(frozen=True)
class NegBinMixture:
    """NB(k, p) with probability q, NB(k+1, p) otherwise (failures before the r-th success)."""

    k: int
    p: float
    q: float
    tag: ClassVar[str] = "negbin_mixture"
    code: ClassVar[int] = _kernels.NEGBIN


@dataclass(frozen=True)
class GeometricMixture:
    """Geo(p1) with probability q, Geo(p2) otherwise; both on {0, 1, 2, ...}.

    Fits put the higher-mean component first, so ``q <= 1/2``.
    """

    p1: float
    p2: float
    q: float
    tag: ClassVar[str] = "geometric_mixture"
    code: ClassVar[int] = _kernels.GEOMETRIC


FittedDist = Union[PointMass, BinomialMixture, Poisson, NegBinMixture, GeometricMixture]

CLASS_TAGS = {cls.code: cls.tag for cls in (PointMass, BinomialMixture, Poisson, NegBinMixture, GeometricMixture)}


def variability(mu: float, sigma2: float) -> float:
    """``sigma2/mu**2 - 1/mu``, the statistic that selects the fitted class."""
    if not mu > 0:
        raise ValueError(f"variability needs a positive mean, got {mu!r}")
    return sigma2 / (mu * mu) - 1.0 / mu


def _from_params(code, k, p1, p2, q) -> FittedDist:
    if code == _kernels.POINT:
        return PointMass(int(k))
    if code == _kernels.BINOMIAL:
        return BinomialMixture(int(k), float(p1), float(q))
    if code == _kernels.POISSON:
        return Poisson(float(p1))
    if code == _kernels.NEGBIN:
        return NegBinMixture(int(k), float(p1), float(q))
    if code == _kernels.GEOMETRIC:
        return GeometricMixture(float(p1), float(p2), float(q))
    raise ValueError(f"unknown class code {code}")


def params(dist: FittedDist) -> tuple[int, int, float, float, float]:
    """The kernel tuple ``(code, k, p1, p2, q)`` for a fitted distribution."""
    if isinstance(dist, PointMass):
        return dist.code, dist.k, 0.0, 0.0, 1.0
    if isinstance(dist, (BinomialMixture, NegBinMixture)):
        return dist.code, dist.k, dist.p, 0.0, dist.q
    if isinstance(dist, Poisson):
        return dist.code, 0, dist.lam, 0.0, 1.0
    if isinstance(dist, GeometricMixture):
        return dist.code, 0, dist.p1, dist.p2, dist.q
    raise TypeError(f"not a fitted distribution: {dist!r}")


def fit(mu: float, sigma2: float) -> FittedDist:
    """Fit a distribution on {0, 1, 2, ...} with mean ``mu`` and variance ``sigma2``.

    Raises
    ------
    NonIntegralPointMass
        ``sigma2 == 0`` and ``mu`` is not an integer (within 1e-12).
    InfeasibleMoments
        The pair violates the feasibility bound, or ``mu == 0 < sigma2``.
    """
    mu, sigma2 = float(mu), float(sigma2)
    if sigma2 == 0 and math.isfinite(mu) and abs(mu - round(mu)) > _kernels.INTEGRAL_TOL:
        raise NonIntegralPointMass(f"variance 0 needs an integral mean, got {mu!r}")
    if not feasible(mu, sigma2):
        raise InfeasibleMoments(f"no integer distribution has mean {mu!r} and variance {sigma2!r}")
    code, k, p1, p2, q = _kernels.fit_params(mu, sigma2)
    if code == _kernels.ZERO_MEAN_SPREAD:
        raise InfeasibleMoments(f"mean 0 forces variance 0, got variance {sigma2!r}")
    dist = _from_params(code, k, p1, p2, q)
    m, v = moments(dist)
    if not (_close(m, mu) and _close(v, sigma2)):
        raise FitVerificationError(f"fit {dist!r} has moments ({m!r}, {v!r}), wanted ({mu!r}, {sigma2!r})")
    return dist


def _close(got: float, want: float) -> bool:
    return abs(got - want) <= MOMENT_RTOL * abs(want) + _MOMENT_ATOL


def _components(dist: FittedDist):
    """(weight, mean, variance) of each mixture component."""
    if isinstance(dist, PointMass):
        return [(1.0, float(dist.k), 0.0)]
    if isinstance(dist, Poisson):
        return [(1.0, dist.lam, dist.lam)]
    if isinstance(dist, BinomialMixture):
        p = dist.p
        return [(w, n * p, n * p * (1.0 - p)) for w, n in ((dist.q, dist.k), (1.0 - dist.q, dist.k + 1))]
    if isinstance(dist, NegBinMixture):
        p = dist.p
        return [(w, r * (1.0 - p) / p, r * (1.0 - p) / (p * p))
                for w, r in ((dist.q, dist.k), (1.0 - dist.q, dist.k + 1))]
    if isinstance(dist, GeometricMixture):
        return [(w, (1.0 - p) / p, (1.0 - p) / (p * p)) for w, p in ((dist.q, dist.p1), (1.0 - dist.q, dist.p2))]
    raise TypeError(f"not a fitted distribution: {dist!r}")


def moments(dist: FittedDist) -> tuple[float, float]:
    """Analytic mean and variance (law of total variance over the components)."""
    comps = _components(dist)
    mean = sum(w * m for w, m, _ in comps)
    var = sum(w * (v + (m - mean) ** 2) for w, m, v in comps)
    return mean, var


def pmf(dist: FittedDist, x):
    """Probability mass at ``x`` (scalar or array of non-negative integers)."""
    x = np.asarray(x)
    if isinstance(dist, PointMass):
        out = (x == dist.k).astype(float)
    elif isinstance(dist, Poisson):
        out = stats.poisson.pmf(x, dist.lam)
    elif isinstance(dist, BinomialMixture):
        out = dist.q * stats.binom.pmf(x, dist.k, dist.p) + (1 - dist.q) * stats.binom.pmf(x, dist.k + 1, dist.p)
    elif isinstance(dist, NegBinMixture):
        out = dist.q * stats.nbinom.pmf(x, dist.k, dist.p) + (1 - dist.q) * stats.nbinom.pmf(x, dist.k + 1, dist.p)
    elif isinstance(dist, GeometricMixture):
        out = dist.q * stats.nbinom.pmf(x, 1, dist.p1) + (1 - dist.q) * stats.nbinom.pmf(x, 1, dist.p2)
    else:
        raise TypeError(f"not a fitted distribution: {dist!r}")
    return float(out) if out.ndim == 0 else out


def truncation_point(dist: FittedDist, mass: float = 1.0 - 1e-13) -> int:
    """Smallest ``x`` with CDF(x) >= ``mass``, searched up to ``mean + 50*sd + 50``.

    The default keeps a factor-10 margin below a ``1 - 1e-12`` normalisation
    check, so re-summing the pmf in a different order cannot fall short.

    Geometric tails can hold more than ``1e-12`` beyond that cap, so for
    geometric mixtures the search extends to where each component's
    remaining mass is below ``(1 - mass) / 10``.
    """
    mean, var = moments(dist)
    cap = int(math.ceil(mean + 50.0 * math.sqrt(var) + 50.0))
    if isinstance(dist, GeometricMixture):
        eps = (1.0 - mass) / 10.0
        for w, p in ((dist.q, dist.p1), (1.0 - dist.q, dist.p2)):
            if w > 0 and p < 1:
                # w * (1-p)**(x+1) <= eps
                cap = max(cap, int(math.ceil(math.log(eps / w) / math.log1p(-p))))
    xs = np.arange(cap + 1)
    cdf = np.cumsum(pmf(dist, xs))
    hit = np.nonzero(cdf >= mass)[0]
    return int(hit[0]) if hit.size else cap


def sample(dist: FittedDist, rng: Stream | int | None = None) -> int:
    """One draw; consumes exactly two uniforms from ``rng``."""
    stream = as_stream(rng)
    u1 = stream.uniform()
    u2 = stream.uniform()
    return int(_kernels.draw_from(*params(dist), u1, u2))


def sample_many(dist: FittedDist, n: int, rng: Stream | int | None = None) -> np.ndarray:
    """``n`` consecutive draws from the same stream; equals ``n`` calls to :func:`sample`."""
    stream = as_stream(rng)
    counters = np.uint64(stream.counter) + np.arange(2 * n, dtype=np.uint64)
    u = uniform_array(np.full(2 * n, stream.key, dtype=np.uint64), counters)
    stream.counter += 2 * n
    columns = [np.full(n, v) for v in params(dist)]
    return _vector.draw_from(*columns, u[0::2], u[1::2])
