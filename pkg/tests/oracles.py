"""Independent reference computations used as test oracles.

Nothing here calls the package's kernels: sums are built from scratch with
Python floats, scipy CDFs, exact fractions or mpmath.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
from scipy import stats

from sesdemand import distfit, rng


def counterexample_quadratic(alpha, beta, p):
    """``(alpha p)^2 + (alpha - beta)(p - 2p^2)`` in exact rational arithmetic."""
    a, b, p = Fraction(alpha), Fraction(beta), Fraction(p)
    return (a * p) ** 2 + (a - b) * (p - 2 * p * p)


def exact_ses(f, mse, alpha, beta, d):
    f, mse, a, b = (Fraction(x) for x in (f, mse, alpha, beta))
    err = Fraction(d) - f
    return a * d + (1 - a) * f, b * err * err + (1 - b) * mse


def exact_feasible(mu: Fraction, s2: Fraction) -> bool:
    delta = mu - math.floor(mu)
    return s2 >= delta * (1 - delta)


def normal_quantile(p, digits=30):
    with mpmath.workdps(digits):
        return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))


def _cdf(dist, x):
    """CDF of a fitted distribution at integer ``x`` built from scipy."""
    if isinstance(dist, distfit.PointMass):
        return float(x >= dist.k)
    if isinstance(dist, distfit.Poisson):
        return stats.poisson.cdf(x, dist.lam)
    if isinstance(dist, distfit.BinomialMixture):
        return dist.q * stats.binom.cdf(x, dist.k, dist.p) + (1 - dist.q) * stats.binom.cdf(x, dist.k + 1, dist.p)
    if isinstance(dist, distfit.NegBinMixture):
        return dist.q * stats.nbinom.cdf(x, dist.k, dist.p) + (1 - dist.q) * stats.nbinom.cdf(x, dist.k + 1, dist.p)
    return dist.q * stats.geom.cdf(x + 1, dist.p1) + (1 - dist.q) * stats.geom.cdf(x + 1, dist.p2)


def _component(dist, u1):
    """The single-component distribution selected by ``u1 < q``."""
    if isinstance(dist, distfit.BinomialMixture):
        n = dist.k if u1 < dist.q else dist.k + 1
        return lambda x: stats.binom.cdf(x, n, dist.p)
    if isinstance(dist, distfit.NegBinMixture):
        r = dist.k if u1 < dist.q else dist.k + 1
        return lambda x: stats.nbinom.cdf(x, r, dist.p) if r > 0 else 1.0
    if isinstance(dist, distfit.GeometricMixture):
        p = dist.p1 if u1 < dist.q else dist.p2
        return lambda x: stats.geom.cdf(x + 1, p)
    return lambda x: _cdf(dist, x)


def invert(dist, u1, u2):
    """Smallest ``x`` with ``F(x) >= u2`` for the component picked by ``u1``."""
    cdf = _component(dist, u1)
    x = 0
    while cdf(x) < u2:
        x += 1
    return x


def draw(mu, s2, u1, u2):
    if mu < 1e-12 and s2 < 1e-12:
        return 0
    return invert(distfit.fit(mu, s2), u1, u2)


def lead_time_sum(key, L, f, mse, alpha, beta):
    total = 0
    for t in range(L):
        u1 = rng.uniform(key, 2 * t)
        u2 = rng.uniform(key, 2 * t + 1)
        d = draw(f, mse, u1, u2)
        total += d
        err = d - f
        f = alpha * d + (1 - alpha) * f
        mse = beta * err * err + (1 - beta) * mse
    return total


def brute_force_level(f, mse, alpha, beta, L, target, n, key):
    """Generate ``n`` scenarios, sum, sort and index with the inverted-CDF quantile."""
    sums = np.array([lead_time_sum(rng.derive(key, j), L, f, mse, alpha, beta) for j in range(n)])
    return int(np.quantile(np.sort(sums), target, method="inverted_cdf"))


def graves(f, sigma, alpha, L, z):
    with mpmath.workdps(30):
        L = mpmath.mpf(L)
        a = mpmath.mpf(alpha)
        c = mpmath.sqrt(L) * mpmath.sqrt(1 + a * (L - 1) + a * a * (L - 1) * (2 * L - 1) / 6)
        return float(L * mpmath.mpf(f) + mpmath.mpf(z) * mpmath.mpf(sigma) * c)


def hand_episode(level, demand, lead, horizon, h, p):
    """Order-up-to episode with constant demand, written out without reuse of package code."""
    on_hand = back = 0
    pipe = [0] * lead
    out = []
    for t in range(1, horizon + 1):
        ip = on_hand - back + sum(pipe)
        q = max(0, math.ceil(level) - ip)
        if lead:
            pipe.append(q)
            arr = pipe.pop(0)
        else:
            arr = q
        avail = on_hand + arr - back
        served = max(0, min(avail, demand))
        net = avail - demand
        on_hand, back = max(net, 0), max(-net, 0)
        out.append((t, demand, served, q, on_hand, back, h * on_hand + p * back, avail < demand))
    return out
