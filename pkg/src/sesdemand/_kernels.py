"""Scalar and loop kernels (numba ``@njit`` when available).

Everything here is written in the numba-compatible subset of Python.  The
numpy backend in :mod:`sesdemand._vector` mirrors these loops operation by
operation across whole arrays of paths.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import njit

# distribution class codes
POINT = 0
BINOMIAL = 1
POISSON = 2
NEGBIN = 3
GEOMETRIC = 4
INFEASIBLE = -1
ZERO_MEAN_SPREAD = -2  # mean 0 with positive variance: no such distribution

# policy codes
S1A = 0
S1B = 1
S2 = 2
FIXED = 3

POISSON_TOL = 1e-9
INTEGRAL_TOL = 1e-12
FEASIBILITY_SLACK = 1e-12
UNDERFLOW = 1e-12
NB_REBALANCE = 1e-4
# below this log-pmf the search starts near the mean instead of at zero
_LOG_START_LIMIT = -700.0

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_UNIT = 2.0**-53


@njit
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit
def derive(key, index):
    return mix64(key + mix64((np.uint64(index) + _ONE) * _GOLDEN))


@njit
def uniform(key, counter):
    z = mix64(key + (np.uint64(counter) + _ONE) * _GOLDEN)
    return (float(z >> _S11) + 0.5) * _UNIT


@njit
def fit_params(mu, s2):
    """Class code and parameters ``(code, k, p1, p2, q)`` for moments ``(mu, s2)``.

    Layout per class: binomial/negbin mixtures use ``k, p1, q``; Poisson keeps
    its rate in ``p1``; the geometric mixture uses ``p1, p2, q``.
    """
    delta = mu - math.floor(mu)
    if s2 + FEASIBILITY_SLACK < delta * (1.0 - delta):
        return INFEASIBLE, 0, 0.0, 0.0, 0.0
    if mu == 0.0:
        if s2 == 0.0:
            return POINT, 0, 0.0, 0.0, 1.0
        return ZERO_MEAN_SPREAD, 0, 0.0, 0.0, 0.0
    if s2 == 0.0:
        k = int(math.floor(mu + 0.5))
        if abs(mu - k) > INTEGRAL_TOL:
            return INFEASIBLE, 0, 0.0, 0.0, 0.0
        return POINT, k, 0.0, 0.0, 1.0
    a = (s2 / mu - 1.0) / mu
    # Poisson window shrinks with the mean so the variance stays within 1e-9 relative
    tol = POISSON_TOL / mu if mu > 1.0 else POISSON_TOL
    if a < -tol:
        k = int(math.floor(-1.0 / a))
        if k < 1:
            k = 1
        # k*(-1 - a(k+1)) written to avoid cancellation near the variance floor
        disc = k * (mu * (k + 1 - mu) - (k + 1) * s2) / (mu * mu)
        if disc < 0.0:
            disc = 0.0
        root = math.sqrt(disc)
        q = (k + 1) * root / (k + root)  # k+1-s for the stable root s = k(k+1)/(k+root)
        if q > 1.0:
            q = 1.0
        p = mu / (k + 1 - q)
        if p > 1.0:
            p = 1.0
        return BINOMIAL, k, p, 0.0, q
    if a <= tol:
        return POISSON, 0, mu, 0.0, 1.0
    if a < 1.0:
        k = int(math.floor(1.0 / a))
        if k < 1:
            k = 1
        arg = (k + 1) * (1.0 - a * k)
        if arg < 0.0:
            arg = 0.0
        q = (k + 1) * (a * a * (k + 1) + a * k - 1.0) / ((1.0 + a) * (a * (k + 1) + math.sqrt(arg)))
        if q < 0.0:
            q = 0.0
        elif q > 1.0:
            q = 1.0
        r = k + 1 - q
        p = r / (mu + r)
        if 1.0 - p < NB_REBALANCE:
            # 1-p carries few digits here; re-solve the mean shape from the stored p
            r = mu * p / (1.0 - p)
            k = int(math.floor(r))
            if k < 1:
                k = 1
            q = k + 1 - r
            if q < 0.0:
                q = 0.0
            elif q > 1.0:
                q = 1.0
        return NEGBIN, k, p, 0.0, q
    # geometric mixture with balanced means: q*m1 == (1-q)*m2 == mu/2
    spread = s2 - mu + mu * mu
    x = mu * mu / (2.0 * spread)  # q*(1-q)
    disc = 1.0 - 4.0 * x
    if disc < 0.0:
        disc = 0.0
    root = math.sqrt(disc)
    # component 1 is the high-mean one, so q is the small weight and never rounds to 1
    q = 2.0 * x / (1.0 + root)
    m1 = (1.0 + root) * spread / (2.0 * mu)
    m2 = mu / (2.0 * (1.0 - q))
    return GEOMETRIC, 0, 1.0 / (1.0 + m1), 1.0 / (1.0 + m2), q


@njit
def _poisson_inv(lam, u):
    sd = math.sqrt(lam)
    x = 0
    logp = -lam
    if logp < _LOG_START_LIMIT:
        x = int(math.floor(lam - 40.0 * sd))
        if x < 0:
            x = 0
        logp = x * math.log(lam) - lam - math.lgamma(x + 1.0)
    pm = math.exp(logp)
    cdf = pm
    hi = lam + 50.0 * sd + 50.0
    while cdf < u and x < hi:
        x += 1
        pm = pm * (lam / x)
        cdf += pm
    return x


@njit
def _binomial_inv(n, p, u):
    if p >= 1.0:
        return n
    x = 0
    logp = n * math.log1p(-p)
    if logp < _LOG_START_LIMIT:
        x = int(math.floor(n * p - 40.0 * math.sqrt(n * p * (1.0 - p))))
        if x < 0:
            x = 0
        logp = (math.lgamma(n + 1.0) - math.lgamma(x + 1.0) - math.lgamma(n - x + 1.0)
                + x * math.log(p) + (n - x) * math.log1p(-p))
    ratio = p / (1.0 - p)
    pm = math.exp(logp)
    cdf = pm
    while cdf < u and x < n:
        pm = pm * ((n - x) / (x + 1.0) * ratio)
        x += 1
        cdf += pm
    return x


@njit
def _negbin_inv(r, p, u):
    mean = r * (1.0 - p) / p
    sd = math.sqrt(r * (1.0 - p)) / p
    x = 0
    logp = r * math.log(p)
    if logp < _LOG_START_LIMIT:
        x = int(math.floor(mean - 40.0 * sd))
        if x < 0:
            x = 0
        logp = (math.lgamma(x + r) - math.lgamma(r * 1.0) - math.lgamma(x + 1.0)
                + r * math.log(p) + x * math.log1p(-p))
    pm = math.exp(logp)
    cdf = pm
    hi = mean + 50.0 * sd + 50.0
    fail = 1.0 - p
    while cdf < u and x < hi:
        pm = pm * ((x + r) / (x + 1.0) * fail)
        x += 1
        cdf += pm
    return x


@njit
def _geometric_inv(p, u):
    if p >= 1.0:
        return 0
    # smallest x with 1 - (1-p)**(x+1) >= u
    return max(0, int(math.ceil(math.log1p(-u) / math.log1p(-p))) - 1)


@njit
def draw_from(code, k, p1, p2, q, u1, u2):
    """Inverse-transform draw; ``u1`` picks the mixture component, ``u2`` the value."""
    if code == POINT:
        return k
    if code == POISSON:
        return _poisson_inv(p1, u2)
    if code == BINOMIAL:
        n = k if u1 < q else k + 1
        return _binomial_inv(n, p1, u2)
    if code == NEGBIN:
        r = k if u1 < q else k + 1
        return _negbin_inv(r, p1, u2)
    if code == GEOMETRIC:
        return _geometric_inv(p1 if u1 < q else p2, u2)
    return -1


@njit
def demand_draw(f, mse, u1, u2):
    """One demand from the process at state ``(f, mse)``; -1 when infeasible."""
    if f < UNDERFLOW and mse < UNDERFLOW:
        return 0
    code, k, p1, p2, q = fit_params(f, mse)
    if code == ZERO_MEAN_SPREAD:
        # limit of the geometric mixture as the mean vanishes
        return 0
    if code < 0:
        return -1
    return draw_from(code, k, p1, p2, q, u1, u2)


@njit
def dgp_paths(keys, f1, mse1, alpha, beta, horizon, demands, means, variances, status):
    """Fill ``demands/means/variances[i, t]`` for every path key; ``status[i]`` is
    -1 on success or the 0-based step at which the state became infeasible."""
    for i in range(keys.shape[0]):
        key = keys[i]
        f = f1
        mse = mse1
        status[i] = -1
        for t in range(horizon):
            means[i, t] = f
            variances[i, t] = mse
            d = demand_draw(f, mse, uniform(key, 2 * t), uniform(key, 2 * t + 1))
            if d < 0:
                status[i] = t
                for s in range(t, horizon):
                    demands[i, s] = -1
                break
            demands[i, t] = d
            err = d - f
            f = alpha * d + (1.0 - alpha) * f
            mse = beta * err * err + (1.0 - beta) * mse


@njit
def scenario_sums(base_key, n, horizon, f1, mse1, alpha, beta, sums):
    """Sum of ``horizon`` demands for scenarios ``0..n-1`` of ``base_key``.

    Returns -1 on success or the index of the first scenario that hit an
    infeasible state.
    """
    for j in range(n):
        key = derive(base_key, j)
        f = f1
        mse = mse1
        total = 0
        for t in range(horizon):
            d = demand_draw(f, mse, uniform(key, 2 * t), uniform(key, 2 * t + 1))
            if d < 0:
                return j
            total += d
            err = d - f
            f = alpha * d + (1.0 - alpha) * f
            mse = beta * err * err + (1.0 - beta) * mse
        sums[j] = total
    return -1


@njit
def type1_rank(n, target):
    """0-based index of the smallest order statistic whose empirical CDF reaches ``target``."""
    k = int(math.ceil(target * n))
    if k < 1:
        k = 1
    if k > n:
        k = n
    while k > 1 and (k - 1) / n >= target:
        k -= 1
    while k < n and k / n < target:
        k += 1
    return k - 1


@njit
def empirical_level(base_key, n, lead_total, f, mse, alpha, beta, target, sums):
    """Empirical ``target``-quantile of lead-time demand; -1 if a scenario failed."""
    failed = scenario_sums(base_key, n, lead_total, f, mse, alpha, beta, sums)
    if failed >= 0:
        return -1
    ordered = np.sort(sums[:n])
    return ordered[type1_rank(n, target)]


@njit
def simulate_reps(rep_keys, method, f1, mse1, alpha, beta, lead, z, graves_c, target,
                  n_scen, s2_once, fixed_level, h, pen, horizon, warmup,
                  metrics, record, rec):
    """Run one episode per key.

    ``metrics[r]`` receives (avg_cost, fill_rate, in_stock, avg_on_hand,
    zero_demand_flag, status); status is -1 or the failing 0-based period.
    When ``record`` is true, ``rec[r, t]`` receives (d, d_s, q, I, b, arrival,
    stockout) and ``cost`` goes to the last column as a float.
    """
    lead_total = lead + 1
    pipe = np.zeros(max(lead, 1), dtype=np.int64)
    sums = np.zeros(max(n_scen, 1), dtype=np.int64)
    for r in range(rep_keys.shape[0]):
        key = rep_keys[r]
        dkey = derive(key, 0)
        f = f1
        mse = mse1
        on_hand = 0
        back = 0
        for j in range(lead):
            pipe[j] = 0
        head = 0
        pipe_sum = 0
        status = -1
        once_level = 0.0
        if method == S2 and s2_once:
            lvl = empirical_level(derive(key, 1), n_scen, lead_total, f, mse, alpha, beta, target, sums)
            if lvl < 0:
                status = 0
            once_level = float(lvl)
        cost_sum = 0.0
        ds_sum = 0
        d_sum = 0
        instock = 0
        oh_sum = 0
        periods = 0
        for t in range(horizon):
            if status >= 0:
                break
            if method == S1A:
                level = lead_total * f + z * math.sqrt(mse1) * graves_c
            elif method == S1B:
                level = lead_total * f + z * math.sqrt(mse) * graves_c
            elif method == S2:
                if s2_once:
                    level = once_level
                else:
                    lvl = empirical_level(derive(key, t + 1), n_scen, lead_total, f, mse,
                                          alpha, beta, target, sums)
                    if lvl < 0:
                        status = t
                        break
                    level = float(lvl)
            else:
                level = fixed_level
            ip = on_hand - back + pipe_sum
            order = int(math.ceil(level)) - ip
            if order < 0:
                order = 0
            if lead == 0:
                arrival = order
            else:
                arrival = pipe[head]
                pipe[head] = order
                head += 1
                if head == lead:
                    head = 0
                pipe_sum += order - arrival
            d = demand_draw(f, mse, uniform(dkey, 2 * t), uniform(dkey, 2 * t + 1))
            if d < 0:
                status = t
                break
            net_before = on_hand + arrival - back
            served = net_before if net_before < d else d
            if served < 0:
                served = 0
            net = net_before - d
            on_hand = net if net > 0 else 0
            back = -net if net < 0 else 0
            cost = h * on_hand + pen * back
            stockout = 1 if net_before < d else 0
            if record:
                rec[r, t, 0] = d
                rec[r, t, 1] = served
                rec[r, t, 2] = order
                rec[r, t, 3] = on_hand
                rec[r, t, 4] = back
                rec[r, t, 5] = arrival
                rec[r, t, 6] = stockout
                rec[r, t, 7] = cost
            if t >= warmup:
                cost_sum += cost
                ds_sum += served
                d_sum += d
                instock += 1 - stockout
                oh_sum += on_hand
                periods += 1
            err = d - f
            f = alpha * d + (1.0 - alpha) * f
            mse = beta * err * err + (1.0 - beta) * mse
        if status >= 0 or periods == 0:
            for c in range(5):
                metrics[r, c] = np.nan
            metrics[r, 5] = status
            continue
        metrics[r, 0] = cost_sum / periods
        if d_sum > 0:
            metrics[r, 1] = ds_sum / d_sum
            metrics[r, 4] = 0.0
        else:
            metrics[r, 1] = 1.0
            metrics[r, 4] = 1.0
        metrics[r, 2] = instock / periods
        metrics[r, 3] = oh_sum / periods
        metrics[r, 5] = -1.0


@njit
def arima_paths(keys, level1, sigma, alpha, horizon, demands, levels):
    """Truncated, rounded ARIMA(0,1,1) baseline; Box-Muller normals from two uniforms."""
    two_pi = 2.0 * math.pi
    for i in range(keys.shape[0]):
        key = keys[i]
        lvl = level1
        for t in range(horizon):
            levels[i, t] = lvl
            u1 = uniform(key, 2 * t)
            u2 = uniform(key, 2 * t + 1)
            eps = sigma * (math.sqrt(-2.0 * math.log(u1)) * math.cos(two_pi * u2))
            x = np.rint(lvl + eps)
            demands[i, t] = int(x) if x > 0.0 else 0
            lvl = lvl + alpha * eps
