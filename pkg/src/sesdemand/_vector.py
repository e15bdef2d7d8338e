"""Pure-numpy backend: the kernels of :mod:`sesdemand._kernels`, vectorised.

Loops over time stay in Python; each step works on every live path at once.
Sequential inverse-transform searches run as masked while-loops.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng as _rng
from ._kernels import (
    BINOMIAL,
    FEASIBILITY_SLACK,
    FIXED,
    GEOMETRIC,
    INFEASIBLE,
    INTEGRAL_TOL,
    NB_REBALANCE,
    NEGBIN,
    POINT,
    POISSON,
    POISSON_TOL,
    S1A,
    S1B,
    S2,
    UNDERFLOW,
    ZERO_MEAN_SPREAD,
    _LOG_START_LIMIT,
)

_lgamma = np.frompyfunc(math.lgamma, 1, 1)


def lgamma(x: np.ndarray) -> np.ndarray:
    # libm lgamma, identical to the compiled path
    return _lgamma(np.asarray(x, dtype=np.float64)).astype(np.float64)


def fit_params(mu: np.ndarray, s2: np.ndarray):
    mu = np.asarray(mu, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    shape = np.broadcast(mu, s2).shape
    mu, s2 = np.broadcast_to(mu, shape).ravel(), np.broadcast_to(s2, shape).ravel()
    n = mu.size
    code = np.full(n, INFEASIBLE, dtype=np.int64)
    k = np.zeros(n, dtype=np.int64)
    p1 = np.zeros(n)
    p2 = np.zeros(n)
    q = np.zeros(n)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        delta = mu - np.floor(mu)
        ok = ~(s2 + FEASIBILITY_SLACK < delta * (1.0 - delta))

        zero_mu = ok & (mu == 0.0)
        m = zero_mu & (s2 == 0.0)
        code[m] = POINT
        q[m] = 1.0
        code[zero_mu & (s2 != 0.0)] = ZERO_MEAN_SPREAD

        rest = ok & ~zero_mu
        point = rest & (s2 == 0.0)
        kp = np.floor(mu[point] + 0.5).astype(np.int64)
        integral = np.abs(mu[point] - kp) <= INTEGRAL_TOL
        idx = np.nonzero(point)[0][integral]
        code[idx] = POINT
        k[idx] = kp[integral]
        q[idx] = 1.0

        rest &= s2 != 0.0
        a = np.where(rest, (s2 / mu - 1.0) / mu, 0.0)
        tol = np.where(mu > 1.0, POISSON_TOL / mu, POISSON_TOL)

        b = rest & (a < -tol)
        if b.any():
            ab, mub = a[b], mu[b]
            kb = np.maximum(np.floor(-1.0 / ab).astype(np.int64), 1)
            s2b = s2[b]
            disc = np.maximum(kb * (mub * (kb + 1 - mub) - (kb + 1) * s2b) / (mub * mub), 0.0)
            root = np.sqrt(disc)
            qb = np.minimum((kb + 1) * root / (kb + root), 1.0)
            code[b] = BINOMIAL
            k[b] = kb
            p1[b] = np.minimum(mub / (kb + 1 - qb), 1.0)
            q[b] = qb

        po = rest & (a >= -tol) & (a <= tol)
        code[po] = POISSON
        p1[po] = mu[po]
        q[po] = 1.0

        nb = rest & (a > tol) & (a < 1.0)
        if nb.any():
            an, mun = a[nb], mu[nb]
            kn = np.maximum(np.floor(1.0 / an).astype(np.int64), 1)
            arg = np.maximum((kn + 1) * (1.0 - an * kn), 0.0)
            qn = (kn + 1) * (an * an * (kn + 1) + an * kn - 1.0) / ((1.0 + an) * (an * (kn + 1) + np.sqrt(arg)))
            qn = np.clip(qn, 0.0, 1.0)
            r = kn + 1 - qn
            pn = r / (mun + r)
            thin = 1.0 - pn < NB_REBALANCE
            if thin.any():
                rt = mun[thin] * pn[thin] / (1.0 - pn[thin])
                kt = np.maximum(np.floor(rt).astype(np.int64), 1)
                kn[thin] = kt
                qn[thin] = np.clip(kt + 1 - rt, 0.0, 1.0)
            code[nb] = NEGBIN
            k[nb] = kn
            p1[nb] = pn
            q[nb] = qn

        g = rest & (a >= 1.0)
        if g.any():
            mug, s2g = mu[g], s2[g]
            spread = s2g - mug + mug * mug
            x = mug * mug / (2.0 * spread)
            root = np.sqrt(np.maximum(1.0 - 4.0 * x, 0.0))
            qg = 2.0 * x / (1.0 + root)
            m1 = (1.0 + root) * spread / (2.0 * mug)
            m2 = mug / (2.0 * (1.0 - qg))
            code[g] = GEOMETRIC
            p1[g] = 1.0 / (1.0 + m1)
            p2[g] = 1.0 / (1.0 + m2)
            q[g] = qg

    return tuple(arr.reshape(shape) for arr in (code, k, p1, p2, q))


def _search(x, pm, u, step, limit):
    """Advance ``x`` until the running CDF reaches ``u`` or ``x`` hits ``limit``.

    ``step(idx, x_before)`` returns the pmf ratio pmf(x+1)/pmf(x).
    """
    cdf = pm.copy()
    live = np.nonzero((cdf < u) & (x < limit))[0]
    while live.size:
        ratio = step(live, x[live])
        x[live] += 1
        pm[live] = pm[live] * ratio
        cdf[live] += pm[live]
        keep = (cdf[live] < u[live]) & (x[live] < limit[live])
        live = live[keep]
    return x


def _poisson_inv(lam, u):
    sd = np.sqrt(lam)
    x = np.zeros(lam.size, dtype=np.int64)
    logp = -lam
    shift = logp < _LOG_START_LIMIT
    if shift.any():
        xs = np.maximum(np.floor(lam[shift] - 40.0 * sd[shift]).astype(np.int64), 0)
        x[shift] = xs
        logp = logp.copy()
        logp[shift] = xs * np.log(lam[shift]) - lam[shift] - lgamma(xs + 1.0)
    pm = np.exp(logp)
    hi = lam + 50.0 * sd + 50.0

    def step(idx, xb):
        return lam[idx] / (xb + 1)

    return _search(x, pm, u, step, hi)


def _binomial_inv(n, p, u):
    out = n.copy()
    live = p < 1.0
    if not live.any():
        return out
    n, p, u = n[live], p[live], u[live]
    x = np.zeros(n.size, dtype=np.int64)
    logp = n * np.log1p(-p)
    shift = logp < _LOG_START_LIMIT
    if shift.any():
        ns, ps = n[shift], p[shift]
        xs = np.maximum(np.floor(ns * ps - 40.0 * np.sqrt(ns * ps * (1.0 - ps))).astype(np.int64), 0)
        x[shift] = xs
        logp[shift] = (lgamma(ns + 1.0) - lgamma(xs + 1.0) - lgamma(ns - xs + 1.0)
                       + xs * np.log(ps) + (ns - xs) * np.log1p(-ps))
    ratio = p / (1.0 - p)
    pm = np.exp(logp)

    def step(idx, xb):
        return (n[idx] - xb) / (xb + 1.0) * ratio[idx]

    out[live] = _search(x, pm, u, step, n)
    return out


def _negbin_inv(r, p, u):
    mean = r * (1.0 - p) / p
    sd = np.sqrt(r * (1.0 - p)) / p
    x = np.zeros(r.size, dtype=np.int64)
    logp = r * np.log(p)
    shift = logp < _LOG_START_LIMIT
    if shift.any():
        rs, ps = r[shift], p[shift]
        xs = np.maximum(np.floor(mean[shift] - 40.0 * sd[shift]).astype(np.int64), 0)
        x[shift] = xs
        logp[shift] = (lgamma(xs + rs) - lgamma(rs * 1.0) - lgamma(xs + 1.0)
                       + rs * np.log(ps) + xs * np.log1p(-ps))
    pm = np.exp(logp)
    hi = mean + 50.0 * sd + 50.0
    fail = 1.0 - p

    def step(idx, xb):
        return (xb + r[idx]) / (xb + 1.0) * fail[idx]

    return _search(x, pm, u, step, hi)


def _geometric_inv(p, u):
    out = np.zeros(p.size, dtype=np.int64)
    live = p < 1.0
    if live.any():
        x = np.ceil(np.log1p(-u[live]) / np.log1p(-p[live])).astype(np.int64) - 1
        out[live] = np.maximum(x, 0)
    return out


def draw_from(code, k, p1, p2, q, u1, u2):
    code, k, p1, p2, q, u1, u2 = (np.atleast_1d(np.asarray(v)) for v in (code, k, p1, p2, q, u1, u2))
    out = np.full(code.shape, -1, dtype=np.int64)
    m = code == POINT
    out[m] = k[m]
    m = code == POISSON
    if m.any():
        out[m] = _poisson_inv(p1[m], u2[m])
    first = u1 < q
    m = code == BINOMIAL
    if m.any():
        n = np.where(first[m], k[m], k[m] + 1)
        out[m] = _binomial_inv(n, p1[m], u2[m])
    m = code == NEGBIN
    if m.any():
        r = np.where(first[m], k[m], k[m] + 1)
        out[m] = _negbin_inv(r, p1[m], u2[m])
    m = code == GEOMETRIC
    if m.any():
        out[m] = _geometric_inv(np.where(first[m], p1[m], p2[m]), u2[m])
    return out


def demand_draw(f, mse, u1, u2):
    f = np.asarray(f, dtype=np.float64)
    mse = np.asarray(mse, dtype=np.float64)
    out = np.zeros(f.shape, dtype=np.int64)
    tiny = (f < UNDERFLOW) & (mse < UNDERFLOW)
    live = ~tiny
    if live.any():
        code, k, p1, p2, q = fit_params(f[live], mse[live])
        d = draw_from(code, k, p1, p2, q, u1[live], u2[live])
        d[code == ZERO_MEAN_SPREAD] = 0
        d[(code < 0) & (code != ZERO_MEAN_SPREAD)] = -1
        out[live] = d
    return out


def dgp_paths(keys, f1, mse1, alpha, beta, horizon):
    n = keys.shape[0]
    demands = np.full((n, horizon), -1, dtype=np.int64)
    means = np.full((n, horizon), np.nan)
    variances = np.full((n, horizon), np.nan)
    status = np.full(n, -1, dtype=np.int64)
    f = np.full(n, float(f1))
    mse = np.full(n, float(mse1))
    live = np.arange(n)
    for t in range(horizon):
        if not live.size:
            break
        means[live, t] = f[live]
        variances[live, t] = mse[live]
        kl = keys[live]
        d = demand_draw(f[live], mse[live], _rng.uniform_array(kl, 2 * t), _rng.uniform_array(kl, 2 * t + 1))
        bad = d < 0
        if bad.any():
            status[live[bad]] = t
            live, d = live[~bad], d[~bad]
        demands[live, t] = d
        fl = f[live]
        err = d - fl
        f[live] = alpha * d + (1.0 - alpha) * fl
        mse[live] = beta * err * err + (1.0 - beta) * mse[live]
    return demands, means, variances, status


def scenario_sums(base_key, n, horizon, f1, mse1, alpha, beta):
    """Returns ``(sums, failed)``; ``failed`` is -1 or the first failing scenario index."""
    keys = _rng.child_keys(int(base_key), n)
    demands, _, _, status = dgp_paths(keys, f1, mse1, alpha, beta, horizon)
    failed = np.nonzero(status >= 0)[0]
    if failed.size:
        return None, int(failed[0])
    return demands.sum(axis=1), -1


def type1_rank(n, target):
    k = int(math.ceil(target * n))
    k = min(max(k, 1), n)
    while k > 1 and (k - 1) / n >= target:
        k -= 1
    while k < n and k / n < target:
        k += 1
    return k - 1


def empirical_level(base_key, n, lead_total, f, mse, alpha, beta, target):
    sums, failed = scenario_sums(base_key, n, lead_total, f, mse, alpha, beta)
    if failed >= 0:
        return -1
    return int(np.sort(sums)[type1_rank(n, target)])


def simulate_reps(rep_keys, method, f1, mse1, alpha, beta, lead, z, graves_c, target,
                  n_scen, s2_once, fixed_level, h, pen, horizon, warmup, record):
    reps = rep_keys.shape[0]
    lead_total = lead + 1
    metrics = np.full((reps, 6), np.nan)
    rec = np.zeros((reps, horizon if record else 0, 8))
    f = np.full(reps, float(f1))
    mse = np.full(reps, float(mse1))
    on_hand = np.zeros(reps, dtype=np.int64)
    back = np.zeros(reps, dtype=np.int64)
    pipe = np.zeros((reps, max(lead, 1)), dtype=np.int64)
    pipe_sum = np.zeros(reps, dtype=np.int64)
    status = np.full(reps, -1, dtype=np.int64)
    dkeys = _rng.derive_array(rep_keys, 0)
    acc_cost = np.zeros(reps)
    acc_ds = np.zeros(reps, dtype=np.int64)
    acc_d = np.zeros(reps, dtype=np.int64)
    acc_in = np.zeros(reps, dtype=np.int64)
    acc_oh = np.zeros(reps, dtype=np.int64)
    periods = np.zeros(reps, dtype=np.int64)

    def s2_levels(idx, t):
        out = np.zeros(idx.size)
        for j, r in enumerate(idx):
            base = int(_rng.derive(int(rep_keys[r]), t + 1))
            out[j] = empirical_level(base, n_scen, lead_total, f[r], mse[r], alpha, beta, target)
        return out

    once = None
    if method == S2 and s2_once:
        once = s2_levels(np.arange(reps), 0)
        status[once < 0] = 0

    for t in range(horizon):
        live = np.nonzero(status < 0)[0]
        if not live.size:
            break
        if method == S1A:
            level = lead_total * f[live] + z * math.sqrt(mse1) * graves_c
        elif method == S1B:
            level = lead_total * f[live] + z * np.sqrt(mse[live]) * graves_c
        elif method == S2:
            if s2_once:
                level = once[live]
            else:
                level = s2_levels(live, t)
                bad = level < 0
                if bad.any():
                    status[live[bad]] = t
                    live, level = live[~bad], level[~bad]
        else:
            level = np.full(live.size, float(fixed_level))
        ip = on_hand[live] - back[live] + pipe_sum[live]
        order = np.maximum(np.ceil(level).astype(np.int64) - ip, 0)
        if lead == 0:
            arrival = order
        else:
            head = t % lead
            arrival = pipe[live, head].copy()
            pipe[live, head] = order
            pipe_sum[live] += order - arrival
        kl = dkeys[live]
        d = demand_draw(f[live], mse[live], _rng.uniform_array(kl, 2 * t), _rng.uniform_array(kl, 2 * t + 1))
        bad = d < 0
        if bad.any():
            status[live[bad]] = t
            keep = ~bad
            live, d, order, arrival = live[keep], d[keep], order[keep], arrival[keep]
        net_before = on_hand[live] + arrival - back[live]
        served = np.maximum(np.minimum(net_before, d), 0)
        net = net_before - d
        on_hand[live] = np.maximum(net, 0)
        back[live] = np.maximum(-net, 0)
        cost = h * on_hand[live] + pen * back[live]
        stockout = (net_before < d).astype(np.int64)
        if record:
            rec[live, t, 0] = d
            rec[live, t, 1] = served
            rec[live, t, 2] = order
            rec[live, t, 3] = on_hand[live]
            rec[live, t, 4] = back[live]
            rec[live, t, 5] = arrival
            rec[live, t, 6] = stockout
            rec[live, t, 7] = cost
        if t >= warmup:
            acc_cost[live] += cost
            acc_ds[live] += served
            acc_d[live] += d
            acc_in[live] += 1 - stockout
            acc_oh[live] += on_hand[live]
            periods[live] += 1
        fl = f[live]
        err = d - fl
        f[live] = alpha * d + (1.0 - alpha) * fl
        mse[live] = beta * err * err + (1.0 - beta) * mse[live]

    done = (status < 0) & (periods > 0)
    metrics[:, 5] = np.where(status < 0, -1.0, status)
    if done.any():
        per = periods[done]
        metrics[done, 0] = acc_cost[done] / per
        has_d = acc_d[done] > 0
        fill = np.ones(per.size)
        fill[has_d] = acc_ds[done][has_d] / acc_d[done][has_d]
        metrics[done, 1] = fill
        metrics[done, 4] = (~has_d).astype(np.float64)
        metrics[done, 2] = acc_in[done] / per
        metrics[done, 3] = acc_oh[done] / per
    return metrics, rec


def arima_paths(keys, level1, sigma, alpha, horizon):
    n = keys.shape[0]
    demands = np.zeros((n, horizon), dtype=np.int64)
    levels = np.zeros((n, horizon))
    lvl = np.full(n, float(level1))
    two_pi = 2.0 * math.pi
    for t in range(horizon):
        levels[:, t] = lvl
        u1 = _rng.uniform_array(keys, 2 * t)
        u2 = _rng.uniform_array(keys, 2 * t + 1)
        eps = sigma * (np.sqrt(-2.0 * np.log(u1)) * np.cos(two_pi * u2))
        x = np.rint(lvl + eps)
        demands[:, t] = np.where(x > 0.0, x, 0.0).astype(np.int64)
        lvl = lvl + alpha * eps
    return demands, levels
