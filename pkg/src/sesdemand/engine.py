"""Backend-neutral entry points to the batch kernels.

Each function takes ``backend=None`` (use ``SESDEMAND_BACKEND``) or an explicit
``"numba"`` / ``"numpy"``.  Keys are ``uint64`` stream keys from
:mod:`sesdemand.rng`.
"""

from __future__ import annotations

import numpy as np

from . import _kernels, _vector
from ._accel import resolve_backend

METRIC_COLUMNS = ("avg_cost", "fill_rate", "in_stock", "avg_on_hand", "zero_demand", "status")
RECORD_COLUMNS = ("d", "d_s", "q", "I", "b", "arrival", "stockout", "cost")


def _keys(keys) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(keys, dtype=np.uint64).ravel())


def dgp_paths(keys, f1, mse1, alpha, beta, horizon, backend=None):
    """Demand paths for each key: ``(demands, means, variances, status)``.

    ``status[i]`` is -1, or the 0-based step where path ``i`` became infeasible
    (its remaining demands are -1).
    """
    keys = _keys(keys)
    if resolve_backend(backend) == "numpy":
        return _vector.dgp_paths(keys, float(f1), float(mse1), float(alpha), float(beta), int(horizon))
    n = keys.shape[0]
    demands = np.empty((n, horizon), dtype=np.int64)
    means = np.full((n, horizon), np.nan)
    variances = np.full((n, horizon), np.nan)
    status = np.empty(n, dtype=np.int64)
    _kernels.dgp_paths(keys, float(f1), float(mse1), float(alpha), float(beta), int(horizon),
                       demands, means, variances, status)
    return demands, means, variances, status


def empirical_level(base_key, n, lead_total, f, mse, alpha, beta, target, backend=None):
    """Type-1 empirical ``target``-quantile of ``lead_total``-period demand sums; -1 on failure."""
    if resolve_backend(backend) == "numpy":
        return _vector.empirical_level(int(base_key), int(n), int(lead_total), float(f), float(mse),
                                       float(alpha), float(beta), float(target))
    sums = np.empty(int(n), dtype=np.int64)
    return int(_kernels.empirical_level(np.uint64(base_key), int(n), int(lead_total), float(f), float(mse),
                                        float(alpha), float(beta), float(target), sums))


def simulate_reps(rep_keys, method, f1, mse1, alpha, beta, lead, z, graves_c, target, n_scen,
                  s2_once, fixed_level, h, pen, horizon, warmup, record=False, backend=None):
    """Run one inventory episode per key; returns ``(metrics, records)``.

    ``metrics`` has the columns of :data:`METRIC_COLUMNS`; ``records`` is
    ``(reps, horizon, 8)`` with :data:`RECORD_COLUMNS` when ``record`` is set,
    otherwise empty.
    """
    keys = _keys(rep_keys)
    args = (int(method), float(f1), float(mse1), float(alpha), float(beta), int(lead), float(z),
            float(graves_c), float(target), int(n_scen), bool(s2_once), float(fixed_level), float(h),
            float(pen), int(horizon), int(warmup))
    if resolve_backend(backend) == "numpy":
        return _vector.simulate_reps(keys, *args, bool(record))
    reps = keys.shape[0]
    metrics = np.empty((reps, 6))
    rec = np.zeros((reps, horizon if record else 0, 8))
    _kernels.simulate_reps(keys, *args, metrics, bool(record), rec)
    return metrics, rec


def arima_paths(keys, level1, sigma, alpha, horizon, backend=None):
    """Truncated and rounded ARIMA(0,1,1) demands plus the internal levels."""
    keys = _keys(keys)
    if resolve_backend(backend) == "numpy":
        return _vector.arima_paths(keys, float(level1), float(sigma), float(alpha), int(horizon))
    n = keys.shape[0]
    demands = np.empty((n, horizon), dtype=np.int64)
    levels = np.empty((n, horizon))
    _kernels.arima_paths(keys, float(level1), float(sigma), float(alpha), int(horizon), demands, levels)
    return demands, levels
