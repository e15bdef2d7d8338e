"""Demand generation consistent with simple exponential smoothing.

Each period's demand is drawn from the two-moment fit of the current SES
forecast ``(f, mse)``; the forecast is then updated with the drawn demand.
SES applied to the generated demands therefore reproduces, by construction,
the conditional mean and variance the process used.

:func:`arima_trajectory` is the comparison baseline: an ARIMA(0,1,1) stream
whose emitted values are rounded and truncated at zero.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, _vector, engine
from .distfit import CLASS_TAGS
from .forecast import ForecastState, InfeasibleState, ses_update
from .parallel import map_chunks
from .rng import Stream, as_stream, child_keys, seed_key

PATH_CSV_HEADER = ("path_id", "t", "demand", "mu", "sigma2", "a", "class")
_TAGS = {**CLASS_TAGS, _kernels.INFEASIBLE: "infeasible", _kernels.ZERO_MEAN_SPREAD: "point"}


def variability_series(means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """``a_t`` for every period (NaN where the mean is 0)."""
    means = np.asarray(means, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.asarray(variances, dtype=float) / (means * means) - 1.0 / means
    return np.where(means > 0, a, np.nan)


def class_series(means: np.ndarray, variances: np.ndarray) -> list[str]:
    """Tag of the distribution fitted in every period."""
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    codes = _vector.fit_params(means, variances)[0]
    tiny = (means < _kernels.UNDERFLOW) & (variances < _kernels.UNDERFLOW)
    codes = np.where(tiny, _kernels.POINT, codes)
    return [_TAGS[int(c)] for c in codes]


@dataclass
class DemandPath:
    """A realised trajectory with the mean and variance behind every draw."""

    demands: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    seed: int

    def __post_init__(self):
        self.demands = np.asarray(self.demands, dtype=np.int64)
        self.means = np.asarray(self.means, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)
        if not (len(self.demands) == len(self.means) == len(self.variances)):
            raise ValueError("demands, means and variances must have equal length")

    def __len__(self) -> int:
        return len(self.demands)

    @property
    def variability(self) -> np.ndarray:
        return variability_series(self.means, self.variances)

    @property
    def classes(self) -> list[str]:
        return class_series(self.means, self.variances)

    def rows(self, path_id: int = 0):
        a = self.variability
        for t, (d, mu, s2, at, tag) in enumerate(zip(self.demands, self.means, self.variances, a, self.classes), 1):
            yield (path_id, t, int(d), float(mu), float(s2), float(at), tag)


def next_demand(state: ForecastState, rng: Stream | int | None) -> tuple[int, ForecastState]:
    """Draw one demand from the process at ``state`` and return it with the updated state.

    Consumes two uniforms from ``rng``.  Raises :class:`InfeasibleState` if the
    state's moments admit no integer distribution (reachable only when
    ``alpha != beta``).
    """
    stream = as_stream(rng)
    u1 = stream.uniform()
    u2 = stream.uniform()
    d = int(_kernels.demand_draw(state.f, state.mse, u1, u2))
    if d < 0:
        raise InfeasibleState(state.f, state.mse)
    return d, ses_update(state, d)


def trajectory(init: ForecastState, horizon: int, rng: Stream | int | None) -> DemandPath:
    """Iterate :func:`next_demand` ``horizon`` times from ``init``."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    stream = as_stream(rng)
    key = stream.key
    demands = np.empty(horizon, dtype=np.int64)
    means = np.empty(horizon)
    variances = np.empty(horizon)
    state = init
    for t in range(horizon):
        means[t] = state.f
        variances[t] = state.mse
        try:
            demands[t], state = next_demand(state, stream)
        except InfeasibleState as exc:
            raise InfeasibleState(exc.mu, exc.sigma2, step=t + 1) from None
    return DemandPath(demands, means, variances, key)


class PathBatch(Sequence):
    """``n`` demand paths stored as ``(n, horizon)`` arrays; indexing yields :class:`DemandPath`."""

    def __init__(self, demands, means, variances, keys):
        self.demands = demands
        self.means = means
        self.variances = variances
        self.keys = keys

    def __len__(self) -> int:
        return self.demands.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return DemandPath(self.demands[i], self.means[i], self.variances[i], int(self.keys[i]))

    def rows(self):
        for i in range(len(self)):
            yield from self[i].rows(i)


def _run_paths(keys, init: ForecastState, horizon: int, workers, backend):
    def work(a, b):
        return engine.dgp_paths(keys[a:b], init.f, init.mse, init.alpha, init.beta, horizon, backend=backend)

    parts = map_chunks(work, len(keys), workers)
    return tuple(np.concatenate([p[j] for p in parts]) for j in range(4))


def batch(init: ForecastState, horizon: int, n: int, master_seed: int,
          workers: int | None = None, backend: str | None = None) -> PathBatch:
    """``n`` independent paths; path ``i`` uses the substream ``derive(seed_key(master_seed), i)``.

    Identical to ``trajectory(init, horizon, Stream(key_i))`` for every ``i`` and
    independent of ``workers``.
    """
    if horizon < 1 or n < 1:
        raise ValueError("horizon and n must be positive")
    keys = child_keys(seed_key(master_seed), n)
    demands, means, variances, status = _run_paths(keys, init, horizon, workers, backend)
    failed = np.nonzero(status >= 0)[0]
    if failed.size:
        i = int(failed[0])
        t = int(status[i])
        raise InfeasibleState(means[i, t], variances[i, t], step=t + 1)
    return PathBatch(demands, means, variances, keys)


def _box_muller(u1: float, u2: float) -> float:
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def arima_trajectory(init: ForecastState, horizon: int, rng: Stream | int | None) -> DemandPath:
    """Rounded, zero-truncated ARIMA(0,1,1) demands with level ``init.f`` and noise variance ``init.mse``.

    The level ``L`` is real and never truncated: ``d_t = max(0, round(L_t + e_t))``
    (round half to even) and ``L_{t+1} = L_t + alpha*e_t``.  ``means`` records
    the level; ``variances`` the constant noise variance.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    stream = as_stream(rng)
    sigma = math.sqrt(init.mse)
    level = init.f
    demands = np.empty(horizon, dtype=np.int64)
    levels = np.empty(horizon)
    for t in range(horizon):
        levels[t] = level
        eps = sigma * _box_muller(stream.uniform(), stream.uniform())
        x = float(np.rint(level + eps))
        demands[t] = int(x) if x > 0.0 else 0
        level = level + init.alpha * eps
    return DemandPath(demands, levels, np.full(horizon, init.mse), stream.key)


@dataclass
class BiasTable:
    """Per-period cross-sectional means and standard errors of both generators."""

    t: np.ndarray
    dgp_mean: np.ndarray
    arima_mean: np.ndarray
    dgp_se: np.ndarray
    arima_se: np.ndarray
    meta: dict = field(default_factory=dict)

    columns = ("t", "dgp_mean", "arima_mean", "dgp_se", "arima_se")

    def rows(self):
        for row in zip(self.t, self.dgp_mean, self.arima_mean, self.dgp_se, self.arima_se):
            yield (int(row[0]), *(float(v) for v in row[1:]))


def _mean_se(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = x.astype(float)
    return x.mean(axis=0), x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])


def bias_study(f1: float, sigma: float, alpha: float, n: int, horizon: int, master_seed: int,
               workers: int | None = None, backend: str | None = None) -> BiasTable:
    """Compare the process with the rounded ARIMA baseline under common substreams.

    Path ``i`` of both generators uses the same key, so the two columns are
    driven by identical uniforms.
    """
    if n < 2:
        raise ValueError("bias_study needs at least two paths")
    init = ForecastState.create(f1, sigma * sigma, alpha)
    if not init.is_feasible:
        raise InfeasibleState(init.f, init.mse)
    keys = child_keys(seed_key(master_seed), n)
    demands, _, _, status = _run_paths(keys, init, horizon, workers, backend)
    if (status >= 0).any():
        i = int(np.nonzero(status >= 0)[0][0])
        raise InfeasibleState(init.f, init.mse, step=int(status[i]) + 1)

    def work(a, b):
        return engine.arima_paths(keys[a:b], init.f, sigma, alpha, horizon, backend=backend)[0]

    arima = np.concatenate(map_chunks(work, n, workers))
    dm, dse = _mean_se(demands)
    am, ase = _mean_se(arima)
    meta = {"f1": f1, "sigma": sigma, "alpha": alpha, "paths": n, "horizon": horizon, "seed": master_seed}
    return BiasTable(np.arange(1, horizon + 1), dm, am, dse, ase, meta)


def write_paths_csv(paths, destination) -> None:
    """Serialise a :class:`PathBatch` (or iterable of paths) to CSV."""
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PATH_CSV_HEADER)
        if isinstance(paths, PathBatch):
            writer.writerows(paths.rows())
        else:
            for i, path in enumerate(paths):
                writer.writerows(path.rows(i))
