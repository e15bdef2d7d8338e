"""Factorial experiment runner and result serialisation.

A config is a JSON document.  Every list field also accepts a single value::

    {
      "cases": [{"f1": 2, "mse1": 4}, {"f1": 2, "mse1": 9}],
      "alphas": [0.02, 0.05, 0.1],
      "lead_times": [1, 2, 4],
      "penalties": [9, 19, 99],
      "holding_cost": 1,
      "methods": ["s1a", "s1b", "s2"],
      "reps": 10000, "horizon": 100, "warmup": "2L",
      "scenario_count": 10000, "s2_recompute": "every_period",
      "master_seed": 0
    }

Replication ``r`` of every cell uses the same substream
``derive(seed_key(master_seed), r)``, so cells are compared under common random
numbers and a cell's results never depend on which other cells are present.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .distfit import fit
from .forecast import ForecastState, feasible
from .inventory import CostParams, RunMetrics, run_episodes
from .parallel import map_chunks
from .policy import Method, PolicySpec
from .rng import child_keys, seed_key

RESULT_HEADER = (
    "case_f1", "case_mse1", "alpha", "lead_time", "penalty", "target_p1", "method",
    "avg_cost", "avg_cost_se", "fill_rate", "fill_rate_se", "in_stock", "in_stock_se",
    "avg_on_hand", "avg_on_hand_se", "reps", "horizon", "warmup", "seed",
)

DEFAULTS = {
    "cases": [{"f1": 2.0, "mse1": 4.0}, {"f1": 2.0, "mse1": 9.0}],
    "alphas": [0.02, 0.05, 0.1],
    "lead_times": [1, 2, 4],
    "penalties": [9.0, 19.0, 99.0],
    "holding_cost": 1.0,
    "methods": ["s1a", "s1b", "s2"],
    "reps": 10_000,
    "horizon": 100,
    "warmup": "2L",
    "scenario_count": 10_000,
    "s2_recompute": "every_period",
    "master_seed": 0,
}

_ALIASES = {"case": "cases", "alpha": "alphas", "lead_time": "lead_times", "penalty": "penalties",
            "method": "methods", "h": "holding_cost", "seed": "master_seed"}


class SchemaError(ValueError):
    """The config document does not follow the schema; ``path`` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class FeasibilityError(ValueError):
    """A demand case has moments no integer distribution can have."""

    def __init__(self, index: int, f1: float, mse1: float):
        super().__init__(f"cases[{index}]: (f1={f1!r}, mse1={mse1!r}) is not a feasible mean/variance pair")
        self.index = index


@dataclass(frozen=True)
class Case:
    f1: float
    mse1: float


@dataclass(frozen=True)
class ExperimentConfig:
    cases: tuple[Case, ...]
    alphas: tuple[float, ...]
    lead_times: tuple[int, ...]
    penalties: tuple[float, ...]
    holding_cost: float
    methods: tuple[Method, ...]
    reps: int
    horizon: int
    warmup: str | int
    scenario_count: int
    s2_recompute: str
    master_seed: int

    def warmup_for(self, lead_time: int) -> int:
        return 2 * (lead_time + 1) if self.warmup == "2L" else int(self.warmup)

    def cells(self):
        """Grid cells in output order: case, alpha, lead time, penalty, method."""
        for case in self.cases:
            for alpha in self.alphas:
                for l in self.lead_times:
                    for p in self.penalties:
                        for m in self.methods:
                            yield Cell(case, alpha, l, p, m)

    @property
    def n_cells(self) -> int:
        return len(self.cases) * len(self.alphas) * len(self.lead_times) * len(self.penalties) * len(self.methods)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = [m.value for m in self.methods]
        return d


@dataclass(frozen=True)
class Cell:
    case: Case
    alpha: float
    lead_time: int
    penalty: float
    method: Method


@dataclass
class ResultRow:
    case_f1: float
    case_mse1: float
    alpha: float
    lead_time: int
    penalty: float
    target_p1: float
    method: str
    metrics: RunMetrics | None
    reps: int
    horizon: int
    warmup: int
    seed: int
    error: str | None = field(default=None)

    def values(self) -> tuple:
        m = self.metrics
        stats = (
            (m.avg_cost, m.avg_cost_se, m.fill_rate, m.fill_rate_se, m.in_stock, m.in_stock_se,
             m.avg_on_hand, m.avg_on_hand_se) if m is not None else (math.nan,) * 8
        )
        return (self.case_f1, self.case_mse1, self.alpha, self.lead_time, self.penalty, self.target_p1,
                self.method, *stats, self.reps, self.horizon, self.warmup, self.seed)


def _as_list(value, path):
    if isinstance(value, list):
        if not value:
            raise SchemaError(path, "must not be empty")
        return value
    return [value]


def _real(value, path, lo=None, hi=None, lo_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(path, "must be finite")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise SchemaError(path, f"must be {'>' if lo_open else '>='} {lo}, got {value!r}")
    if hi is not None and value > hi:
        raise SchemaError(path, f"must be <= {hi}, got {value!r}")
    return value


def _integer(value, path, lo):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise SchemaError(path, f"expected an integer, got {value!r}")
    if value < lo:
        raise SchemaError(path, f"must be >= {lo}, got {value!r}")
    return value


def _case(value, path) -> Case:
    if isinstance(value, list) and len(value) == 2:
        value = {"f1": value[0], "mse1": value[1]}
    if not isinstance(value, dict):
        raise SchemaError(path, "expected {\"f1\": ..., \"mse1\": ...} or [f1, mse1]")
    extra = set(value) - {"f1", "mse1"}
    if extra:
        raise SchemaError(f"{path}.{sorted(extra)[0]}", "unknown key")
    for key in ("f1", "mse1"):
        if key not in value:
            raise SchemaError(f"{path}.{key}", "missing")
    return Case(_real(value["f1"], f"{path}.f1", 0.0), _real(value["mse1"], f"{path}.mse1", 0.0))


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a decoded document and apply defaults."""
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be an object")
    merged = dict(DEFAULTS)
    seen = {}
    for key, value in doc.items():
        name = _ALIASES.get(key, key)
        if name not in DEFAULTS:
            raise SchemaError(key, "unknown key")
        if name in seen:
            raise SchemaError(key, f"duplicates {seen[name]!r}")
        seen[name] = key
        merged[name] = value
    path = {name: seen.get(name, name) for name in DEFAULTS}

    raw_cases = merged["cases"]
    if isinstance(raw_cases, list) and len(raw_cases) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw_cases):
        raw_cases = [raw_cases]  # a bare [f1, mse1] pair
    cases = tuple(_case(c, f"{path['cases']}[{i}]") for i, c in enumerate(_as_list(raw_cases, path["cases"])))
    alphas = tuple(_real(a, f"{path['alphas']}[{i}]", 0.0, 1.0, lo_open=True)
                   for i, a in enumerate(_as_list(merged["alphas"], path["alphas"])))
    lead_times = tuple(_integer(l, f"{path['lead_times']}[{i}]", 0)
                       for i, l in enumerate(_as_list(merged["lead_times"], path["lead_times"])))
    penalties = tuple(_real(p, f"{path['penalties']}[{i}]", 0.0, lo_open=True)
                      for i, p in enumerate(_as_list(merged["penalties"], path["penalties"])))
    h = _real(merged["holding_cost"], path["holding_cost"], 0.0, lo_open=True)
    methods = []
    for i, m in enumerate(_as_list(merged["methods"], path["methods"])):
        try:
            methods.append(Method.parse(m))
        except ValueError as exc:
            raise SchemaError(f"{path['methods']}[{i}]", str(exc)) from None
    warmup = merged["warmup"]
    if warmup != "2L":
        warmup = _integer(warmup, path["warmup"], 0)
    horizon = _integer(merged["horizon"], path["horizon"], 1)
    max_warm = 2 * (max(lead_times) + 1) if warmup == "2L" else warmup
    if max_warm >= horizon:
        raise SchemaError(path["horizon"], f"must exceed the warm-up ({max_warm})")
    recompute = merged["s2_recompute"]
    if recompute not in ("every_period", "once"):
        raise SchemaError(path["s2_recompute"], "must be 'every_period' or 'once'")
    config = ExperimentConfig(
        cases=cases, alphas=alphas, lead_times=lead_times, penalties=penalties, holding_cost=h,
        methods=tuple(methods), reps=_integer(merged["reps"], path["reps"], 1), horizon=horizon,
        warmup=warmup, scenario_count=_integer(merged["scenario_count"], path["scenario_count"], 1),
        s2_recompute=recompute, master_seed=_integer(merged["master_seed"], path["master_seed"], 0),
    )
    for i, case in enumerate(config.cases):
        if not feasible(case.f1, case.mse1) or case.f1 == 0 < case.mse1:
            raise FeasibilityError(i, case.f1, case.mse1)
        if case.mse1 == 0:
            fit(case.f1, case.mse1)  # non-integral point masses are caught here
    return config


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return config_from_dict(doc)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def rep_keys(master_seed: int, reps: int) -> np.ndarray:
    return child_keys(seed_key(master_seed), reps)


def run_cell(config: ExperimentConfig, cell: Cell, keys=None, workers=None, backend=None) -> ResultRow:
    """All replications of one cell; a failure becomes a row with NaN metrics and ``error`` set."""
    keys = rep_keys(config.master_seed, config.reps) if keys is None else keys
    costs = CostParams(config.holding_cost, cell.penalty)
    warmup = config.warmup_for(cell.lead_time)
    row = ResultRow(cell.case.f1, cell.case.mse1, cell.alpha, cell.lead_time, cell.penalty, costs.target_p1,
                    cell.method.label, None, config.reps, config.horizon, warmup, config.master_seed)
    try:
        init = ForecastState.create(cell.case.f1, cell.case.mse1, cell.alpha)
        spec = PolicySpec(cell.method, costs.target_p1, cell.lead_time + 1, config.scenario_count,
                          config.s2_recompute)

        def work(a, b):
            return run_episodes(spec, init, costs, cell.lead_time, config.horizon, warmup, keys[a:b],
                                backend=backend).metrics

        metrics = np.concatenate(map_chunks(work, len(keys), workers))
        failed = metrics[:, 5] >= 0
        if failed.any():
            r = int(np.nonzero(failed)[0][0])
            row.error = f"infeasible forecast state in replication {r} at period {int(metrics[r, 5]) + 1}"
        else:
            row.metrics = RunMetrics.aggregate(metrics)
    except (ArithmeticError, ValueError) as exc:
        row.error = str(exc)
    return row


def run_experiment(config: ExperimentConfig, workers: int | None = None, backend: str | None = None) -> list[ResultRow]:
    """One row per grid cell in grid order; output does not depend on ``workers``."""
    keys = rep_keys(config.master_seed, config.reps)
    return [run_cell(config, cell, keys, workers, backend) for cell in config.cells()]


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".6g")


def format_results(rows) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("no result rows to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def write_results(rows, destination) -> int:
    """Write the results CSV and return the number of bytes written.

    Raises ``ValueError`` (and creates nothing) when ``rows`` is empty.
    """
    data = format_results(rows).encode()
    with open(destination, "wb") as fh:
        fh.write(data)
    return len(data)


def read_results(source) -> list[dict]:
    """Parse a results CSV back into dicts of floats (``method`` stays a string)."""
    with open(source, newline="") as fh:
        out = []
        for rec in csv.DictReader(fh):
            out.append({k: (v if k == "method" else float(v)) for k, v in rec.items()})
        return out


def write_config(config: ExperimentConfig, destination) -> None:
    with open(destination, "w", newline="\n") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_to_directory(config: ExperimentConfig, out_dir, workers=None, backend=None) -> list[ResultRow]:
    """Run the grid and write ``results.csv`` plus the resolved ``config.json`` into ``out_dir``."""
    rows = run_experiment(config, workers=workers, backend=backend)
    os.makedirs(out_dir, exist_ok=True)
    write_results(rows, os.path.join(out_dir, "results.csv"))
    write_config(config, os.path.join(out_dir, "config.json"))
    return rows
