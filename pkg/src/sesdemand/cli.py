"""Command-line entry point: ``sesdemand {fit,generate,simulate,experiment,bias-check}``.

Exit status is 0 on success, 2 for invalid input and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import dgp, harness, inventory
from .distfit import fit, moments
from .forecast import ForecastState, InfeasibleState
from .policy import DomainError, PolicySpec

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _fit(args) -> int:
    dist = fit(args.mean, args.var)
    mean, var = moments(dist)
    record = {"class": dist.tag, "params": {k: v for k, v in vars(dist).items()}, "mean": mean, "variance": var}
    if args.json:
        print(json.dumps(record, sort_keys=True))
    else:
        print(f"class     {dist.tag}")
        for k, v in record["params"].items():
            print(f"{k:<9} {v!r}")
        print(f"mean      {mean!r}")
        print(f"variance  {var!r}")
    return EXIT_OK


def _generate(args) -> int:
    init = ForecastState.create(args.f1, args.mse1, args.alpha, args.beta)
    if not init.is_feasible:
        raise harness.FeasibilityError(0, args.f1, args.mse1)
    paths = dgp.batch(init, args.horizon, args.paths, args.seed, workers=args.workers)
    dgp.write_paths_csv(paths, args.out)
    return EXIT_OK


def _simulate(args) -> int:
    config = harness.load_config(args.config)
    if config.n_cells != 1:
        raise harness.SchemaError("$", f"simulate needs a single-cell config, got {config.n_cells} cells")
    cell = next(config.cells())
    costs = inventory.CostParams(config.holding_cost, cell.penalty)
    spec = PolicySpec(cell.method, costs.target_p1, cell.lead_time + 1, config.scenario_count, config.s2_recompute)
    init = ForecastState.create(cell.case.f1, cell.case.mse1, cell.alpha)
    warmup = config.warmup_for(cell.lead_time)
    batch = inventory.run_episodes(spec, init, costs, cell.lead_time, config.horizon, warmup,
                                   harness.rep_keys(config.master_seed, config.reps), record=True)
    if batch.failed.any():
        batch.summary()  # raises InfeasibleState
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(inventory.RECORD_CSV_HEADER)
        for r in range(batch.records.shape[0]):
            for t in range(batch.records.shape[1]):
                d, ds, q, on_hand, back, _, stockout, cost = batch.records[r, t]
                writer.writerow([r, t + 1, int(d), int(ds), int(q), int(on_hand), int(back),
                                 format(cost, ".6g"), int(stockout)])
    summary = batch.summary()
    print(f"avg_cost {summary.avg_cost:.6g} (se {summary.avg_cost_se:.3g})  fill_rate {summary.fill_rate:.6g}  "
          f"in_stock {summary.in_stock:.6g}  avg_on_hand {summary.avg_on_hand:.6g}")
    return EXIT_OK


def _experiment(args) -> int:
    config = harness.load_config(args.config)
    rows = harness.run_to_directory(config, args.out, workers=args.workers)
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"warning: cell ({r.case_f1}, {r.case_mse1}, alpha={r.alpha}, l={r.lead_time}, "
              f"p={r.penalty}, {r.method}) failed: {r.error}", file=sys.stderr)
    print(f"{len(rows)} cells written to {args.out}")
    return EXIT_RUNTIME if failed else EXIT_OK


def _bias_check(args) -> int:
    table = dgp.bias_study(args.f1, args.sigma, args.alpha, args.paths, args.horizon, args.seed,
                           workers=args.workers)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows():
            writer.writerow([row[0], *(format(v, ".6g") for v in row[1:])])
    last = -1
    print(f"t={int(table.t[last])}: dgp mean {table.dgp_mean[last]:.4f} (se {table.dgp_se[last]:.4f}), "
          f"arima mean {table.arima_mean[last]:.4f} (se {table.arima_se[last]:.4f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sesdemand", description=__doc__.splitlines()[0])
    parser.add_argument("--workers", type=int, default=None, help="worker threads (default: $SESDEMAND_WORKERS or 1)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a discrete distribution to a mean and variance")
    p.add_argument("--mean", type=float, required=True)
    p.add_argument("--var", type=float, required=True)
    p.add_argument("--json", action="store_true", help="print one JSON object")
    p.set_defaults(func=_fit)

    p = sub.add_parser("generate", help="generate demand paths to CSV")
    p.add_argument("--f1", type=float, required=True)
    p.add_argument("--mse1", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=None, help="defaults to alpha")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_generate)

    p = sub.add_parser("simulate", help="per-period records for a single-cell config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_simulate)

    p = sub.add_parser("experiment", help="run a factorial grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_experiment)

    p = sub.add_parser("bias-check", help="compare process and rounded ARIMA means")
    p.add_argument("--f1", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_bias_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (harness.SchemaError, harness.FeasibilityError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleState as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
