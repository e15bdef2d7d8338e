"""Time the numba kernels against the vectorised numpy fallback.

    python3 benchmarks/bench_backends.py --paths 2000 --horizon 200

Each kernel runs once to warm up (JIT compile or cache load), then ``--repeat``
times; the best time is reported.  Outputs of the two backends are compared
for equality on the way.
"""

import argparse
import time

import numpy as np

from sesdemand import engine
from sesdemand._accel import NUMBA_AVAILABLE
from sesdemand.policy import graves_factor, normal_quantile
from sesdemand.rng import child_keys, seed_key


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(args):
    keys = child_keys(seed_key(args.seed), args.paths)
    reps = child_keys(seed_key(args.seed + 1), args.reps)
    z, c = normal_quantile(0.95), graves_factor(0.1, 3)
    return {
        "dgp_paths": (lambda b: engine.dgp_paths(keys, 2.0, 9.0, 0.1, 0.1, args.horizon, backend=b)[0],
                      args.paths * args.horizon),
        "arima_paths": (lambda b: engine.arima_paths(keys, 2.0, 2.0, 0.1, args.horizon, backend=b)[0],
                        args.paths * args.horizon),
        "empirical_level": (lambda b: np.array([engine.empirical_level(seed_key(args.seed), args.scenarios, 3,
                                                                       2.0, 9.0, 0.1, 0.1, 0.95, backend=b)]),
                            args.scenarios * 3),
        "simulate_reps S1b": (lambda b: engine.simulate_reps(reps, 1, 2.0, 9.0, 0.1, 0.1, 2, z, c, 0.95, 1, False,
                                                             0.0, 1.0, 19.0, args.horizon, 6, backend=b)[0],
                              args.reps * args.horizon),
        "simulate_reps S2": (lambda b: engine.simulate_reps(reps[:args.s2_reps], 2, 2.0, 9.0, 0.1, 0.1, 2, z, c, 0.95,
                                                            args.s2_scenarios, False, 0.0, 1.0, 19.0, args.horizon,
                                                            6, backend=b)[0],
                             args.s2_reps * args.horizon * args.s2_scenarios * 3),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=2000)
    parser.add_argument("--horizon", type=int, default=100)
    parser.add_argument("--reps", type=int, default=2000)
    parser.add_argument("--scenarios", type=int, default=10_000)
    parser.add_argument("--s2-reps", type=int, default=20)
    parser.add_argument("--s2-scenarios", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = ["numba", "numpy"] if NUMBA_AVAILABLE else ["numpy"]
    print(f"{'kernel':<20}{'draws':>12}" + "".join(f"{b + ' [s]':>14}" for b in backends) + f"{'speedup':>10}  equal")
    for name, (fn, draws) in cases(args).items():
        times, outs = [], []
        for b in backends:
            t, out = best_of(lambda: fn(b), args.repeat)
            times.append(t)
            outs.append(out)
        speedup = times[-1] / times[0] if len(times) == 2 else float("nan")
        equal = all(np.array_equal(outs[0], o, equal_nan=True) for o in outs[1:])
        print(f"{name:<20}{draws:>12,}" + "".join(f"{t:>14.4f}" for t in times) + f"{speedup:>9.1f}x  {equal}")


if __name__ == "__main__":
    main()
