"""Time the filter and the estimator on the compiled and pure-Python backends.

Usage::

    python benchmarks/bench_filter.py [--T 3000] [--repeat 5]

The estimation timing runs in a subprocess per backend, since the backend
is chosen once at import.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from scoredriven import BACKENDS, ModelSpec, filter_pass, simulate_series

MODELS = {
    "pois": (ModelSpec.build("pois"), [0.1, 0.08, 0.85]),
    "norm": (ModelSpec.build("norm", par_static=[False, False]), [0.1, 0.15, 0.8, 0.05, 0.05, 0.9]),
    "t": (ModelSpec.build("t", scaling="fisher_inv"), [0.0, 0.1, 0.9, 1.0, 8.0]),
}

ESTIMATE = """
import time
from scoredriven import ModelSpec, estimate, simulate_series
spec = ModelSpec.build("pois")
y = simulate_series(spec, [0.1, 0.08, 0.85], {T}, seed=1).y_sim
t0 = time.perf_counter()
est = estimate(y, spec, hessian=False)
print(time.perf_counter() - t0, est.optim["evaluations"])
"""


def best_of(func, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_filters(T, repeat):
    print(f"filter pass, T={T}, best of {repeat}")
    print(f"{'model':<8}" + "".join(f"{b:>14}" for b in BACKENDS) + ("     speedup" if len(BACKENDS) > 1 else ""))
    for name, (spec, coef) in MODELS.items():
        y = simulate_series(spec, coef, T, seed=0).y_sim
        row = {b: best_of(lambda b=b: filter_pass(spec, coef, y, backend=b), repeat) for b in BACKENDS}
        line = f"{name:<8}" + "".join(f"{row[b] * 1e3:>12.2f}ms" for b in BACKENDS)
        if len(BACKENDS) > 1:
            line += f"{row['python'] / row['compiled']:>11.1f}x"
        print(line)


def bench_estimate(T):
    print(f"\nestimate pois, T={T}, no Hessian")
    for backend in BACKENDS:
        env = dict(os.environ, SCOREDRIVEN_PURE_PYTHON="1" if backend == "python" else "0")
        out = subprocess.run([sys.executable, "-c", ESTIMATE.format(T=T)], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        print(f"{backend:<10}{float(out[0]):>10.2f}s  {out[1]} evaluations")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--T", type=int, default=3000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-estimate", action="store_true")
    args = parser.parse_args()
    np.seterr(all="ignore")
    bench_filters(args.T, args.repeat)
    if not args.skip_estimate:
        bench_estimate(args.T)


if __name__ == "__main__":
    main()
