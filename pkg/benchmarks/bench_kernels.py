"""Timing of the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--m 1000] [--n 100 250] [--repeat 3]

Both backends run on the same batch of sorted GPD samples; the script also
reports the largest disagreement between them.
"""

import argparse
import time

import numpy as np

from gpdnorm import _pykernels
from gpdnorm.estimators import Method, _quartile_index
from gpdnorm.gpd import GpdParams, sample_gpd

try:
    from gpdnorm import _kernels
except ImportError:
    _kernels = None


def make_batch(m, n, seed=0):
    rng = np.random.default_rng(seed)
    X = np.sort(np.stack([sample_gpd(n, GpdParams(0.5, 1.0), rng) for _ in range(m)]), axis=1)
    return np.ascontiguousarray(X)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def run(m, sizes, repeat):
    rows = []
    for n in sizes:
        X = make_batch(m, n)
        xmax = X[:, -1].copy()
        xq = X[:, _quartile_index(n) - 1].copy()
        cases = {
            Method.ZS.value: lambda k: k.zs_batch(X, xmax, xq),
            Method.ML.value: lambda k: k.ml_batch(X),
        }
        for name, call in cases.items():
            t_py, out_py = best_of(lambda: call(_pykernels), repeat)
            if _kernels is None:
                rows.append((name, n, t_py, float("nan"), float("nan"), float("nan")))
                continue
            t_c, out_c = best_of(lambda: call(_kernels), repeat)
            diff = float(np.nanmax(np.abs(out_py[1] - out_c[1])))
            rows.append((name, n, t_py, t_c, t_py / t_c, diff))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=1000, help="rows per batch")
    ap.add_argument("--n", type=int, nargs="+", default=[25, 100, 500])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':>6} {'n':>5} {'python s':>10} {'compiled s':>11} {'speedup':>8} {'max|dxi|':>10}")
    for name, n, t_py, t_c, sp, diff in run(args.m, args.n, args.repeat):
        print(f"{name:>6} {n:>5} {t_py:>10.4f} {t_c:>11.4f} {sp:>8.2f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
