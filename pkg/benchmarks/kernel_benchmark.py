"""Compare the compiled kernels against the pure-Python fallback.

Times the conformal p-value transducer (the hot path: one rank query plus
one insert per step) and the CUSUM alarm scan, on continuous scores where
the ordered multiset keeps growing.  Both backends must return identical
arrays; the script checks that before it prints anything.

Usage: python3 benchmarks/kernel_benchmark.py [--sizes 1000,10000,100000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from ccd import _kernels_py

try:
    from ccd import _kernels as compiled
except ImportError:
    compiled = None


def best_of(repeat, fn, *args):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,10000,100000")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if compiled is None:
        print("compiled extension not built; showing pure-Python timings only")

    rng = np.random.default_rng(0)
    print(f"{'n':>8}  {'python':>10}  {'compiled':>10}  {'speedup':>7}")
    for n in sizes:
        scores = rng.normal(size=n)
        taus = rng.random(n)
        t_py = best_of(args.repeat, _kernels_py.conformal_pvalues, scores, taus)
        if compiled is None:
            print(f"{n:>8}  {t_py:>9.4f}s  {'-':>10}  {'-':>7}")
            continue
        if not np.array_equal(
            compiled.conformal_pvalues(scores, taus),
            _kernels_py.conformal_pvalues(scores, taus),
        ):
            print("backend mismatch on p-values; refusing to time a wrong kernel")
            return 1
        t_c = best_of(args.repeat, compiled.conformal_pvalues, scores, taus)
        print(f"{n:>8}  {t_py:>9.4f}s  {t_c:>9.4f}s  {t_py / t_c:>6.1f}x")

    n = 10**6
    lp = np.concatenate([[0.0], np.cumsum(rng.normal(scale=0.3, size=n))])
    log_c = float(np.log(3.0))
    t_py = best_of(args.repeat, _kernels_py.cusum_alarms, lp, log_c)
    line = f"alarm scan over {n} steps: python {t_py:.4f}s"
    if compiled is not None:
        if not np.array_equal(
            compiled.cusum_alarms(lp, log_c), _kernels_py.cusum_alarms(lp, log_c)
        ):
            print("backend mismatch on alarms; refusing to time a wrong kernel")
            return 1
        t_c = best_of(args.repeat, compiled.cusum_alarms, lp, log_c)
        line += f", compiled {t_c:.4f}s ({t_py / t_c:.1f}x)"
    print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
