"""Time the compiled core against the pure-Python fallback.

    python benchmarks/bench_backends.py [--repeat 5] [--csv out.csv]
"""

import argparse
import csv
import sys
import timeit

import numpy as np

from pcakrr import _backend
from pcakrr._fallback import PROFILE_CODES


def _cases(rng):
    for n in (250, 1000, 2000):
        xs = rng.uniform(-1, 1, (n, 10))
        for profile in ("gaussian", "wendland_c2"):
            code = PROFILE_CODES[profile]
            yield f"radial_matrix {profile}", n, lambda b, xs=xs, code=code: _backend.radial_matrix(xs, xs, code, 1.0, b)
    for n in (50, 200, 400):
        cost = rng.uniform(0, 1, (n, n))
        yield "linear_assignment", n, lambda b, cost=cost: _backend.linear_assignment(cost, b)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", help="also write results here")
    args = ap.parse_args(argv)
    if _backend.BACKEND != "compiled":
        print("compiled core not built; only the fallback can be timed", file=sys.stderr)
        return 1
    rows = []
    print(f"{'operation':<28}{'n':>6}{'python [ms]':>14}{'compiled [ms]':>15}{'speedup':>10}")
    for name, n, fn in _cases(np.random.default_rng(args.seed)):
        times = {}
        for b in ("python", "compiled"):
            fn(b)
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) * 1e3
        speed = times["python"] / times["compiled"]
        rows.append((name, n, times["python"], times["compiled"], speed))
        print(f"{name:<28}{n:>6}{times['python']:>14.2f}{times['compiled']:>15.2f}{speed:>9.1f}x")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["operation", "n", "python_ms", "compiled_ms", "speedup"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
