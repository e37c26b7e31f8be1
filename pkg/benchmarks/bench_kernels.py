"""Time the python and compiled solid-harmonic kernels on the same inputs.

    python benchmarks/bench_kernels.py [--points 2000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from blab import kernels
from blab._tables import basis_tables

CASES = ((2, 40), (3, 20), (4, 12), (5, 8))


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = ["python"] + (["compiled"] if kernels._compiled is not None else [])
    rng = np.random.default_rng(0)
    print(f"{'d':>2} {'kmax':>4} {'op':<14}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for d, kmax in CASES:
        x = rng.standard_normal((args.points, d))
        offsets, norms = basis_tables(d, kmax)
        coef = rng.standard_normal(int(offsets[d, kmax + 1]))
        for op in ("solid_basis", "eval_expansion"):
            times = []
            for n in names:
                be = kernels.get_backend(n)
                if op == "solid_basis":
                    times.append(best_of(lambda: be.solid_basis(x, kmax, offsets, norms), args.repeat))
                else:
                    times.append(best_of(lambda: be.eval_expansion(x, coef, kmax, offsets, norms), args.repeat))
            speed = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else f"{'-':>10}"
            print(f"{d:>2} {kmax:>4} {op:<14}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
