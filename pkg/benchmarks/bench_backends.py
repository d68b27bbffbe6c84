"""Compare the numba and numpy backends on full distributions.

    python benchmarks/bench_backends.py [--sizes 6,8,10] [--repeat 3]

Each size runs n = m; the numba timings exclude the first (compiling) call.
"""

import argparse
import time

from loslap import _kernels
from loslap.core import OpCounter, haar_random_unitary
from loslap.lattice import distribution


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="6,8,10")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = [b for b in _kernels.BACKENDS if b != "numba" or _kernels.HAS_NUMBA]
    print(f"{'n=m':>4} {'flops':>12} " + " ".join(f"{b + ' s':>10}" for b in backends)
          + f" {'speedup':>8} {'max diff':>9}")
    for n in sizes:
        u = haar_random_unitary(n, n)
        results, times = {}, {}
        for b in backends:
            with _kernels.use_backend(b):
                distribution(haar_random_unitary(3, 0), 2)  # warm-up
                st = OpCounter()
                results[b] = distribution(u, n, stats=st)
                times[b] = best_time(lambda: distribution(u, n), args.repeat)
        ref = results[backends[0]]
        diff = max(max(abs(r[s] - ref[s]) for s in ref) for r in results.values())
        speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        print(f"{n:>4} {st.flops:>12} " + " ".join(f"{times[b]:>10.4f}" for b in backends)
              + f" {speed:>8.1f} {diff:>9.1e}")


if __name__ == "__main__":
    main()
