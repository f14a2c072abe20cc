"""Compare the compiled and numpy enumeration kernels.

    python benchmarks/bench_kernels.py --sizes 16 20 24 --threads 1 4
"""
import argparse
import time

import numpy as np

from minimax_sphere import _kernels
from minimax_sphere.core import enumerate_patterns


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[12, 16, 20, 24])
    parser.add_argument("--p", type=int, default=3)
    parser.add_argument("--threads", type=int, nargs="+", default=[1])
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = sorted(_kernels.BACKENDS)
    print(f"active backend: {_kernels.BACKEND}; available: {', '.join(backends)}")
    header = f"{'n':>4} {'patterns':>10} " + " ".join(
        f"{b + '/t' + str(t):>14}" for b in backends for t in (args.threads if b == "cython" else [1]))
    print(header + "   speedup")
    rng = np.random.default_rng(0)
    for n in args.sizes:
        pts = rng.standard_normal((n, args.p))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        row, timing = [], {}
        for b in backends:
            for t in (args.threads if b == "cython" else [1]):
                sec = best_of(lambda: enumerate_patterns(pts, 1e-9, backend=b, num_threads=t), args.repeats)
                timing[(b, t)] = sec
                row.append(f"{sec * 1e3:>12.2f}ms")
        speed = ""
        if ("cython", 1) in timing:
            speed = f"{timing[('python', 1)] / timing[('cython', 1)]:>8.1f}x"
        print(f"{n:>4} {2 ** (n - 1):>10} " + " ".join(row) + "   " + speed)


if __name__ == "__main__":
    main()
