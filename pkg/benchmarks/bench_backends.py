"""Compare the numba-compiled and pure-numpy kernel backends.

Times the symmetric eigensolver (the hot kernel: one call per extraction
step) and an end-to-end greedy extraction run under both backends.

    python benchmarks/bench_backends.py [--dims 16 32 64 128] [--reps 30]
"""

import argparse
import time

import numpy as np

import wpcontent as w
from wpcontent._kernels import HAVE_NUMBA


def _time(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eigen(backend, dims, reps):
    w.set_backend(backend)
    out = {}
    rng = np.random.default_rng(7)
    for dim in dims:
        a = rng.standard_normal((dim, dim))
        m = w.SymMatrix(a + a.T)
        w.sym_eigen(m)  # warm / compile
        out[dim] = _time(lambda: w.sym_eigen(m), reps)
    return out


def bench_greedy(backend, reps):
    w.set_backend(backend)
    rng = np.random.default_rng(11)
    g = rng.standard_normal((32, 32))
    r = w.make_psd(w.SymMatrix(g.T @ g / 32))
    tree = w.build_shannon_tree(5, 3)
    w.trace_greedy(r, tree, 3, max_steps=4)  # warm

    def run():
        w.trace_greedy(r, tree, 3, max_steps=32)

    return _time(run, reps)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--reps", type=int, default=30)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    eigen = {b: bench_eigen(b, args.dims, args.reps) for b in backends}
    greedy = {b: bench_greedy(b, max(3, args.reps // 3)) for b in backends}

    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for dim in args.dims:
        row = [eigen[b][dim] for b in backends]
        speed = row[0] / row[-1] if len(row) > 1 else 1.0
        print(
            f"{'jacobi eigh dim ' + str(dim):<24}"
            + "".join(f"{1e3 * t:>10.3f}ms" for t in row)
            + f"{speed:>9.1f}x"
        )
    row = [greedy[b] for b in backends]
    speed = row[0] / row[-1] if len(row) > 1 else 1.0
    print(
        f"{'trace greedy 32x32 x32':<24}"
        + "".join(f"{1e3 * t:>10.3f}ms" for t in row)
        + f"{speed:>9.1f}x"
    )


if __name__ == "__main__":
    main()
