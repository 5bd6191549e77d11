"""Time the weighted Gram contraction: compiled extension vs numpy.

Shapes mirror what the assembly actually feeds the kernel: cell volume
terms (many entities, moderate quadrature), face terms (more entities,
smaller tables) and the vector-valued variant used by the curl-curl
block.

Run:  python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from eddydg import kernels

CASES = (
    ("cells  P1", 20000, 11, 12, 12, False),
    ("cells  P2", 20000, 24, 30, 30, False),
    ("faces  P1", 40000, 6, 12, 12, False),
    ("curl   P1", 20000, 11, 12, 12, True),
)


def _bench(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    opts = ap.parse_args()

    if kernels.BACKEND != "compiled":
        print("note: compiled extension unavailable, comparing numpy to itself")
    rng = np.random.default_rng(0)
    print(f"{'case':10s} {'shape':>22s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, ne, nq, ni, nj, vec in CASES:
        if vec:
            A = rng.standard_normal((ne, nq, ni, 3))
            B = rng.standard_normal((ne, nq, nj, 3))
        else:
            A = rng.standard_normal((ne, nq, ni))
            B = rng.standard_normal((ne, nq, nj))
        w = rng.random((ne, nq))
        if vec:
            ww = np.repeat(w, 3, axis=1)
            aa = A.transpose(0, 1, 3, 2).reshape(ne, 3 * nq, ni)
            bb = B.transpose(0, 1, 3, 2).reshape(ne, 3 * nq, nj)
        else:
            ww, aa, bb = w, A, B
        ww, aa, bb = (np.ascontiguousarray(v) for v in (ww, aa, bb))
        t_np = _bench(kernels._gram_numpy, (ww, aa, bb), opts.repeats)
        if kernels.BACKEND == "compiled":
            t_c = _bench(kernels._gram_compiled, (ww, aa, bb), opts.repeats)
        else:
            t_c = t_np
        shape = f"({ne},{nq},{ni})x({nj})"
        print(f"{name:10s} {shape:>22s} {t_np * 1e3:9.1f}ms {t_c * 1e3:9.1f}ms {t_np / t_c:7.2f}x")


if __name__ == "__main__":
    main()
