"""Compare the compiled and numpy distance kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Shapes mirror the GA placement step: a population of query points scanned
against a high cost set of a few thousand sites. Timings are best-of-N
to damp machine noise.
"""

import argparse
import timeit

import numpy as np

from robustmin import kernels

CASES = [  # (queries, sites, dim)
    (20, 1_000, 2),
    (20, 5_000, 10),
    (100, 10_000, 10),
    (20, 5_000, 100),
]


def bench(backend, P, H, repeat):
    kernels.use_backend(backend)
    sites = kernels.Sites(H)
    kernels.min_sq_dists(P, sites)  # lay out once outside the timer
    t = timeit.repeat(lambda: kernels.min_sq_dists(P, sites), number=1, repeat=repeat)
    return min(t)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        from robustmin import _kernels  # noqa: F401
    except ImportError:
        raise SystemExit("compiled kernels are not built; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'queries':>8} {'sites':>7} {'dim':>4} {'numpy ms':>9} {'cython ms':>10} {'speedup':>8}")
    for q, m, n in CASES:
        P = rng.uniform(-1, 1, (q, n))
        H = rng.uniform(-1, 1, (m, n))
        slow = bench("python", P, H, args.repeat)
        fast = bench("cython", P, H, args.repeat)
        results = []
        for backend in ("python", "cython"):
            kernels.use_backend(backend)
            results.append(kernels.min_sq_dists(P, H))
        (d_py, i_py), (d_c, i_c) = results
        assert np.array_equal(d_py, d_c) and np.array_equal(i_py, i_c)
        print(f"{q:8d} {m:7d} {n:4d} {slow * 1e3:9.2f} {fast * 1e3:10.2f} {slow / fast:7.1f}x")


if __name__ == "__main__":
    main()
