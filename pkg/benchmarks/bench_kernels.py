"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each counting kernel on representative problem sizes with both
backends, checks that the counts agree, and prints a timing table.

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from calogero2d._kernels import (
    HAVE_NUMBA,
    _banded_border_inertia_loops,
    _banded_border_inertia_numpy,
    _jacobi_eigenvalues_loops,
    _sturm_inertia_loops,
)

if HAVE_NUMBA:
    from calogero2d._kernels import (
        _banded_border_inertia_numba,
        _jacobi_eigenvalues_numba,
        _sturm_inertia_numba,
    )


def timeit(fn, *args, repeats=5):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_sturm(n, repeats):
    rng = np.random.default_rng(0)
    diag = rng.normal(size=n)
    off = rng.normal(size=n - 1)
    args = (diag, off, 1e-12)
    rows = []
    t_np, r_np = timeit(lambda: _sturm_inertia_loops(*args), repeats=repeats)
    rows.append(("numpy", t_np, r_np))
    if HAVE_NUMBA:
        _sturm_inertia_numba(*args)  # compile
        t_nb, r_nb = timeit(lambda: _sturm_inertia_numba(*args), repeats=repeats)
        rows.append(("numba", t_nb, r_nb))
        assert r_nb == r_np, "backend counts disagree"
    return f"sturm tridiagonal n={n}", rows


def bench_banded(n, w, repeats):
    rng = np.random.default_rng(1)
    band = np.zeros((w + 1, n))
    band[0] = rng.normal(size=n) * 2
    for k in range(1, w + 1):
        band[k, : n - k] = rng.normal(size=n - k) * 0.3
    border = np.zeros((0, n))
    rows = []
    t_np, r_np = timeit(
        lambda: _banded_border_inertia_numpy(band.copy(), border.copy(), 1e-12),
        repeats=repeats,
    )
    rows.append(("numpy", t_np, r_np))
    if HAVE_NUMBA:
        _banded_border_inertia_numba(band.copy(), border.copy(), 1e-12)
        t_nb, r_nb = timeit(
            lambda: _banded_border_inertia_numba(band.copy(), border.copy(), 1e-12),
            repeats=repeats,
        )
        rows.append(("numba", t_nb, r_nb))
        assert r_nb == r_np, "backend counts disagree"
    return f"banded LDLt n={n} w={w}", rows


def bench_jacobi(d, repeats):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(d, d))
    a = (x + x.T) / 2
    rows = []
    t_np, r_np = timeit(lambda: _jacobi_eigenvalues_loops(a.copy(), 60, 1e-13), repeats=repeats)
    rows.append(("numpy", t_np, r_np))
    if HAVE_NUMBA:
        _jacobi_eigenvalues_numba(a.copy(), 60, 1e-13)
        t_nb, r_nb = timeit(
            lambda: _jacobi_eigenvalues_numba(a.copy(), 60, 1e-13), repeats=repeats
        )
        rows.append(("numba", t_nb, r_nb))
        assert np.allclose(r_nb, r_np, atol=1e-9 * max(1, abs(r_np).max()))
    return f"jacobi eigenvalues d={d}", rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller sizes, fewer repeats")
    args = ap.parse_args()
    repeats = 3 if args.quick else 7
    cases = [
        bench_sturm(20_000 if args.quick else 200_000, repeats),
        bench_banded(5_000 if args.quick else 20_000, 32 if args.quick else 96, repeats),
        bench_banded(2_000 if args.quick else 50_000, 100 if args.quick else 200, repeats),
        bench_jacobi(48, repeats),
    ]
    if not HAVE_NUMBA:
        print("numba not importable: numpy fallback timings only")
    print(f"{'case':<36s} {'backend':<8s} {'best time':>12s} {'speedup':>9s}")
    for label, rows in cases:
        base = rows[0][1]
        for backend, t, _ in rows:
            speed = base / t if t else float("inf")
            print(f"{label:<36s} {backend:<8s} {t * 1e3:>10.2f}ms {speed:>8.1f}x")


if __name__ == "__main__":
    main()
