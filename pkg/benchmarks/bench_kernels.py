"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--rows N] [--dim D] [--repeat R]

Both backends are imported directly, so TAILCERT_BACKEND does not matter
here. The first numba call (compilation or cache load) is timed separately.
"""

import argparse
import time

import numpy as np

from tailcert.kernels import get_backend


def cases(rows, d, rng):
    Y = rng.standard_normal((rows, d)) * 3.0
    A = rng.standard_normal((d, d))
    S = A @ A.T / d + 0.1 * np.eye(d)
    s, Q = np.linalg.eigh(S)
    L = float(s[-1])
    V = np.eye(d)
    R = Q @ np.diag(s ** 0.25) @ Q.T
    atoms = np.concatenate([V, -V])
    small = max(rows // 20, 1)
    return {
        "project_l1_rows": lambda k: k.project_l1_rows(Y, 1.0),
        "metric_project_l1_rows": lambda k: k.metric_project_l1_rows(Y[:small], S, L, 1.0, 5000, 1e-12),
        "metric_project_l2_rows": lambda k: k.metric_project_l2_rows(Y @ Q, s, 1.0, 200),
        "mnp_rows": lambda k: k.mnp_rows(Y[:small], R, atoms, 1000, 1e-12),
        "vertex_argmax_rows": lambda k: k.vertex_argmax_rows(Y, V),
    }


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    nb, npy = get_backend("numba"), get_backend("numpy")
    rng = np.random.default_rng(0)
    print(f"rows={args.rows} dim={args.dim} (projection kernels use rows/20)")
    print(f"{'kernel':<24}{'numba first':>12}{'numba':>10}{'numpy':>10}{'speedup':>9}  max|diff|")
    for name, fn in cases(args.rows, args.dim, rng).items():
        t0 = time.perf_counter()
        out_nb = fn(nb)
        first = time.perf_counter() - t0
        t_nb = best_of(lambda: fn(nb), args.repeat)
        t_np = best_of(lambda: fn(npy), args.repeat)
        out_np = fn(npy)
        a = out_nb[0] if isinstance(out_nb, tuple) else out_nb
        b = out_np[0] if isinstance(out_np, tuple) else out_np
        diff = float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float))))
        print(f"{name:<24}{first:>12.4f}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>8.1f}x  {diff:.2e}")


if __name__ == "__main__":
    main()
