"""Compare the compiled and vectorised implementations of each hot kernel.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Both
implementations are imported directly, so ``SURFACE_QBM_BACKEND`` does not
matter here.  Each line reports best-of-N wall time and the largest relative
difference between the two outputs.
"""
import argparse
import time

import numpy as np

from surface_qbm import kernels


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def kpar_case(rng, n=200_000, nseg=64):
    k0sq = np.full(n, 4.0 + 0j)
    kz = rng.uniform(0, 2, n) + 1j * rng.uniform(0, 0.1, n)
    w = rng.uniform(0, 1e-3, n) + 0j
    eps = np.full(n, -30 + 2j)
    seg = np.sort(rng.integers(0, nseg, n))
    return (kz, w, k0sq, eps, False, seg, nseg)


def langevin_case(rng, n=8192, steps=256):
    r = np.zeros((n, 2))
    p = rng.standard_normal((n, 2))
    noise = rng.standard_normal((steps, n, 2))
    drift = np.array([[0.02, 0.0], [0.0, 0.02]])
    chol = np.array([[0.1, 0.0], [0.0, 0.1]])
    return r, p, noise, drift, chol, 1.0, 0.01


def friction_case(rng, n=256):
    x = np.linspace(-1, 1, n, endpoint=False)
    rho = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2)) + 0j
    return rho, x, 0.1, 0.01, x[1] - x[0]


def rel_diff(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':12s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s} {'max rel diff':>13s}")

    cases = [
        ("kpar_sums", kernels.kpar_sums_numba, kernels.kpar_sums_numpy, kpar_case(rng), lambda o: o[0]),
        ("langevin", kernels.langevin_numba, kernels.langevin_numpy, langevin_case(rng), lambda o: o[1]),
        ("friction", kernels.friction_numba, kernels.friction_numpy, friction_case(rng), lambda o: o),
    ]
    for name, fast, slow, case, pick in cases:
        # state-mutating kernels get fresh copies every call
        def call(fn):
            return lambda: fn(*[c.copy() if isinstance(c, np.ndarray) else c for c in case])

        call(fast)()  # compile outside the timed region
        t_fast, out_fast = best_of(call(fast), args.repeat)
        t_slow, out_slow = best_of(call(slow), args.repeat)
        diff = rel_diff(pick(out_fast), pick(out_slow))
        print(f"{name:12s} {t_fast:11.4f} {t_slow:11.4f} {t_slow / t_fast:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
