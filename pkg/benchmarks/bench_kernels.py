"""Time the compiled kernels against the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat N] [--sizes 1000,100000]``.
Prints one line per kernel and size with the best-of-N time for each
backend, the speedup and the largest difference between the two results.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from qpgreen import kernels


def cases(n: int, rng: np.random.Generator):
    d = np.sort(rng.uniform(0.05, n / 10.0, n))
    ph = np.exp(1j * rng.uniform(-np.pi, np.pi, n))
    qr = rng.uniform(-50.0, 50.0, n)
    kp = np.where(np.arange(n) < 8, rng.uniform(0.1, 5.0, n) + 0j, 1j * np.linspace(0.5, 200.0, n))
    return {
        "direct_image_sum 2D": ("direct_image_sum", (d, ph, 40.0 * (1 + 1e-3j), 2)),
        "direct_image_sum 3D": ("direct_image_sum", (d, ph, 40.0 * (1 + 1e-3j), 3)),
        "dual_sum codim-1": ("dual_sum", (qr, kp, 0.03, 0)),
        "dual_sum chain-3D": ("dual_sum", (qr, kp, 0.03, 1)),
        "laplace_image_sum 2D": ("laplace_image_sum", (d, ph, 0.1, 2)),
        "laplace_image_sum 3D": ("laplace_image_sum", (d, ph, 0.1, 3)),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="1000,100000")
    args = ap.parse_args()
    impls = kernels.backends()
    if "cython" not in impls:
        raise SystemExit("compiled extension not available; build with pip install -e . --no-build-isolation")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22} {'n':>8} {'cython [s]':>12} {'python [s]':>12} {'speedup':>8} {'max |diff|':>11}")
    for n in (int(s) for s in args.sizes.split(",")):
        for label, (fn, a) in cases(n, rng).items():
            times, vals = {}, {}
            for name in ("cython", "python"):
                f = getattr(impls[name], fn)
                vals[name] = f(*a)
                number = max(1, int(2e5 // n))
                times[name] = min(timeit.repeat(lambda: f(*a), number=number, repeat=args.repeat)) / number
            diff = abs(vals["cython"] - vals["python"])
            print(f"{label:<22} {n:>8} {times['cython']:>12.3e} {times['python']:>12.3e} "
                  f"{times['python'] / times['cython']:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
