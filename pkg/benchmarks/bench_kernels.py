"""Benchmark the compiled cubic kernels against the pure-NumPy fallback.

The characteristic-cubic solve is the toolkit's hot kernel: every operation
touches it once per retained mode.  Run:

    python benchmarks/bench_kernels.py [n_modes ...]
"""

import sys
import time

import numpy as np

from cnsmax import FluidParams
from cnsmax._kernels import _ref
from cnsmax.spectral import _char_cubic_coeffs

try:
    from cnsmax._kernels import _fast
except ImportError:
    _fast = None


def bench(fn, args, repeats=7):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(sizes):
    p = FluidParams(rho_s=1.0, u_s=1.0, kappa=1.0, mu=1.0, b=1.0)
    print(f"{'modes':>10} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for m in sizes:
        ns = np.concatenate([np.arange(-m, 0), np.arange(1, m + 1)])
        a2, a1, a0 = _char_cubic_coeffs(p, ns)
        t_ref = bench(_ref.char_roots_batch, (a2, a1, a0))
        if _fast is None:
            print(f"{2 * m:>10} {t_ref * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>9}")
            continue
        t_fast = bench(_fast.char_roots_batch, (a2, a1, a0))
        def by_imag(arr):
            order = np.argsort(arr.imag, axis=1)
            return np.take_along_axis(arr, order, axis=1)

        ref = by_imag(_ref.char_roots_batch(a2, a1, a0))
        fast = by_imag(_fast.char_roots_batch(a2, a1, a0))
        err = np.max(np.abs(ref - fast) / (1.0 + np.abs(ref)))
        print(
            f"{2 * m:>10} {t_ref * 1e3:>10.3f}ms {t_fast * 1e3:>10.3f}ms "
            f"{t_ref / t_fast:>8.2f}x   (max diff {err:.1e})"
        )


if __name__ == "__main__":
    sizes = [int(v) for v in sys.argv[1:]] or [100, 1000, 10_000, 100_000]
    main(sizes)
