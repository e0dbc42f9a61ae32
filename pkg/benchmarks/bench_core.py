"""Compare the compiled and pure-NumPy hot kernels, and the FFT and dense solvers.

    python3 benchmarks/bench_core.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from ridgeless import _pycore
from ridgeless.model import Grid
from ridgeless.oracle import solve_dense, solve_fft
from ridgeless.spectra import KernelSpec, build_spectrum

try:
    from ridgeless import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = [("python", _pycore)] + ([("compiled", _core)] if _core is not None else [])
    if _core is None:
        print("compiled extension not built; only the NumPy backend is timed")

    coeffs = np.random.default_rng(0).standard_normal(2 * 200_000 + 1)
    classes = np.random.default_rng(1).integers(0, 4096, size=1_000_000).astype(np.intp)
    values = np.random.default_rng(2).standard_normal(classes.size)
    pts = Grid(48, 2).points()

    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name, _ in backends))
    cases = [
        ("fold_axis 400k -> N=64", lambda m: m.fold_axis(coeffs, -200_000, 64)),
        ("fold_classes 1M -> 4096", lambda m: m.fold_classes(values, classes, 4096)),
        ("kernel_matrix laplace n=2304", lambda m: m.kernel_matrix(1, 1.0, pts)),
        ("kernel_matrix dirichlet n=2304", lambda m: m.kernel_matrix(2, 3.0, pts)),
    ]
    for label, fn in cases:
        row = [best_of(lambda: fn(m), args.repeat) for _, m in backends]
        print(f"{label:<28}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row))

    kernel = KernelSpec("laplace", 1.0)
    N = 4096
    spec = build_spectrum(kernel, N=N)
    y = np.random.default_rng(3).standard_normal(N)
    spec.class_stats(N)
    t_fft = best_of(lambda: solve_fft(spec, N, 1, y), args.repeat)
    t_dense = best_of(lambda: solve_dense(kernel, Grid(N), y, spec), 1)
    print(f"solve N=4096: fft {t_fft * 1e3:.2f}ms dense {t_dense * 1e3:.1f}ms speedup {t_dense / t_fft:.0f}x")


if __name__ == "__main__":
    main()
