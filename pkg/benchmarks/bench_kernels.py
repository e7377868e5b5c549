"""Timing of one forward-propagator application: numba vs numpy vs FFT chirp.

    python benchmarks/bench_kernels.py --sizes 2001 4001 8001 --repeat 3
"""
import argparse
import time

import numpy as np

from quadprop import _accel, _backend, get_model, kernel_spec
from quadprop.evolution import apply_kernel, gaussian


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[2001, 4001, 8001])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--t", type=float, default=0.5)
    args = parser.parse_args(argv)

    kernel = kernel_spec(get_model("free_particle"), "forward", args.t).quadratic()
    methods = [("numpy", "direct", "numpy")]
    if _backend.HAVE_NUMBA:
        methods.insert(0, ("numba", "direct", "numba"))
    methods.append(("fft", "fft", _backend.get_backend()))

    if _backend.HAVE_NUMBA:
        # compile outside the timed region
        _accel.bilinear_sum_numba(np.zeros(3), np.zeros(3), 1.0, np.zeros(3))

    print(f"{'n':>7}  " + "  ".join(f"{m[0]:>10}" for m in methods) + "  max|diff|")
    for n in args.sizes:
        psi = gaussian(n=n)
        times, outs = [], []
        for _, method, backend in methods:
            previous = _backend.set_backend(backend)
            try:
                dt, out = best_of(lambda: apply_kernel(kernel, psi, method=method), args.repeat)
            finally:
                _backend.set_backend(previous)
            times.append(dt)
            outs.append(out)
        spread = max(np.max(np.abs(o - outs[0])) for o in outs)
        print(f"{n:>7}  " + "  ".join(f"{dt * 1e3:>8.2f}ms" for dt in times) + f"  {spread:.1e}")


if __name__ == "__main__":
    main()
