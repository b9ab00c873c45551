"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Reports the best wall time of each kernel on both backends and checks that
they produce the same numbers.
"""

import argparse
import sys
import timeit

import numpy as np

from bjjcavity import _backend
from bjjcavity.model import EPS_POLE, ReducedParams
from bjjcavity.portrait import sample_grid

FIG1 = ReducedParams.from_tilt(3.0, 0.02, -0.65, 0.07)


def dopri_case(kern, t_end=100.0):
    kt, ka = FIG1.pump.knots()
    ts = np.linspace(0.0, t_end, 2001)
    return lambda: kern.integrate_dopri(-0.75, 0.0, FIG1.r, FIG1.tilt_scale, FIG1.B, FIG1.C,
                                        kt, ka, ts, 1e-10, 1e-12, 0.01, 10_000_000, EPS_POLE, False)


def rk4_case(kern, t_end=20.0):
    kt, ka = FIG1.pump.knots()
    ts = np.linspace(0.0, t_end, 2001)
    return lambda: kern.integrate_rk4(-0.75, 0.0, FIG1.r, FIG1.tilt_scale, FIG1.B, FIG1.C,
                                      kt, ka, ts, 1e-3, 10_000_000, EPS_POLE, False)


def marching_case(kern, n=512):
    grid = sample_grid(FIG1, n, n)
    centers = grid.cell_centers()
    return lambda: kern.marching_segments(grid.values, centers, 1.3, True)


CASES = [
    ("dopri5, t=100", dopri_case),
    ("rk4 h=1e-3, t=20", rk4_case),
    ("marching squares 512x512", marching_case),
]


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _backend.ckernels is None:
        print("compiled kernels not built; only the Python backend is timed")
    print(f"{'kernel':<28}{'python [s]':>12}{'cython [s]':>12}{'speed-up':>10}")
    for name, make in CASES:
        py_fn = make(_backend.pykernels)
        t_py = best(py_fn, args.repeat)
        if _backend.ckernels is None:
            print(f"{name:<28}{t_py:>12.4f}{'-':>12}{'-':>10}")
            continue
        c_fn = make(_backend.ckernels)
        t_c = best(c_fn, args.repeat)
        a, b = py_fn(), c_fn()
        if isinstance(a, tuple):
            same = a[0] == b[0] and np.allclose(a[2], b[2], rtol=0, atol=1e-11)
        else:
            same = np.array_equal(np.asarray(a), np.asarray(b))
        flag = "" if same else "  MISMATCH"
        print(f"{name:<28}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x{flag}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
