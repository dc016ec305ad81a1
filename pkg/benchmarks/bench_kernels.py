"""Time the numpy and compiled kernel backends side by side.

Usage: python3 benchmarks/bench_kernels.py [--N 32] [--repeat 20]

Each kernel is timed on arrays shaped like one solver step at resolution N.
The last rows time a full IF-RK4 step with each backend, run in a separate
interpreter because the backend is chosen at import.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lerayalpha import kernels
from lerayalpha.spectral import make_lattice

STEP_SNIPPET = """
import timeit
from lerayalpha import kernels
from lerayalpha.fields import random_band
from lerayalpha.solver import FluidParams, IFIntegrator
from lerayalpha.spectral import FilterSpec
integ = IFIntegrator(FluidParams(0.05, FilterSpec(1.0, 0.2)), {N}, 0.01)
u = random_band({N}, 1).coeffs.reshape(3, -1).copy()
integ.step(u, 0.0)
t = min(timeit.repeat(lambda: integ.step(u, 0.0), number=1, repeat={repeat}))
print(kernels.BACKEND, t)
"""


def kernel_cases(N, rng):
    lat = make_lattice(N)
    M = N**3
    ubar = rng.standard_normal((3, M))
    grad = rng.standard_normal((3, 3, M))
    c = rng.standard_normal((3, lat.size)) + 1j * rng.standard_normal((3, lat.size))
    w = rng.random(lat.size)
    arrs = [c.copy() for _ in range(5)]
    e1, e2 = rng.random(lat.size), rng.random(lat.size)
    out_r = np.empty((3, M))
    out_c = np.empty_like(c)

    def cases(mod):
        return {
            "advective_product": lambda: mod.advective_product(ubar, grad, out_r),
            "weighted_square_sum": lambda: mod.weighted_square_sum(c, w),
            "project_truncate": lambda: mod.project_truncate(
                c.copy(), lat.k_flat, lat.inv_k2_flat, lat.mask_flat),
            "rk4_combine": lambda: mod.rk4_combine(*arrs, e1, e2, 0.01, out_c),
        }

    return cases


def best(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def step_time(N, repeat, pure):
    env = dict(os.environ, LERAYALPHA_PURE="1" if pure else "0")
    code = STEP_SNIPPET.format(N=N, repeat=repeat)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    try:
        ext = kernels.get_backend("cython")
    except ImportError:
        ext = None
        print("compiled kernels not built; timing the numpy backend only")
    cases = kernel_cases(args.N, np.random.default_rng(0))
    py_cases = cases(kernels.get_backend("python"))
    ext_cases = cases(ext) if ext is not None else {}

    print(f"N = {args.N}, best of {args.repeat}")
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}")
    for name, fn in py_cases.items():
        tp = best(fn, args.repeat) * 1e3
        if name in ext_cases:
            tc = best(ext_cases[name], args.repeat) * 1e3
            print(f"{name:<22}{tp:12.3f}{tc:13.3f}{tp / tc:9.2f}")
        else:
            print(f"{name:<22}{tp:12.3f}{'-':>13}{'-':>9}")

    _, tp = step_time(args.N, args.repeat, pure=True)
    line = f"{'full IF-RK4 step':<22}{tp * 1e3:12.3f}"
    if ext is not None:
        backend, tc = step_time(args.N, args.repeat, pure=False)
        line += f"{tc * 1e3:13.3f}{tp / tc:9.2f}" if backend == "cython" else ""
    print(line)


if __name__ == "__main__":
    main()
