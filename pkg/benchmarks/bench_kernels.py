"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from slowgrowth import _pykernels

try:
    from slowgrowth import _kernels
except ImportError:
    _kernels = None

PEND_COS = np.array([0.0, -1.0 / (4 * math.pi ** 2)])
PEND_SIN = np.zeros(2)


def cases():
    rng = np.random.default_rng(0)
    q, p = rng.uniform(0, 1, 256), rng.uniform(-0.5, 0.5, 256)
    zeros = np.zeros_like(q)
    frames = rng.normal(size=(20000, 3, 4))
    return {
        "strang (256 pts x 1000 steps)":
            lambda k: k.strang_fourier(q, p, PEND_COS, PEND_SIN, 1.0, 0.0, 0.0, 1e-3, 1000, False),
        "strang + jacobian":
            lambda k: k.strang_fourier(q, p, PEND_COS, PEND_SIN, 1.0, 0.3, 0.0, 1e-3, 1000, True),
        "strang double-double (256 x 200)":
            lambda k: k.strang_fourier_dd(q, zeros, p, zeros, PEND_COS, PEND_SIN, 1.0, 0.0, 0.0,
                                          1e-3, 200),
        "gram_det (20000 3-frames)": lambda k: k.gram_det(frames),
        "jacobi zeros (horizon 3, h=1e-5)": lambda k: k.jacobi_rk4_zeros(4 * math.pi ** 2, 3.0, 1e-5),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = [("python", _pykernels)] + ([("compiled", _kernels)] if _kernels else [])
    if _kernels is None:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'kernel':36s}" + "".join(f"{name:>12s}" for name, _ in backends) + "     speedup")
    for label, fn in cases().items():
        times = [min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
                 for _, k in backends]
        line = f"{label:36s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) == 2:
            line += f"  {times[0] / times[1]:9.1f}x"
        print(line, flush=True)


if __name__ == "__main__":
    main()
