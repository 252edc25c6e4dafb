"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Each case is run on every available backend; the table reports the best
wall time per call and the speedup of the compiled backend.
"""
import argparse
import timeit

import numpy as np

from gpcpdf._backend import available_backends, get_kernels


def cases(k):
    rng = np.random.default_rng(0)
    c = rng.uniform(-1, 1, 101)
    d = np.polynomial.legendre.legder(c)
    x = np.linspace(-1, 1, 20_000)
    mono = np.polynomial.legendre.poly2leg([0, 2, 0, 1])
    dmono = np.polynomial.legendre.legder(mono)
    ys = np.linspace(-2.999, 2.999, 20_000)
    return {
        "clenshaw deg 100, 20k points": lambda: k.clenshaw(c, x),
        "clenshaw value+derivative": lambda: k.clenshaw_with_derivative(c, d, x),
        "gauss_legendre N=2000": lambda: k.gauss_legendre_nodes(2000),
        "gauss_lobatto N=2000": lambda: k.gauss_lobatto_interior(2000),
        "branch inversion, 20k roots": lambda: k.invert_series(mono, dmono, -1.0, 1.0, -3.0, 3.0, ys),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = available_backends()
    timings = {}
    for name in backends:
        for label, fn in cases(get_kernels(name)).items():
            number = 3
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            timings.setdefault(label, {})[name] = best
    header = f"{'case':32s}" + "".join(f"{b:>12s}" for b in backends)
    if "cython" in backends:
        header += f"{'speedup':>10s}"
    print(header)
    for label, row in timings.items():
        line = f"{label:32s}" + "".join(f"{row[b] * 1e3:10.3f}ms" for b in backends)
        if "cython" in backends:
            line += f"{row['python'] / row['cython']:9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
