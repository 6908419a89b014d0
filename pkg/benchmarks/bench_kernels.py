"""Time the compiled and numpy convolution kernels on a CNN-sized workload.

    python benchmarks/bench_kernels.py [--batch 64] [--repeat 5]

Prints the best-of-N wall time for forward and gradient passes of every
product term used by AF3 and F1, and the speedup of the compiled backend.
"""
import argparse
import time

import numpy as np

from qinspired.activations import Kind, product_terms
from qinspired.kernels import backends


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--channels", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    patches = args.batch * 26 * 26
    theta = np.pi * rng.uniform(0, 1, (patches, 9))
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    phi = rng.uniform(-np.pi, np.pi, (args.channels, 9))
    gout = rng.normal(size=(patches, args.channels))
    found = backends()
    print(f"{patches} patches x {args.channels} channels; backends: {', '.join(found)}")
    for kind in (Kind.AF3, Kind.F1):
        terms = product_terms(kind, 9)
        timings = {}
        for name, mod in found.items():
            def run(mod=mod):
                for t in terms:
                    mod.product_forward(t.mode, t.sites, cos_t, sin_t, phi, t.sign)
                    mod.product_grad(t.mode, t.sites, cos_t, sin_t, phi, t.sign, gout)

            timings[name] = _best(run, args.repeat)
            print(f"{kind.name:<4} {name:<7} {timings[name] * 1e3:9.2f} ms")
        if "cython" in timings:
            print(f"{kind.name:<4} speedup {timings['python'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()
