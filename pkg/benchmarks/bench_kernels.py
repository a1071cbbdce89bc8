"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel: best-of-N seconds per call for each backend and
the speedup. Exits with status 1 if the compiled extension is not built.
"""
import argparse
import sys
import timeit

import numpy as np

from advtune import _kernels


def cases(rng):
    n = 60
    rects = np.column_stack([rng.uniform(0, 100, n), rng.uniform(0, 100, n),
                             rng.uniform(0.3, 5, n), rng.uniform(0.3, 5, n),
                             rng.uniform(0, 2 * np.pi, n)])
    ids = np.arange(n, dtype=np.int32)
    view = (0.0, 100.0, 100 / 32, 100 / 32, 32, 32)
    x, w, grid = rng.random(1000), rng.random(1000), (np.arange(32) + 0.5) / 32
    a, b = rects[0].copy(), rects[0].copy()
    b[0] += 0.7
    return {
        "overlap_fraction (1 pair)": lambda k: k.overlap_fraction(a, b),
        "gibbs_energy (60 marks)": lambda k: k.gibbs_energy(rects, 1000.0, 1e6),
        "max_overlap (60 marks)": lambda k: k.max_overlap(rects),
        "paint_labels (60 marks, 32x32)": lambda k: k.paint_labels(rects, ids, *view),
        "paint_mask (60 marks, 32x32)": lambda k: k.paint_mask(rects, *view),
        "weighted_kde (1000 x 32)": lambda k: k.weighted_kde(x, w, grid, 0.1),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels.compiled is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 1
    backends = {"cython": _kernels.compiled, "python": _kernels.fallback}
    print(f"{'kernel':34s} {'cython s/call':>14s} {'python s/call':>14s} {'speedup':>8s}")
    for name, fn in cases(np.random.default_rng(0)).items():
        t = {}
        for label, mod in backends.items():
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            t[label] = min(timer.repeat(args.repeat, number)) / number
        print(f"{name:34s} {t['cython']:14.3e} {t['python']:14.3e} "
              f"{t['python'] / t['cython']:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
