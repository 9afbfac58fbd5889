"""Time each hot kernel in its numba and numpy flavour.

    python benchmarks/bench_kernels.py [--repeat N] [--scale S]

Both flavours are called directly, so the STEGMARK_DISABLE_NUMBA flag does
not matter here.  The first numba call (compilation) is excluded.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from stegmark import _kernels
from stegmark.pvdstego import RangeTable


def _inputs(scale: int, rng: np.random.Generator):
    table = RangeTable()
    n_pairs = 65536 * scale
    small = rng.integers(0, 128, n_pairs).astype(np.int64)
    large = small + rng.integers(0, 128, n_pairs)
    skip = _kernels.pvd_skip_numpy(small, large, table.lo, table.hi, table.which)
    bits = rng.integers(0, 2, 3 * n_pairs).astype(np.uint8)
    blocks = rng.integers(0, 256, (4096 * scale, 8, 8)).astype(np.float64)
    pixels = rng.integers(0, 256, (65536 * scale, 3)).astype(np.int64)
    centroids = rng.integers(0, 256, (8, 3)).astype(np.int64)
    data = rng.integers(0, 256, (1 << 20) * scale).astype(np.uint8)
    return {
        "permutation": (262144 * scale, 0x0123456789ABCDEF),
        "fnv1a64": (data,),
        "svd_batch": (blocks,),
        "assign": (pixels, centroids),
        "pvd_skip": (small, large, table.lo, table.hi, table.which),
        "pvd_embed": (small, large, skip, bits, table.lo, table.nbits, table.which),
        "pvd_extract": (small, large, skip, table.lo, table.nbits, table.which),
    }


def _best(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=int, default=1, help="multiply every input size")
    ap.add_argument("--only", nargs="*", choices=sorted(_kernels.KERNELS), help="subset of kernels")
    args = ap.parse_args(argv)

    inputs = _inputs(args.scale, np.random.default_rng(7))
    names = args.only or list(_kernels.KERNELS)
    print(f"{'kernel':<12} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name in names:
        jit, ref = _kernels.KERNELS[name]
        call_args = inputs[name]
        jit(*call_args)  # compile
        t_jit = _best(jit, call_args, args.repeat)
        t_ref = _best(ref, call_args, args.repeat)
        print(f"{name:<12} {t_jit * 1e3:>10.3f} {t_ref * 1e3:>10.3f} {t_ref / t_jit:>7.1f}x")


if __name__ == "__main__":
    main()
