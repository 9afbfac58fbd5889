"""The numba kernels and their numpy fallbacks must agree exactly."""

import os
import subprocess
import sys

import numpy as np
import pytest

from stegmark import _accel, _kernels
from stegmark.pvdstego import RangeTable

TABLE = RangeTable()


def both(name):
    return _kernels.KERNELS[name]


class TestEquivalence:
    @pytest.mark.parametrize("n, seed", [(1, 0), (2, 5), (8, 0), (1000, 2**64 - 1), (4097, 12345)])
    def test_permutation(self, n, seed):
        fast, slow = both("permutation")
        assert np.array_equal(fast(n, np.uint64(seed)), slow(n, np.uint64(seed)))

    def test_fnv(self, rng):
        fast, slow = both("fnv1a64")
        for n in (0, 1, 7, 1000):
            data = rng.integers(0, 256, n, dtype=np.uint8)
            assert int(fast(data)) == int(slow(data))

    def test_assign_with_ties(self, rng):
        fast, slow = both("assign")
        px = rng.integers(0, 4, (500, 3)).astype(np.int64)
        cents = np.array([[0, 0, 0], [2, 2, 2], [0, 0, 0], [1, 1, 1], [3, 3, 3], [2, 2, 2], [1, 0, 1], [0, 1, 0]], np.int64)
        lf, df = fast(px, cents)
        ls, ds = slow(px, cents)
        assert np.array_equal(lf, ls) and np.array_equal(df, ds)
        assert not np.any(lf == 2)

    def test_pvd(self, rng):
        skip_f, skip_s = both("pvd_skip")
        emb_f, emb_s = both("pvd_embed")
        ext_f, ext_s = both("pvd_extract")
        a, b = rng.integers(0, 256, (2, 5000))
        small, large = np.minimum(a, b).astype(np.int64), np.maximum(a, b).astype(np.int64)
        args = (TABLE.lo, TABLE.hi, TABLE.which)
        skip = skip_f(small, large, *args)
        assert np.array_equal(skip, skip_s(small, large, *args))
        skip = skip.astype(bool)
        bits = rng.integers(0, 2, 9000).astype(np.int64)
        sf, lf = emb_f(small, large, skip, bits, TABLE.lo, TABLE.nbits, TABLE.which)
        ss, ls = emb_s(small, large, skip, bits, TABLE.lo, TABLE.nbits, TABLE.which)
        assert np.array_equal(sf, ss) and np.array_equal(lf, ls)
        out_f = ext_f(sf, lf, skip, TABLE.lo, TABLE.nbits, TABLE.which)
        out_s = ext_s(sf, lf, skip, TABLE.lo, TABLE.nbits, TABLE.which)
        assert np.array_equal(out_f, out_s)
        assert np.array_equal(out_f[:9000], bits)

    def test_svd(self, rng):
        fast, slow = both("svd_batch")
        a = np.ascontiguousarray(rng.normal(size=(200, 8, 8)))
        f, s = fast(a), slow(a)
        assert np.allclose(f[1], s[1], rtol=1e-12, atol=1e-12)
        for x in (f, s):
            rec = np.einsum("bij,bj,bkj->bik", x[0], x[1], x[2])
            assert np.abs(rec - a).max() < 1e-12


class TestSwitch:
    def test_backend_reflects_flag(self):
        assert _accel.backend() == ("numba" if _accel.USE_NUMBA else "numpy")

    @pytest.mark.parametrize("flag, expect", [("1", "numpy"), ("0", "numba")])
    def test_env_flag(self, flag, expect):
        env = dict(os.environ, STEGMARK_DISABLE_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", "import stegmark; print(stegmark.backend())"],
            env=env, capture_output=True, text=True, check=True,
        )
        assert out.stdout.strip() == (expect if _accel.HAVE_NUMBA else "numpy")

    def test_fallback_end_to_end(self, tmp_path):
        code = (
            "import numpy as np\n"
            "from stegmark import RasterImage, StegoKey\n"
            "from stegmark.pvdstego import RangeTable, pvd_embed, pvd_extract\n"
            "from stegmark.svdwm import svdwm_embed, svdwm_verify\n"
            "r = np.random.default_rng(1)\n"
            "img = RasterImage(r.integers(0, 256, (32, 32), dtype=np.uint8))\n"
            "k = StegoKey(3)\n"
            "s = pvd_embed(img, b'abc', RangeTable(), k)\n"
            "assert pvd_extract(s, RangeTable(), k) == b'abc'\n"
            "w = svdwm_embed(img, k, k)\n"
            "assert not svdwm_verify(w, k, k).any()\n"
            "print(s.pixels.sum(), w.pixels.sum())\n"
        )
        runs = {}
        for flag in ("1", "0"):
            env = dict(os.environ, STEGMARK_DISABLE_NUMBA=flag)
            runs[flag] = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
        assert runs["1"] == runs["0"]


class TestBenchmark:
    def test_script_runs(self):
        script = os.path.join(os.path.dirname(__file__), "..", "benchmarks", "bench_kernels.py")
        out = subprocess.run(
            [sys.executable, script, "--repeat", "1", "--only", "pvd_skip", "fnv1a64"],
            capture_output=True, text=True, check=True,
        ).stdout.splitlines()
        assert out[0].split() == ["kernel", "numba", "ms", "numpy", "ms", "speedup"]
        assert [line.split()[0] for line in out[1:]] == ["pvd_skip", "fnv1a64"]
