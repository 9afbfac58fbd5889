import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stegmark import _kernels
from stegmark.container import CapacityError, FrameError, NoFrameError
from stegmark.imagecore import RasterImage
from stegmark.keystream import StegoKey
from stegmark.pvdstego import (
    RangeTable,
    adjust_pair,
    embed_bits,
    extract_bits,
    pvd_capacity,
    pvd_embed,
    pvd_extract,
    skipped_blocks,
)

from conftest import random_image

TABLE = RangeTable()


def pair(a, b):
    return RasterImage(np.array([[a, b]], dtype=np.uint8))


class TestTable:
    def test_default(self):
        assert TABLE.nbits.tolist() == [3, 4, 5, 6, 7, 3]
        assert TABLE.locate(15) == (8, 23, 4)

    @pytest.mark.parametrize(
        "ranges",
        [((0, 7), (8, 255)), ((0, 5), (6, 255)), ((1, 7), (8, 255)), ((0, 127),)],
    )
    def test_rejects(self, ranges):
        with pytest.raises(ValueError):
            RangeTable(ranges)

    def test_parse(self):
        t = RangeTable.parse("0-127,128-255")
        assert t.nbits.tolist() == [7, 7]
        assert RangeTable.parse("default") == TABLE


class TestWorkedExample:
    def test_embed(self):
        out = embed_bits(pair(50, 65), [1, 0, 1, 0], TABLE, StegoKey(0))
        assert out.gray.ravel().tolist() == [48, 66]

    def test_extract(self):
        assert extract_bits(pair(48, 66), TABLE, StegoKey(0)).tolist() == [1, 0, 1, 0]

    def test_adjust_pair(self):
        assert adjust_pair(50, 65, 18) == (48, 66)

    def test_order_of_pixels_kept(self):
        out = embed_bits(pair(65, 50), [1, 0, 1, 0], TABLE, StegoKey(0))
        assert out.gray.ravel().tolist() == [66, 48]


class TestAdjust:
    def test_no_change_when_target_equals_difference(self):
        # d = 10 in [8,23], b = 2 gives d' = 10
        out = embed_bits(pair(90, 100), [0, 0, 1, 0], TABLE, StegoKey(0))
        assert out.gray.ravel().tolist() == [90, 100]

    @pytest.mark.parametrize("s, l", [(10, 20), (10, 21), (0, 5), (100, 228)])
    def test_hits_every_target(self, s, l):
        lo, hi, _ = TABLE.locate(l - s)
        for t in range(lo, hi + 1):
            a, b = adjust_pair(s, l, t)
            assert b - a == t
            # the change is split as evenly as possible
            assert abs((s - a) - (b - l)) <= 1


class TestSkip:
    def test_example(self):
        img = pair(5, 255)
        assert pvd_capacity(img, TABLE, StegoKey(0)) == 0
        assert skipped_blocks(img, TABLE, StegoKey(0)) == {0}

    def test_exhaustive_against_rule(self):
        s, l = np.meshgrid(np.arange(256), np.arange(256), indexing="ij")
        keep = l >= s
        s, l = s[keep], l[keep]
        d = l - s
        k = TABLE.which[d]
        hi = TABLE.hi[k]
        m = hi - d
        ce = -((-m) >> 1)
        fl = m >> 1
        odd = d % 2 == 1
        ns = np.where(odd, s - ce, s - fl)
        nl = np.where(odd, l + fl, l + ce)
        expect = (ns < 0) | (nl > 255)
        got = _kernels.pvd_skip(s, l, TABLE.lo, TABLE.hi, TABLE.which).astype(bool)
        assert np.array_equal(got, expect)
        # a kept block really can take any value of its range
        for t in range(256):
            sel = (~got) & (TABLE.lo[k] <= t) & (t <= TABLE.hi[k])
            mm = t - d[sel]
            a = np.where(odd[sel], s[sel] + ((-mm) >> 1), s[sel] - (mm >> 1))
            b = a + t
            assert a.min(initial=0) >= 0 and b.max(initial=0) <= 255

    def test_skip_stable_under_embedding(self, rng, key):
        img = random_image(rng, 32, 32)
        before = skipped_blocks(img, TABLE, key)
        n = pvd_capacity(img, TABLE, key)
        out = embed_bits(img, rng.integers(0, 2, n), TABLE, key)
        assert skipped_blocks(out, TABLE, key) == before


class TestCapacity:
    def test_constant_mid_gray(self):
        img = RasterImage(np.full((8, 8), 128, dtype=np.uint8))
        assert pvd_capacity(img, TABLE, StegoKey(0)) == 96

    def test_constant_black_skips_everything(self):
        # d' = 7 would push the smaller pixel below zero
        img = RasterImage(np.zeros((8, 8), dtype=np.uint8))
        assert pvd_capacity(img, TABLE, StegoKey(0)) == 0

    def test_large_image_lower_bound(self, rng, key):
        img = random_image(rng, 512, 512)
        skipped = len(skipped_blocks(img, TABLE, key))
        assert pvd_capacity(img, TABLE, key) >= 3 * (131072 - skipped)

    def test_over_capacity(self, rng, key):
        img = random_image(rng, 8, 8)
        n = pvd_capacity(img, TABLE, key)
        with pytest.raises(CapacityError):
            embed_bits(img, np.zeros(n + 1), TABLE, key)

    def test_rgb_rejected(self, rng, key):
        with pytest.raises(ValueError):
            pvd_capacity(random_image(rng, 4, 4, 3), TABLE, key)


class TestRoundtrip:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32), st.integers(4, 40), st.integers(4, 40))
    def test_random(self, seed, h, w):
        rng = np.random.default_rng(seed)
        img = random_image(rng, h, w)
        key = StegoKey(seed)
        cap = pvd_capacity(img, TABLE, key)
        if cap < 96:
            return
        payload = rng.integers(0, 256, int(rng.integers(0, cap // 8 - 12 + 1)), dtype=np.uint8).tobytes()
        assert pvd_extract(pvd_embed(img, payload, TABLE, key), TABLE, key) == payload

    def test_odd_pixel_count(self, rng, key):
        img = random_image(rng, 9, 13)
        out = pvd_embed(img, b"ok", TABLE, key)
        assert out.gray[-1, -1] == img.gray[-1, -1]
        assert pvd_extract(out, TABLE, key) == b"ok"

    def test_custom_table(self, rng, key):
        t = RangeTable.parse("0-15,16-31,32-63,64-127,128-255")
        img = random_image(rng, 16, 16)
        assert pvd_extract(pvd_embed(img, b"tbl", t, key), t, key) == b"tbl"

    def test_wrong_key(self, rng, key):
        img = random_image(rng, 16, 16)
        stego = pvd_embed(img, b"x", TABLE, key)
        no_frame = 0
        for seed in range(1, 2001):
            try:
                pvd_extract(stego, TABLE, StegoKey(seed))
            except NoFrameError:
                no_frame += 1
            except FrameError:
                pass
        assert no_frame >= 1990
