import numpy as np
import pytest

from stegmark.harness import BitFlips, Paste, RegionFill, SaltPepper, apply_tamper, coarsen, score_detector
from stegmark.imagecore import RasterImage, Region
from stegmark.metrics import TamperMap, diff_map

from conftest import random_image


class TestApply:
    def test_fill_excludes_already_equal(self, rng):
        arr = rng.integers(1, 256, (32, 32, 1), dtype=np.uint8)
        arr[5, 5] = 0
        img = RasterImage(arr)
        region = Region(3, 3, 10, 10)
        out, truth = apply_tamper(img, RegionFill(0, region))
        assert truth.count == 99
        assert not truth.flags[5, 5]
        assert np.all(out.gray[3:13, 3:13] == 0)
        assert np.array_equal(out.gray[13:], img.gray[13:])

    def test_salt_pepper_rate(self, rng):
        img = RasterImage(np.full((512, 512), 128, np.uint8))
        out, truth = apply_tamper(img, SaltPepper(0.01, seed=4))
        n, p = 512 * 512, 0.01
        assert abs(truth.count - n * p) <= 5 * np.sqrt(n * p * (1 - p))
        assert set(np.unique(out.gray[truth.flags])) <= {0, 255}

    def test_salt_pepper_density_range(self):
        with pytest.raises(ValueError):
            SaltPepper(1.5, 0)

    def test_one_bit_flip(self, rng):
        img = random_image(rng, 16, 16, 3)
        out, truth = apply_tamper(img, BitFlips(1, seed=9))
        assert truth.count == 1
        delta = out.pixels.astype(int) ^ img.pixels
        assert np.count_nonzero(delta) == 1 and bin(int(delta.max())).count("1") == 1

    def test_bit_flip_count_bound(self, rng):
        with pytest.raises(ValueError):
            apply_tamper(random_image(rng, 2, 2), BitFlips(33, 0))

    def test_paste(self, rng):
        img = random_image(rng, 16, 16)
        out, truth = apply_tamper(img, Paste(Region(0, 0, 4, 4), 8, 8))
        assert np.array_equal(out.gray[8:12, 8:12], img.gray[:4, :4])
        assert truth.flags[8:12, 8:12].sum() == truth.count

    def test_out_of_bounds(self, rng):
        with pytest.raises(ValueError):
            apply_tamper(random_image(rng, 8, 8), RegionFill(0, Region(4, 4, 8, 8)))
        with pytest.raises(ValueError):
            apply_tamper(random_image(rng, 8, 8), Paste(Region(0, 0, 4, 4), 6, 0))

    @pytest.mark.parametrize(
        "spec",
        [RegionFill(7), SaltPepper(0.2, 3), BitFlips(40, 3), Paste(Region(0, 0, 5, 5), 3, 2)],
    )
    def test_truth_is_exact_and_deterministic(self, rng, spec):
        img = random_image(rng, 20, 20, 3)
        out, truth = apply_tamper(img, spec)
        assert np.array_equal(truth.flags, diff_map(img, out).flags)
        again, _ = apply_tamper(img, spec)
        assert again == out


class TestScore:
    def test_perfect(self):
        m = TamperMap(np.eye(4, dtype=bool))
        assert score_detector(m, m) == (1.0, 1.0)

    def test_empty_prediction(self):
        truth = TamperMap(np.eye(4, dtype=bool))
        assert score_detector(TamperMap(np.zeros((4, 4), bool)), truth) == (1.0, 0.0)

    def test_partial(self):
        pred = TamperMap(np.array([[1, 1, 0, 0]], bool))
        truth = TamperMap(np.array([[1, 0, 1, 0]], bool))
        assert score_detector(pred, truth) == (0.5, 0.5)

    def test_coarsen_any_overlap(self):
        px = np.zeros((16, 24), bool)
        px[9, 17] = True
        blocks = coarsen(TamperMap(px), 8)
        assert blocks.block_size == 8 and blocks.coordinates() == [(2, 1)]

    def test_pixel_truth_against_block_prediction(self):
        px = np.zeros((16, 16), bool)
        px[1, 1] = px[2, 2] = True
        pred = TamperMap(np.array([[True, False], [False, False]]), block_size=8)
        assert score_detector(pred, TamperMap(px)) == (1.0, 1.0)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            score_detector(TamperMap(np.zeros((2, 2), bool)), TamperMap(np.zeros((3, 3), bool)))
