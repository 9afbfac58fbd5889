import itertools

import numpy as np
import pytest

from stegmark.container import CapacityError, FrameError, NoFrameError
from stegmark.imagecore import RasterImage
from stegmark.keystream import StegoKey
from stegmark.lsbstego import LsbConfig, embed_bits, extract_bits, lsb_capacity, lsb_embed, lsb_extract, slot_indices

from conftest import random_image

CHANNEL_MASKS = [None, ("r",), ("g",), ("b",), ("r", "g"), ("g", "b"), ("r", "b"), ("r", "g", "b")]


class TestCapacity:
    def test_gray_one_bit(self, rng):
        assert lsb_capacity(random_image(rng, 8, 8), LsbConfig()) == 64

    def test_green_only(self, rng):
        assert lsb_capacity(random_image(rng, 8, 8, 3), LsbConfig(1, ("g",))) == 64

    def test_all_channels_four_bits(self, rng):
        assert lsb_capacity(random_image(rng, 8, 8, 3), LsbConfig(4)) == 768


class TestConfig:
    @pytest.mark.parametrize("bits", [0, 5])
    def test_bits_range(self, bits):
        with pytest.raises(ValueError):
            LsbConfig(bits)

    def test_perm_needs_key(self):
        with pytest.raises(ValueError):
            LsbConfig(order="perm")

    @pytest.mark.parametrize("chans", [("x",), ("r", "r"), ("gray", "r"), ()])
    def test_bad_channels(self, chans):
        with pytest.raises(ValueError):
            LsbConfig(channels=chans)

    def test_gray_mask_on_rgb(self, rng):
        with pytest.raises(ValueError):
            lsb_capacity(random_image(rng, 2, 2, 3), LsbConfig(channels=("gray",)))

    def test_colour_mask_on_gray(self, rng):
        with pytest.raises(ValueError):
            lsb_capacity(random_image(rng, 2, 2), LsbConfig(channels=("g",)))

    @pytest.mark.parametrize("text, expect", [("rgb", ("r", "g", "b")), ("g", ("g",)), ("r,b", ("r", "b")), ("gray", ("gray",))])
    def test_parse_channels(self, text, expect):
        assert LsbConfig.parse_channels(text) == expect


class TestEmbed:
    def test_raw_byte_sequential(self):
        img = RasterImage(np.arange(100, 108, dtype=np.uint8).reshape(1, 8))
        out = lsb_embed(img, b"\xa5", LsbConfig(), raw=True)
        assert out.gray.ravel().tolist() == [101, 100, 103, 102, 104, 105, 106, 107]

    def test_nibble(self):
        img = RasterImage(np.array([[0xF0]], dtype=np.uint8))
        out = embed_bits(img, [1, 0, 1, 0], LsbConfig(4))
        assert out.gray[0, 0] == 0xFA

    def test_capacity_plus_one(self, rng):
        img = random_image(rng, 8, 8)
        with pytest.raises(CapacityError):
            embed_bits(img, np.zeros(65, np.uint8), LsbConfig())

    def test_framed_capacity_bound(self, rng):
        img = random_image(rng, 8, 8, 3)
        cfg = LsbConfig(1)
        fits = 192 // 8 - 12
        lsb_embed(img, bytes(fits), cfg)
        with pytest.raises(CapacityError):
            lsb_embed(img, bytes(fits + 1), cfg)

    def test_partial_last_field_keeps_cover_bits(self):
        img = RasterImage(np.array([[0b1111_0111, 0]], dtype=np.uint8))
        out = embed_bits(img, [0, 0, 0], LsbConfig(4))
        assert out.gray[0, 0] == 0b1111_0001
        assert out.gray[0, 1] == 0

    def test_only_touched_channels_change(self, rng):
        img = random_image(rng, 16, 16, 3)
        out = lsb_embed(img, b"payload", LsbConfig(2, ("g",)))
        assert np.array_equal(out.pixels[..., [0, 2]], img.pixels[..., [0, 2]])
        assert np.all(np.abs(out.pixels[..., 1].astype(int) - img.pixels[..., 1]) <= 3)

    def test_perm_slots_are_permuted_seq_slots(self, rng, key):
        img = random_image(rng, 6, 7, 3)
        seq = slot_indices(img, LsbConfig(1, ("r", "b")))
        perm = slot_indices(img, LsbConfig(1, ("r", "b"), "perm", key))
        assert sorted(seq.tolist()) == sorted(perm.tolist())
        assert not np.array_equal(seq, perm)


class TestRoundtrip:
    @pytest.mark.parametrize("bits, chans, order", list(itertools.product([1, 2, 3, 4], CHANNEL_MASKS, ["seq", "perm"])))
    def test_rgb(self, rng, key, bits, chans, order):
        img = random_image(rng, 24, 20, 3)
        cfg = LsbConfig(bits, chans, order, key if order == "perm" else None)
        n = lsb_capacity(img, cfg) // 8 - 12
        payload = rng.integers(0, 256, int(rng.integers(0, n + 1)), dtype=np.uint8).tobytes()
        assert lsb_extract(lsb_embed(img, payload, cfg), cfg) == payload

    @pytest.mark.parametrize("bits", [1, 2, 3, 4])
    def test_gray_raw_bits(self, rng, bits):
        img = random_image(rng, 9, 11)
        cfg = LsbConfig(bits)
        payload = rng.integers(0, 2, lsb_capacity(img, cfg) - 3)
        out = embed_bits(img, payload, cfg)
        assert np.array_equal(extract_bits(out, cfg, count=len(payload)), payload)


class TestRejection:
    def test_never_embedded(self, rng):
        for _ in range(20):
            with pytest.raises(NoFrameError):
                lsb_extract(random_image(rng, 32, 32), LsbConfig())

    def test_wrong_key(self, rng, key):
        img = random_image(rng, 16, 16)
        stego = lsb_embed(img, b"secret", LsbConfig(order="perm", key=key))
        no_frame = 0
        for seed in range(1, 10_001):
            try:
                lsb_extract(stego, LsbConfig(order="perm", key=StegoKey(seed)))
            except NoFrameError:
                no_frame += 1
            except FrameError:
                pass
        assert no_frame >= 9_990
