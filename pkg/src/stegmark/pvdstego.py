"""Wu-Tsai pixel value differencing on 2-pixel grayscale blocks.

Blocks are consecutive raster pixel pairs ``(2i, 2i+1)`` visited in a keyed
order.  A block whose range, pushed to its maximal difference, would leave
``[0, 255]`` is skipped by both embedder and extractor; the skip decision
is invariant under embedding, so both sides always agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, container
from .container import CapacityError, Scheme
from .imagecore import RasterImage
from .keystream import StegoKey, keyed_permutation

DEFAULT_RANGES = ((0, 7), (8, 23), (24, 55), (56, 119), (120, 247), (248, 255))


@dataclass(frozen=True)
class RangeTable:
    ranges: tuple[tuple[int, int], ...] = DEFAULT_RANGES

    def __post_init__(self):
        ranges = tuple((int(lo), int(hi)) for lo, hi in self.ranges)
        expect = 0
        for lo, hi in ranges:
            if lo != expect or hi < lo:
                raise ValueError(f"ranges must be contiguous from 0: problem at [{lo},{hi}]")
            width = hi - lo + 1
            if width < 2 or width & (width - 1):
                raise ValueError(f"range [{lo},{hi}] width {width} is not a power of two >= 2")
            expect = hi + 1
        if expect != 256:
            raise ValueError("ranges must cover 0..255")
        object.__setattr__(self, "ranges", ranges)

    @classmethod
    def parse(cls, text: str) -> RangeTable:
        """``"default"`` or a comma list such as ``"0-7,8-15,16-31,..."``."""
        if text.strip().lower() == "default":
            return cls()
        out = []
        for part in text.split(","):
            lo, hi = part.split("-")
            out.append((int(lo), int(hi)))
        return cls(tuple(out))

    @property
    def lo(self):
        return np.array([r[0] for r in self.ranges], dtype=np.int64)

    @property
    def hi(self):
        return np.array([r[1] for r in self.ranges], dtype=np.int64)

    @property
    def nbits(self):
        return np.array([(r[1] - r[0] + 1).bit_length() - 1 for r in self.ranges], dtype=np.int64)

    @property
    def which(self):
        """Range index of every difference 0..255."""
        out = np.empty(256, dtype=np.int64)
        for k, (lo, hi) in enumerate(self.ranges):
            out[lo : hi + 1] = k
        return out

    def locate(self, d: int):
        k = int(self.which[d])
        lo, hi = self.ranges[k]
        return lo, hi, int(self.nbits[k])


def _require_gray(img: RasterImage):
    if not img.is_gray:
        raise ValueError("PVD operates on grayscale images")


@dataclass
class _Blocks:
    order: np.ndarray  # block index per traversal step
    first: np.ndarray  # flat index of the first pixel, traversal order
    swapped: np.ndarray  # True when the first pixel is the larger one
    small: np.ndarray
    large: np.ndarray
    skip: np.ndarray


def _blocks(img: RasterImage, table: RangeTable, key: StegoKey) -> _Blocks:
    _require_gray(img)
    flat = img.samples.astype(np.int64)
    nb = len(flat) // 2
    if nb == 0:
        raise ValueError("image holds no complete pixel pair")
    order = keyed_permutation(nb, key)
    first = 2 * order
    a = flat[first]
    b = flat[first + 1]
    swapped = a > b
    small = np.minimum(a, b)
    large = np.maximum(a, b)
    skip = np.asarray(_kernels.pvd_skip(small, large, table.lo, table.hi, table.which), dtype=bool)
    return _Blocks(order, first, swapped, small, large, skip)


def pvd_capacity(img: RasterImage, table: RangeTable, key: StegoKey) -> int:
    bl = _blocks(img, table, key)
    n = table.nbits[table.which[bl.large - bl.small]]
    return int(n[~bl.skip].sum())


def adjust_pair(small: int, large: int, target: int):
    """Move an ordered pair to difference ``target`` splitting the change by parity."""
    d = large - small
    m = target - d
    fl = m >> 1
    ce = -((-m) >> 1)
    if d % 2:
        return small - ce, large + fl
    return small - fl, large + ce


def embed_bits(img: RasterImage, bits, table: RangeTable, key: StegoKey) -> RasterImage:
    bits = np.asarray(bits, dtype=np.int64)
    bl = _blocks(img, table, key)
    cap = int(table.nbits[table.which[bl.large - bl.small]][~bl.skip].sum())
    if len(bits) > cap:
        raise CapacityError(len(bits), cap)
    new_s, new_l = _kernels.pvd_embed(bl.small, bl.large, bl.skip, bits, table.lo, table.nbits, table.which)
    flat = img.copy_array().reshape(-1).astype(np.int64)
    flat[bl.first] = np.where(bl.swapped, new_l, new_s)
    flat[bl.first + 1] = np.where(bl.swapped, new_s, new_l)
    return RasterImage(flat.astype(np.uint8).reshape(img.pixels.shape))


def extract_bits(img: RasterImage, table: RangeTable, key: StegoKey) -> np.ndarray:
    bl = _blocks(img, table, key)
    return _kernels.pvd_extract(bl.small, bl.large, bl.skip, table.lo, table.nbits, table.which)


def pvd_embed(img: RasterImage, payload: bytes, table: RangeTable, key: StegoKey) -> RasterImage:
    return embed_bits(img, container.frame_payload(payload, Scheme.PVD), table, key)


def pvd_extract(img: RasterImage, table: RangeTable, key: StegoKey) -> bytes:
    scheme, payload = container.parse_frame(extract_bits(img, table, key))
    container.expect_scheme(scheme, Scheme.PVD)
    return payload


def skipped_blocks(img: RasterImage, table: RangeTable, key: StegoKey) -> set[int]:
    """Block indices (raster pair numbers) excluded from embedding."""
    bl = _blocks(img, table, key)
    return set(bl.order[bl.skip].tolist())
