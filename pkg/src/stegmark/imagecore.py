"""In-memory raster images, regions, binary PGM/PPM I/O and RGB/HSV helpers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ImageFormatError(ValueError):
    """Malformed or unsupported PGM/PPM data."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class HeaderError(ImageFormatError):
    pass


class MaxvalError(ImageFormatError):
    pass


class TruncatedDataError(ImageFormatError):
    pass


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit grayscale or RGB pixel grid.

    ``pixels`` has shape ``(height, width, channels)`` and dtype ``uint8``;
    it is flagged read-only so an image can be shared freely.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) samples, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def channels(self):
        return self.pixels.shape[2]

    @property
    def is_gray(self):
        return self.channels == 1

    @property
    def samples(self):
        """Row-major flat view, RGB interleaved."""
        return self.pixels.reshape(-1)

    @property
    def gray(self):
        """2-D view of a single-channel image."""
        if not self.is_gray:
            raise ValueError("image is not grayscale")
        return self.pixels[:, :, 0]

    def copy_array(self):
        return np.array(self.pixels, copy=True)

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self):
        return f"RasterImage({self.width}x{self.height}x{self.channels})"


def from_array(arr) -> RasterImage:
    return RasterImage(np.asarray(arr))


@dataclass(frozen=True)
class Region:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"region extent must be positive: {self}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"region origin must be non-negative: {self}")

    @classmethod
    def parse(cls, text):
        """Parse ``"x,y,w,h"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"region must be x,y,w,h: {text!r}")
        return cls(*(int(p) for p in parts))

    def fits(self, img: RasterImage):
        return self.x + self.w <= img.width and self.y + self.h <= img.height

    def check_bounds(self, img: RasterImage):
        if not self.fits(img):
            raise ValueError(f"{self} exceeds {img.width}x{img.height} image")

    def overlaps(self, other: Region):
        return not (
            self.x + self.w <= other.x
            or other.x + other.w <= self.x
            or self.y + self.h <= other.y
            or other.y + other.h <= self.y
        )

    @property
    def slices(self):
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def mask(self, height, width):
        m = np.zeros((height, width), dtype=bool)
        m[self.slices] = True
        return m

    def __str__(self):
        return f"{self.x},{self.y},{self.w},{self.h}"


# --------------------------------------------------------------------------
# netpbm

_WS = b" \t\n\r\x0b\x0c"


def _header_tokens(data: bytes, count: int):
    """Return ``count`` whitespace-separated tokens and the offset after them."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise HeaderError("unexpected end of header", pos)
        start = pos
        while pos < n and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tokens.append((data[start:pos], start))
    return tokens, pos


def parse_netpbm(data: bytes) -> RasterImage:
    if len(data) < 2 or data[:2] not in (b"P5", b"P6"):
        raise HeaderError("missing P5/P6 magic", 0)
    channels = 1 if data[:2] == b"P5" else 3
    ((magic, _), (wtok, woff), (htok, hoff), (mtok, moff)), pos = _header_tokens(data, 4)
    if magic not in (b"P5", b"P6"):
        raise HeaderError(f"bad magic {magic!r}", 0)
    values = []
    for tok, off, what in ((wtok, woff, "width"), (htok, hoff, "height"), (mtok, moff, "maxval")):
        if not re.fullmatch(rb"[0-9]+", tok):
            raise HeaderError(f"invalid {what} {tok!r}", off)
        values.append(int(tok))
    width, height, maxval = values
    if width < 1 or height < 1:
        raise HeaderError("image dimensions must be positive", woff)
    if maxval != 255:
        raise MaxvalError(f"maxval {maxval} unsupported, need 255", moff)
    if pos >= len(data) or data[pos] not in _WS:
        raise HeaderError("missing whitespace after maxval", pos)
    pos += 1
    need = width * height * channels
    have = len(data) - pos
    if have < need:
        raise TruncatedDataError(f"sample data truncated: need {need} bytes, have {have}", pos + have)
    arr = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return RasterImage(arr.reshape(height, width, channels))


def encode_netpbm(img: RasterImage) -> bytes:
    magic = b"P5" if img.is_gray else b"P6"
    header = magic + f"\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def load_image(path) -> RasterImage:
    return parse_netpbm(Path(path).read_bytes())


def save_image(img: RasterImage, path) -> None:
    Path(path).write_bytes(encode_netpbm(img))


# --------------------------------------------------------------------------
# HSV with integer value channel


@dataclass(frozen=True)
class HsvPixel:
    h: float
    s: float
    v: int


def rgb_to_hsv_arrays(r, g, b):
    """Vectorised RGB -> (hue degrees, saturation, integer value)."""
    r = np.asarray(r, dtype=np.int64)
    g = np.asarray(g, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    v = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    c = (v - mn).astype(np.float64)
    safe_c = np.where(c > 0, c, 1.0)
    h = np.where(
        v == r,
        np.mod((g - b) / safe_c, 6.0),
        np.where(v == g, (b - r) / safe_c + 2.0, (r - g) / safe_c + 4.0),
    )
    h = np.where(c > 0, 60.0 * h, 0.0)
    h = np.where(h >= 360.0, h - 360.0, h)
    s = np.where(v > 0, c / np.where(v > 0, v, 1), 0.0)
    return h, s, v


def hsv_to_rgb_arrays(h, s, v):
    h = np.asarray(h, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    v = np.asarray(v, dtype=np.int64)
    c = s * v
    hp = h / 60.0
    sector = np.floor(hp).astype(np.int64) % 6
    frac = hp - np.floor(hp)
    mn = v - c
    rising = mn + frac * c
    falling = v - frac * c
    vf = v.astype(np.float64)
    table_r = [vf, falling, mn, mn, rising, vf]
    table_g = [rising, vf, vf, falling, mn, mn]
    table_b = [mn, mn, rising, vf, vf, falling]
    r = np.choose(sector, table_r)
    g = np.choose(sector, table_g)
    b = np.choose(sector, table_b)
    return tuple(np.rint(x).astype(np.int64) for x in (r, g, b))


def rgb_to_hsv(px) -> HsvPixel:
    h, s, v = rgb_to_hsv_arrays(*px)
    return HsvPixel(float(h), float(s), int(v))


def hsv_to_rgb(px: HsvPixel):
    r, g, b = hsv_to_rgb_arrays(px.h, px.s, px.v)
    return int(r), int(g), int(b)


def value_plane(img: RasterImage) -> np.ndarray:
    """HSV value V = max(R, G, B), or the samples themselves for grayscale."""
    if img.is_gray:
        return img.gray.astype(np.int64)
    return img.pixels.max(axis=2).astype(np.int64)
