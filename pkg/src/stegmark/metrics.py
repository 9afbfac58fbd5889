"""Distortion and quality measures: MSE, PSNR, SSIM, difference maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imagecore import RasterImage

MAX_I = 255.0
IDENTICAL = "IDENTICAL"


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TamperMap:
    """Boolean grid of integrity failures.

    ``block_size`` is 1 for pixel granularity; otherwise each flag covers a
    ``block_size`` x ``block_size`` tile of the image.
    """

    flags: np.ndarray
    block_size: int = 1

    @property
    def count(self):
        return int(np.count_nonzero(self.flags))

    @property
    def fraction(self):
        return self.count / self.flags.size if self.flags.size else 0.0

    def any(self):
        return bool(self.flags.any())

    def coordinates(self):
        """Flagged cells as ``(x, y)`` pairs in raster order."""
        ys, xs = np.nonzero(self.flags)
        return list(zip(xs.tolist(), ys.tolist()))

    def to_pixels(self, height, width):
        """Expand to a pixel-resolution mask of the given size."""
        if self.block_size == 1:
            return self.flags.copy()
        b = self.block_size
        full = np.kron(self.flags, np.ones((b, b), dtype=bool)).astype(bool)
        out = np.zeros((height, width), dtype=bool)
        h = min(height, full.shape[0])
        w = min(width, full.shape[1])
        out[:h, :w] = full[:h, :w]
        return out

    def to_image(self, height=None, width=None) -> RasterImage:
        if height is None:
            height, width = self.flags.shape[0] * self.block_size, self.flags.shape[1] * self.block_size
        return RasterImage((self.to_pixels(height, width) * 255).astype(np.uint8))


@dataclass(frozen=True)
class SsimParams:
    c1: float = (0.01 * 255) ** 2
    c2: float = (0.03 * 255) ** 2
    window: str = "full"  # "full" or "sliding"

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("SSIM constants must be positive")
        if self.window not in ("full", "sliding"):
            raise ValueError(f"unknown SSIM window {self.window!r}")

    @classmethod
    def literal(cls, window="full"):
        """The constants exactly as quoted in the source literature (0.02, 0.03)."""
        return cls(c1=0.02, c2=0.03, window=window)


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr_db: float | str
    ssim: float

    def to_line(self):
        psnr = self.psnr_db if self.psnr_db == IDENTICAL else f"{self.psnr_db:.4f}"
        return f"mse={self.mse:.6f} psnr_db={psnr} ssim={_fmt_ssim(self.ssim)}"


def _fmt_ssim(v):
    if abs(v - 1.0) <= 1e-12:
        return "1"
    return f"{v:.6f}"


def _same_shape(a: RasterImage, b: RasterImage):
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch(
            f"images differ: {a.width}x{a.height}x{a.channels} vs {b.width}x{b.height}x{b.channels}"
        )


def mse(a: RasterImage, b: RasterImage) -> float:
    _same_shape(a, b)
    d = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(d * d))


def psnr_from_mse(m: float):
    if m == 0:
        return IDENTICAL
    return 10.0 * math.log10(MAX_I * MAX_I / m)


def psnr(a: RasterImage, b: RasterImage):
    return psnr_from_mse(mse(a, b))


def _luma(img: RasterImage):
    return img.pixels.astype(np.float64).mean(axis=2)


def _ssim_stats(mx, my, vx, vy, cxy, p: SsimParams):
    num = (2 * mx * my + p.c1) * (2 * cxy + p.c2)
    den = (mx * mx + my * my + p.c1) * (vx + vy + p.c2)
    return num / den


def ssim(a: RasterImage, b: RasterImage, p: SsimParams | None = None) -> float:
    _same_shape(a, b)
    p = p or SsimParams()
    x = _luma(a)
    y = _luma(b)
    if p.window == "full" or min(x.shape) < 8:
        mx, my = x.mean(), y.mean()
        vx = ((x - mx) ** 2).mean()
        vy = ((y - my) ** 2).mean()
        cxy = ((x - mx) * (y - my)).mean()
        return float(_ssim_stats(mx, my, vx, vy, cxy, p))
    wx = np.lib.stride_tricks.sliding_window_view(x, (8, 8))
    wy = np.lib.stride_tricks.sliding_window_view(y, (8, 8))
    total = 0.0
    for r0 in range(0, wx.shape[0], 64):
        bx = wx[r0 : r0 + 64]
        by = wy[r0 : r0 + 64]
        mx = bx.mean(axis=(2, 3))
        my = by.mean(axis=(2, 3))
        dx = bx - mx[:, :, None, None]
        dy = by - my[:, :, None, None]
        vx = (dx * dx).mean(axis=(2, 3))
        vy = (dy * dy).mean(axis=(2, 3))
        cxy = (dx * dy).mean(axis=(2, 3))
        total += _ssim_stats(mx, my, vx, vy, cxy, p).sum()
    return float(total / (wx.shape[0] * wx.shape[1]))


def quality_report(a: RasterImage, b: RasterImage, p: SsimParams | None = None) -> QualityReport:
    m = mse(a, b)
    return QualityReport(mse=m, psnr_db=psnr_from_mse(m), ssim=ssim(a, b, p))


def diff_map(a: RasterImage, b: RasterImage, threshold: int = 0) -> TamperMap:
    _same_shape(a, b)
    d = np.abs(a.pixels.astype(np.int16) - b.pixels.astype(np.int16))
    return TamperMap((d > threshold).any(axis=2))
