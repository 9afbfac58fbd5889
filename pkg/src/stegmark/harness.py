"""Attack simulation with exact ground truth, and detector scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagecore import RasterImage, Region
from .metrics import TamperMap, diff_map


@dataclass(frozen=True)
class RegionFill:
    value: int
    region: Region | None = None


@dataclass(frozen=True)
class SaltPepper:
    density: float
    seed: int
    region: Region | None = None

    def __post_init__(self):
        if not 0.0 <= self.density <= 1.0:
            raise ValueError("density must lie in [0, 1]")


@dataclass(frozen=True)
class BitFlips:
    count: int
    seed: int
    region: Region | None = None


@dataclass(frozen=True)
class Paste:
    src: Region
    dst_x: int
    dst_y: int


TamperSpec = RegionFill | SaltPepper | BitFlips | Paste


def _target(img: RasterImage, region: Region | None) -> Region:
    region = region or Region(0, 0, img.width, img.height)
    region.check_bounds(img)
    return region


def apply_tamper(img: RasterImage, spec: TamperSpec):
    """Returns ``(attacked_image, ground_truth_pixel_map)``."""
    out = img.copy_array()
    if isinstance(spec, RegionFill):
        if not 0 <= spec.value <= 255:
            raise ValueError("fill value must lie in [0, 255]")
        out[_target(img, spec.region).slices] = spec.value
    elif isinstance(spec, SaltPepper):
        r = _target(img, spec.region)
        rng = np.random.default_rng(spec.seed)
        hit = rng.random((r.h, r.w)) < spec.density
        salt = rng.random((r.h, r.w)) < 0.5
        view = out[r.slices]
        view[hit & salt] = 255
        view[hit & ~salt] = 0
    elif isinstance(spec, BitFlips):
        r = _target(img, spec.region)
        total = r.w * r.h * img.channels * 8
        if not 0 <= spec.count <= total:
            raise ValueError(f"cannot flip {spec.count} distinct bits in {total}")
        rng = np.random.default_rng(spec.seed)
        picks = rng.choice(total, size=spec.count, replace=False)
        view = out[r.slices]
        sample, bit = np.divmod(picks, 8)
        yy, rest = np.divmod(sample, r.w * img.channels)
        xx, cc = np.divmod(rest, img.channels)
        view[yy, xx, cc] ^= (1 << bit).astype(np.uint8)
    elif isinstance(spec, Paste):
        src = spec.src
        src.check_bounds(img)
        dst = Region(spec.dst_x, spec.dst_y, src.w, src.h)
        dst.check_bounds(img)
        out[dst.slices] = img.pixels[src.slices]
    else:
        raise TypeError(f"unknown tamper spec {spec!r}")
    attacked = RasterImage(out)
    return attacked, diff_map(img, attacked, 0)


def coarsen(m: TamperMap, block: int) -> TamperMap:
    """Pixel map to block map: a block is flagged if any of its pixels is."""
    if m.block_size == block:
        return m
    if m.block_size != 1:
        raise ValueError("only pixel maps can be coarsened")
    h, w = m.flags.shape
    by, bx = h // block, w // block
    f = m.flags[: by * block, : bx * block].reshape(by, block, bx, block).any(axis=(1, 3))
    return TamperMap(f, block_size=block)


def score_detector(predicted: TamperMap, truth: TamperMap):
    """``(precision, recall)``; an empty prediction or empty truth scores 1."""
    if truth.block_size != predicted.block_size:
        truth = coarsen(truth, predicted.block_size)
    if predicted.flags.shape != truth.flags.shape:
        raise ValueError(f"granularity mismatch: {predicted.flags.shape} vs {truth.flags.shape}")
    tp = int(np.count_nonzero(predicted.flags & truth.flags))
    npred = predicted.count
    ntrue = truth.count
    precision = tp / npred if npred else 1.0
    recall = tp / ntrue if ntrue else 1.0
    return precision, recall
