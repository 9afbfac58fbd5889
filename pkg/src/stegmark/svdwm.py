"""Fragile 8x8 block watermarking keyed on singular values.

For every full block the LSB plane is cleared, the singular values of the
cleared block are quantised to 16-bit fixed point and hashed together with
the first key and the block's position under a keyed permutation (second
key).  The 64-bit digest replaces the block's LSB plane.  Verification
recomputes the digest, so any change to a block's content or position is
localised to that block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .imagecore import RasterImage, Region
from .keystream import StegoKey, fnv1a64_bytes, keyed_permutation
from .metrics import TamperMap

BLOCK = 8
QUANT_SCALE = 256
QUANT_MAX = (1 << 16) - 1


class SvdConvergenceError(RuntimeError):
    def __init__(self, residual):
        super().__init__(f"Jacobi SVD did not converge; off-diagonal residual {residual:.3e}")
        self.residual = residual


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    sweeps: int


def _residual(u_unnormalised):
    g = u_unnormalised.T @ u_unnormalised
    d = np.sqrt(np.outer(np.diag(g), np.diag(g)))
    off = np.abs(g - np.diag(np.diag(g)))
    with np.errstate(invalid="ignore", divide="ignore"):
        return float(np.nanmax(np.where(d > 0, off / d, 0.0)))


def svd_blocks(blocks: np.ndarray):
    """Batched SVD of an ``(n, k, k)`` stack; returns ``(u, sigma, v)``."""
    blocks = np.ascontiguousarray(blocks, dtype=np.float64)
    if not np.all(np.isfinite(blocks)):
        raise ValueError("SVD input must be finite")
    u, s, v, sweeps = _kernels.svd_batch(blocks)
    bad = np.nonzero(sweeps < 0)[0]
    if len(bad):
        b = int(bad[0])
        raise SvdConvergenceError(_residual(u[b] * s[b][None, :]))
    return u, s, v


def svd8(block) -> SvdFactors:
    a = np.asarray(block, dtype=np.float64)
    if a.shape != (BLOCK, BLOCK):
        raise ValueError(f"expected an 8x8 block, got {a.shape}")
    a = np.ascontiguousarray(a[None])
    if not np.all(np.isfinite(a)):
        raise ValueError("SVD input must be finite")
    u, s, v, sweeps = _kernels.svd_batch(a)
    if sweeps[0] < 0:
        raise SvdConvergenceError(_residual(u[0] * s[0][None, :]))
    return SvdFactors(u[0], s[0], v[0], int(sweeps[0]))


def _require(img: RasterImage):
    if not img.is_gray:
        raise ValueError("SVD watermarking operates on grayscale images")
    if img.width < BLOCK or img.height < BLOCK:
        raise ValueError(f"image {img.width}x{img.height} is smaller than one {BLOCK}x{BLOCK} block")


def _grid(img: RasterImage):
    by, bx = img.height // BLOCK, img.width // BLOCK
    g = img.gray[: by * BLOCK, : bx * BLOCK].astype(np.int64)
    blocks = g.reshape(by, BLOCK, bx, BLOCK).transpose(0, 2, 1, 3).reshape(by * bx, BLOCK, BLOCK)
    return by, bx, blocks


def unprotected_regions(img: RasterImage) -> list[Region]:
    """Partial edge strips that carry no watermark."""
    by, bx = img.height // BLOCK, img.width // BLOCK
    out = []
    if img.width > bx * BLOCK:
        out.append(Region(bx * BLOCK, 0, img.width - bx * BLOCK, img.height))
    if img.height > by * BLOCK:
        out.append(Region(0, by * BLOCK, bx * BLOCK, img.height - by * BLOCK))
    return out


def _auth_bits(blocks_cleared: np.ndarray, key1: StegoKey, key2: StegoKey) -> np.ndarray:
    n = len(blocks_cleared)
    _, sigma, _ = svd_blocks(blocks_cleared)
    q = np.minimum(np.rint(sigma * QUANT_SCALE), QUANT_MAX).astype(">u2")
    pos = keyed_permutation(n, key2)
    k1 = key1.to_bytes()
    out = np.empty((n, 64), dtype=np.uint8)
    for i in range(n):
        digest = fnv1a64_bytes(q[i].tobytes() + k1 + int(pos[i]).to_bytes(8, "big"))
        out[i] = np.unpackbits(np.frombuffer(digest.to_bytes(8, "big"), dtype=np.uint8))
    return out


def svdwm_embed(img: RasterImage, key1: StegoKey, key2: StegoKey) -> RasterImage:
    _require(img)
    by, bx, blocks = _grid(img)
    cleared = blocks & ~1
    auth = _auth_bits(cleared, key1, key2).reshape(-1, BLOCK, BLOCK)
    marked = (cleared | auth).reshape(by, bx, BLOCK, BLOCK).transpose(0, 2, 1, 3)
    out = img.copy_array()
    out[: by * BLOCK, : bx * BLOCK, 0] = marked.reshape(by * BLOCK, bx * BLOCK)
    return RasterImage(out)


def svdwm_verify(img: RasterImage, key1: StegoKey, key2: StegoKey) -> TamperMap:
    """Block-granularity map: True where the stored authentication bits fail."""
    _require(img)
    by, bx, blocks = _grid(img)
    expected = _auth_bits(blocks & ~1, key1, key2)
    stored = (blocks & 1).reshape(-1, 64).astype(np.uint8)
    flags = (expected != stored).any(axis=1).reshape(by, bx)
    return TamperMap(flags, block_size=BLOCK)


def format_report(img: RasterImage, result: TamperMap) -> list[str]:
    lines = []
    by, bx = result.flags.shape
    for y in range(by):
        for x in range(bx):
            lines.append(f"block {x} {y} {'tampered' if result.flags[y, x] else 'ok'}")
    for r in unprotected_regions(img):
        lines.append(f"unprotected {r}")
    lines.append(f"blocks={by * bx} flagged={result.count}")
    return lines
