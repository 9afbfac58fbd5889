"""K-means watermark hashing with green-channel LSB embedding.

The watermark's colours are clustered into 8 groups; the sorted integer
centroids give a 192-bit string that is tiled across the cover and written
into the green LSB plane.  Verification XORs the recovered plane against the
plane regenerated from the original watermark.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .imagecore import RasterImage
from .keystream import StegoKey, keyed_permutation
from .metrics import TamperMap

K = 8
MAX_ITER = 100
HASH_BITS = K * 24


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray  # (8, 3) int, sorted lexicographically
    assignments: np.ndarray  # per watermark pixel, index into ``centroids``
    iterations: int


@dataclass(frozen=True)
class KmeansVerifyResult:
    tamper: TamperMap
    block_fraction: np.ndarray  # flagged fraction per 8x8 block

    @property
    def fraction(self):
        return self.tamper.fraction


def _pixels_rgb(img: RasterImage) -> np.ndarray:
    if img.is_gray:
        return np.repeat(img.pixels.reshape(-1, 1), 3, axis=1).astype(np.int64)
    return img.pixels.reshape(-1, 3).astype(np.int64)


def _initial_centroids(px: np.ndarray, seed: StegoKey) -> np.ndarray:
    # first K distinct colours met along the keyed pixel order
    order = keyed_permutation(len(px), seed)
    ordered = px[order]
    _, first = np.unique(ordered, axis=0, return_index=True)
    first = np.sort(first)[:K]
    cents = ordered[first]
    if len(cents) < K:
        cents = np.vstack([cents, np.repeat(cents[:1], K - len(cents), axis=0)])
    return cents.astype(np.int64)


def _rounded_means(px, labels, counts):
    sums = np.zeros((K, 3), dtype=np.int64)
    np.add.at(sums, labels, px)
    c = np.maximum(counts, 1)[:, None]
    return (2 * sums + c) // (2 * c)


def cluster(watermark: RasterImage, seed: StegoKey) -> ClusterModel:
    px = _pixels_rgb(watermark)
    if len(px) < K:
        raise ValueError(f"watermark needs at least {K} pixels, has {len(px)}")
    cents = _initial_centroids(px, seed)
    labels = None
    it = 0
    for it in range(1, MAX_ITER + 1):
        new_labels, dists = _kernels.assign(px, cents)
        counts = np.bincount(new_labels, minlength=K)
        stable = labels is not None and np.array_equal(new_labels, labels) and counts.all()
        labels = new_labels
        if stable:
            break
        prev = cents
        fresh = _rounded_means(px, labels, counts)
        cents = np.where(counts[:, None] > 0, fresh, cents)
        if not counts.all():
            # reseed each empty cluster at the pixel farthest from its centroid
            d = dists.copy()
            for c in np.nonzero(counts == 0)[0]:
                far = int(np.argmax(d))
                cents[c] = px[far]
                diff = px - cents[c]
                d = np.minimum(d, np.einsum("nc,nc->n", diff, diff))
            if np.array_equal(cents, prev):
                # too few distinct colours: reseeding cannot change anything
                break
    order = np.lexsort(cents.T[::-1])
    rank = np.empty(K, dtype=np.int64)
    rank[order] = np.arange(K)
    return ClusterModel(cents[order], rank[labels], it)


def centroid_bits(centroids: np.ndarray) -> np.ndarray:
    return np.unpackbits(np.asarray(centroids, dtype=np.uint8).reshape(-1))


def kmeans_hash(watermark: RasterImage, seed: StegoKey) -> np.ndarray:
    """192 hash bits: sorted centroids, 24 bits each, MSB first."""
    return centroid_bits(cluster(watermark, seed).centroids)


def hash_plane(base_bits: np.ndarray, height: int, width: int) -> np.ndarray:
    idx = np.arange(height * width) % len(base_bits)
    return base_bits[idx].reshape(height, width)


def _require_rgb(img: RasterImage):
    if img.is_gray:
        raise ValueError("cover must be an RGB image")


def kmwm_embed(cover: RasterImage, watermark: RasterImage, seed: StegoKey) -> RasterImage:
    _require_rgb(cover)
    plane = hash_plane(kmeans_hash(watermark, seed), cover.height, cover.width)
    out = cover.copy_array()
    out[:, :, 1] = (out[:, :, 1] & 0xFE) | plane
    return RasterImage(out)


def kmwm_verify(stego: RasterImage, watermark: RasterImage, seed: StegoKey) -> KmeansVerifyResult:
    _require_rgb(stego)
    plane = hash_plane(kmeans_hash(watermark, seed), stego.height, stego.width)
    flags = ((stego.pixels[:, :, 1] & 1) ^ plane).astype(bool)
    by, bx = -(-stego.height // 8), -(-stego.width // 8)
    padded = np.zeros((by * 8, bx * 8))
    padded[: stego.height, : stego.width] = flags
    sums = padded.reshape(by, 8, bx, 8).sum(axis=(1, 3))
    ones = np.zeros_like(padded)
    ones[: stego.height, : stego.width] = 1
    area = ones.reshape(by, 8, bx, 8).sum(axis=(1, 3))
    return KmeansVerifyResult(TamperMap(flags), sums / area)
