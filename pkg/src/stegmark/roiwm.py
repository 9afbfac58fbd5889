"""ROI/RONI recovery watermarking and the keyed self-hash tag.

The ROI samples are LZW-compressed, XORed with the key's stream, framed and
written 1 bit per sample into the LSBs of the RONI regions.  The ROI itself
is never touched, and a verifier can both locate and undo any change made
to it as long as the RONI survives.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import container, lzwcodec
from .container import CapacityError, FrameError, NoFrameError, Scheme
from .imagecore import RasterImage, Region
from .keystream import StegoKey, SplitMix64, fnv1a64, keyed_permutation, xor_keystream
from .metrics import TamperMap

SELFHASH_BITS = container.frame_bits_needed(8)


class WatermarkDestroyedError(ValueError):
    """The RONI no longer holds a readable ROI copy."""


@dataclass(frozen=True)
class RoiWatermarkSpec:
    roi: Region
    key: StegoKey
    roni: tuple[Region, ...] = field(default=())

    def resolved(self, img: RasterImage) -> RoiWatermarkSpec:
        roni = self.roni or default_roni(img, self.roi)
        spec = RoiWatermarkSpec(self.roi, self.key, tuple(roni))
        spec.validate(img)
        return spec

    def validate(self, img: RasterImage):
        self.roi.check_bounds(img)
        regions = list(self.roni)
        if not regions:
            raise ValueError("no RONI regions to embed into")
        for r in regions:
            r.check_bounds(img)
            if r.overlaps(self.roi):
                raise ValueError(f"RONI {r} overlaps ROI {self.roi}")
        for i, a in enumerate(regions):
            for b in regions[i + 1 :]:
                if a.overlaps(b):
                    raise ValueError(f"RONI regions {a} and {b} overlap")


def default_roni(img: RasterImage, roi: Region | None = None) -> list[Region]:
    """Top 10% of rows plus left and right 10% columns below them.

    Strips that would intersect ``roi`` are dropped.
    """
    th = max(1, img.height // 10)
    sw = max(1, img.width // 10)
    out = [Region(0, 0, img.width, th)]
    if img.height > th:
        out.append(Region(0, th, sw, img.height - th))
        if img.width > 2 * sw:
            out.append(Region(img.width - sw, th, sw, img.height - th))
    if roi is not None:
        out = [r for r in out if not r.overlaps(roi)]
    return out


def _roni_indices(img: RasterImage, regions) -> np.ndarray:
    idx = np.arange(img.samples.size, dtype=np.int64).reshape(img.pixels.shape)
    return np.concatenate([idx[r.slices].reshape(-1) for r in regions])


def roni_capacity(img: RasterImage, spec: RoiWatermarkSpec) -> int:
    spec = spec.resolved(img)
    return sum(r.w * r.h for r in spec.roni) * img.channels


def _roi_payload(img: RasterImage, spec: RoiWatermarkSpec) -> bytes:
    roi = img.pixels[spec.roi.slices]
    return xor_keystream(lzwcodec.lzw_compress(roi.tobytes()), spec.key)


def roiwm_embed(img: RasterImage, spec: RoiWatermarkSpec) -> RasterImage:
    spec = spec.resolved(img)
    bits = container.frame_payload(_roi_payload(img, spec), Scheme.ROIWM)
    slots = _roni_indices(img, spec.roni)
    if len(bits) > len(slots):
        raise CapacityError(len(bits), len(slots))
    flat = img.copy_array().reshape(-1)
    used = slots[: len(bits)]
    flat[used] = (flat[used] & 0xFE) | bits
    return RasterImage(flat.reshape(img.pixels.shape))


def roiwm_verify(img: RasterImage, spec: RoiWatermarkSpec):
    """Returns ``(tamper_map_over_roi, recovered_roi_image)``."""
    spec = spec.resolved(img)
    slots = _roni_indices(img, spec.roni)
    bits = (img.samples[slots] & 1).astype(np.uint8)
    try:
        scheme, payload = container.parse_frame(bits)
        container.expect_scheme(scheme, Scheme.ROIWM)
        raw = lzwcodec.lzw_decompress(xor_keystream(payload, spec.key))
    except (FrameError, lzwcodec.LzwDecodeError) as exc:
        raise WatermarkDestroyedError(f"watermark destroyed: {exc}") from exc
    r = spec.roi
    shape = (r.h, r.w, img.channels)
    if len(raw) != r.h * r.w * img.channels:
        raise WatermarkDestroyedError(
            f"watermark destroyed: recovered {len(raw)} bytes for a {r.w}x{r.h}x{img.channels} ROI"
        )
    reference = np.frombuffer(raw, dtype=np.uint8).reshape(shape)
    current = img.pixels[r.slices]
    flags = (reference != current).any(axis=2)
    return TamperMap(flags), RasterImage(reference)


def restore_roi(img: RasterImage, spec: RoiWatermarkSpec, recovered: RasterImage) -> RasterImage:
    out = img.copy_array()
    out[spec.roi.slices] = recovered.pixels
    return RasterImage(out)


# --------------------------------------------------------------------------
# self-hash tag


class Verdict(str, enum.Enum):
    AUTHENTIC = "AUTHENTIC"
    TAMPERED = "TAMPERED"
    NO_TAG = "NO_TAG"


def _tag_slots(img: RasterImage, key: StegoKey) -> np.ndarray:
    n = img.samples.size
    if n < SELFHASH_BITS:
        raise CapacityError(SELFHASH_BITS, n)
    return keyed_permutation(n, key)[:SELFHASH_BITS]


def _keyed_digest(flat_zeroed: np.ndarray, key: StegoKey) -> bytes:
    digest = fnv1a64(flat_zeroed).to_bytes(8, "big")
    return bytes(a ^ b for a, b in zip(digest, SplitMix64(key).stream_bytes(8)))


def selfhash_tag(img: RasterImage, key: StegoKey) -> RasterImage:
    slots = _tag_slots(img, key)
    flat = img.copy_array().reshape(-1)
    flat[slots] &= 0xFE
    bits = container.frame_payload(_keyed_digest(flat, key), Scheme.SELFHASH)
    flat[slots] |= bits
    return RasterImage(flat.reshape(img.pixels.shape))


def selfhash_check(img: RasterImage, key: StegoKey) -> Verdict:
    slots = _tag_slots(img, key)
    flat = img.copy_array().reshape(-1)
    bits = (flat[slots] & 1).astype(np.uint8)
    try:
        scheme, payload = container.parse_frame(bits)
        container.expect_scheme(scheme, Scheme.SELFHASH)
    except NoFrameError:
        return Verdict.NO_TAG
    except FrameError:
        return Verdict.TAMPERED
    flat[slots] &= 0xFE
    return Verdict.AUTHENTIC if payload == _keyed_digest(flat, key) else Verdict.TAMPERED
