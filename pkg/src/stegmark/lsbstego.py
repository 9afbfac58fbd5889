"""LSB-n embedding in 1-4 low bits of selected channels.

Slots are the selected samples, interleaved in R, G, B order within each
pixel.  The traversal is either raster order or a keyed permutation of the
slots.  Inside one slot the payload fills the low field from its high bit
down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import container
from .container import CapacityError, Scheme
from .imagecore import RasterImage
from .keystream import StegoKey, keyed_permutation

CHANNEL_INDEX = {"r": 0, "g": 1, "b": 2}


@dataclass(frozen=True)
class LsbConfig:
    bits_per_sample: int = 1
    channels: tuple[str, ...] | None = None  # None: every channel of the image
    order: str = "seq"  # "seq" or "perm"
    key: StegoKey | None = None

    def __post_init__(self):
        if not 1 <= self.bits_per_sample <= 4:
            raise ValueError("bits_per_sample must be between 1 and 4")
        if self.order not in ("seq", "perm"):
            raise ValueError(f"unknown order {self.order!r}")
        if self.order == "perm" and self.key is None:
            raise ValueError("permuted order needs a key")
        if self.channels is not None:
            chans = tuple(c.lower() for c in self.channels)
            if not chans:
                raise ValueError("channel mask is empty")
            if len(set(chans)) != len(chans):
                raise ValueError(f"duplicate channels in {self.channels}")
            if any(c not in ("r", "g", "b", "gray") for c in chans):
                raise ValueError(f"unknown channel in {self.channels}")
            if "gray" in chans and len(chans) > 1:
                raise ValueError("gray cannot be combined with colour channels")
            object.__setattr__(self, "channels", chans)

    @classmethod
    def parse_channels(cls, text):
        t = text.strip().lower()
        if t in ("gray", "grey"):
            return ("gray",)
        return tuple(t.replace(",", ""))


def _channel_offsets(img: RasterImage, cfg: LsbConfig):
    if img.is_gray:
        if cfg.channels not in (None, ("gray",)):
            raise ValueError(f"channel mask {cfg.channels} incompatible with a grayscale image")
        return [0]
    if cfg.channels is None:
        return [0, 1, 2]
    if cfg.channels == ("gray",):
        raise ValueError("gray channel mask incompatible with an RGB image")
    return sorted(CHANNEL_INDEX[c] for c in cfg.channels)


def slot_indices(img: RasterImage, cfg: LsbConfig) -> np.ndarray:
    """Flat sample index of every slot, in traversal order."""
    offsets = np.asarray(_channel_offsets(img, cfg), dtype=np.int64)
    npix = img.width * img.height
    slots = (np.arange(npix, dtype=np.int64)[:, None] * img.channels + offsets[None, :]).reshape(-1)
    if cfg.order == "perm":
        slots = slots[keyed_permutation(len(slots), cfg.key)]
    return slots


def lsb_capacity(img: RasterImage, cfg: LsbConfig) -> int:
    return img.width * img.height * len(_channel_offsets(img, cfg)) * cfg.bits_per_sample


def embed_bits(img: RasterImage, bits, cfg: LsbConfig, slots=None) -> RasterImage:
    bits = np.asarray(bits, dtype=np.int64)
    k = cfg.bits_per_sample
    cap = lsb_capacity(img, cfg)
    if len(bits) > cap:
        raise CapacityError(len(bits), cap)
    if len(bits) == 0:
        return img
    if slots is None:
        slots = slot_indices(img, cfg)
    nslots = -(-len(bits) // k)
    padded = np.zeros(nslots * k, dtype=np.int64)
    padded[: len(bits)] = bits
    values = padded.reshape(nslots, k) @ (1 << np.arange(k - 1, -1, -1))
    used = slots[:nslots]
    flat = img.copy_array().reshape(-1)
    orig = flat[used].astype(np.int64)
    field = (1 << k) - 1
    new = (orig & ~field) | values
    tail = nslots * k - len(bits)
    if tail:
        # keep the cover's own bits below a partially filled last field
        low = (1 << tail) - 1
        new[-1] = (new[-1] & ~low) | (orig[-1] & low)
    flat[used] = new.astype(np.uint8)
    return RasterImage(flat.reshape(img.pixels.shape))


def extract_bits(img: RasterImage, cfg: LsbConfig, count=None, slots=None) -> np.ndarray:
    k = cfg.bits_per_sample
    if slots is None:
        slots = slot_indices(img, cfg)
    if count is not None:
        slots = slots[: -(-count // k)]
    fields = img.samples[slots].astype(np.int64)
    shifts = np.arange(k - 1, -1, -1)
    bits = ((fields[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
    return bits if count is None else bits[:count]


def lsb_embed(img: RasterImage, payload: bytes, cfg: LsbConfig, raw: bool = False) -> RasterImage:
    """Hide ``payload``; ``raw=True`` writes the bare bytes without a frame."""
    if raw:
        bits = container.bytes_to_bits(payload)
    else:
        bits = container.frame_payload(payload, Scheme.LSB)
    return embed_bits(img, bits, cfg)


def lsb_extract(img: RasterImage, cfg: LsbConfig) -> bytes:
    slots = slot_indices(img, cfg)
    scheme, payload = container.parse_frame(extract_bits(img, cfg, slots=slots))
    container.expect_scheme(scheme, Scheme.LSB)
    return payload
