"""Histogram-shifting reversible data hiding with contrast enhancement.

Two peak bins ``pp1 < pp2`` of the intensity histogram are split to carry
bits while everything outside them is pushed one step outwards.  The same
peaks are used for every round.  Samples sitting at 0 or 255 before a round
are frozen for that round and recorded in the round's overflow map, which
keeps the process exactly invertible.

Colour images are processed on the HSV value plane ``V = max(R, G, B)``: a
change of V by +-1 is applied to every channel that attains the maximum.
Lowering V can make a third channel tie with the new maximum, so for those
pixels the original max-channel mask is stored in the recovery record.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import container, lzwcodec
from .container import BitCursor, CapacityError, Scheme
from .imagecore import RasterImage, value_plane

SIDECAR_MAGIC = "HSRDH1"
GRAY = "gray"
HSV_VALUE = "hsv"


class DegenerateHistogramError(ValueError):
    pass


class RecordMismatchError(ValueError):
    """The stego image does not decode consistently under the recovery record."""


@dataclass(frozen=True)
class IntensityHistogram:
    counts: np.ndarray
    pp1: int
    pp2: int


@dataclass
class RecoveryRecord:
    pp1: int
    pp2: int
    rounds: int
    mode: str
    width: int
    height: int
    overflow_maps: list = field(default_factory=list)  # per round, bool (h, w)
    channel_masks: list = field(default_factory=list)  # per round, uint8 (h, w); HSV mode only

    def to_bytes(self) -> bytes:
        out = io.BytesIO()
        out.write(
            f"{SIDECAR_MAGIC} {self.pp1} {self.pp2} {self.rounds} {self.mode} {self.width} {self.height}\n".encode()
        )
        for r in range(self.rounds):
            blobs = [np.packbits(self.overflow_maps[r].reshape(-1)).tobytes()]
            if self.mode == HSV_VALUE:
                blobs.append(self.channel_masks[r].astype(np.uint8).tobytes())
            for blob in blobs:
                comp = lzwcodec.lzw_compress(blob)
                out.write(len(comp).to_bytes(4, "big"))
                out.write(comp)
        return out.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> RecoveryRecord:
        nl = data.find(b"\n")
        parts = data[:nl].decode("ascii", "replace").split() if nl >= 0 else []
        if len(parts) != 7 or parts[0] != SIDECAR_MAGIC:
            raise ValueError("not an HSRDH1 recovery record")
        pp1, pp2, rounds = (int(p) for p in parts[1:4])
        mode = parts[4]
        width, height = int(parts[5]), int(parts[6])
        if mode not in (GRAY, HSV_VALUE):
            raise ValueError(f"unknown record mode {mode!r}")
        pos = nl + 1
        npix = width * height

        def blob():
            nonlocal pos
            if pos + 4 > len(data):
                raise ValueError("recovery record truncated")
            n = int.from_bytes(data[pos : pos + 4], "big")
            raw = lzwcodec.lzw_decompress(data[pos + 4 : pos + 4 + n])
            pos += 4 + n
            return raw

        maps, masks = [], []
        for _ in range(rounds):
            bits = np.unpackbits(np.frombuffer(blob(), dtype=np.uint8))[:npix]
            if len(bits) != npix:
                raise ValueError("overflow map size does not match the image")
            maps.append(bits.astype(bool).reshape(height, width))
            if mode == HSV_VALUE:
                m = np.frombuffer(blob(), dtype=np.uint8)
                if len(m) != npix:
                    raise ValueError("channel mask size does not match the image")
                masks.append(m.reshape(height, width).copy())
        return cls(pp1, pp2, rounds, mode, width, height, maps, masks)


def _histogram(values: np.ndarray) -> np.ndarray:
    return np.bincount(values.reshape(-1), minlength=256)


def _select_peaks(counts: np.ndarray, lo: int, hi: int):
    cand = [v for v in range(lo, hi + 1) if counts[v] > 0]
    if len(cand) < 2:
        raise DegenerateHistogramError("histogram has fewer than two usable nonzero bins")
    cand.sort(key=lambda v: (-counts[v], v))
    a, b = sorted(cand[:2])
    return a, b


def build_histogram(img: RasterImage, interior: bool = False) -> IntensityHistogram:
    """Histogram of grayscale samples, or of V = max(R, G, B) for colour.

    With ``interior=True`` peaks are restricted to 1..254, the bins that can
    be split without leaving the sample range.
    """
    counts = _histogram(value_plane(img))
    lo, hi = (1, 254) if interior else (0, 255)
    pp1, pp2 = _select_peaks(counts, lo, hi)
    return IntensityHistogram(counts, pp1, pp2)


def hsrdh_capacity(img: RasterImage) -> int:
    """Bits carried by the first round."""
    h = build_histogram(img, interior=True)
    return int(h.counts[h.pp1] + h.counts[h.pp2])


def _forward_round(vals, pp1, pp2, cursor: BitCursor):
    frozen = (vals == 0) | (vals == 255)
    live = ~frozen
    carriers = np.nonzero(live & ((vals == pp1) | (vals == pp2)))[0]
    bits = np.zeros(len(carriers), dtype=np.int64)
    chunk = cursor.read(len(carriers))
    bits[: len(chunk)] = chunk
    delta = np.zeros_like(vals)
    delta[live & (vals < pp1)] = -1
    delta[live & (vals > pp2)] = 1
    at1 = vals[carriers] == pp1
    delta[carriers] = np.where(at1, -bits, bits)
    return delta, frozen, len(chunk)


def _inverse_round(vals, pp1, pp2, frozen):
    live = ~frozen
    if np.any(frozen & (vals != 0) & (vals != 255)):
        raise RecordMismatchError("overflow map marks samples that are not at 0 or 255")
    in1 = live & ((vals == pp1 - 1) | (vals == pp1))
    in2 = live & ((vals == pp2) | (vals == pp2 + 1))
    carriers = np.nonzero(in1 | in2)[0]
    cv = vals[carriers]
    bits = np.where(cv == pp1 - 1, 1, np.where(cv == pp2 + 1, 1, 0)).astype(np.uint8)
    restored = vals.copy()
    restored[in1] = pp1
    restored[in2] = pp2
    restored[live & (vals < pp1 - 1)] += 1
    restored[live & (vals > pp2 + 1)] -= 1
    if np.any(live & ((restored <= 0) | (restored >= 255))):
        raise RecordMismatchError("decoded samples violate the shifting rules")
    return restored, bits


def _max_mask(rgb):
    v = rgb.max(axis=1)
    return (
        ((rgb[:, 0] == v).astype(np.uint8) << 2)
        | ((rgb[:, 1] == v).astype(np.uint8) << 1)
        | (rgb[:, 2] == v).astype(np.uint8)
    )


_MASK_BITS = np.array([4, 2, 1], dtype=np.uint8)


def _embed_rounds(img: RasterImage, bits, rounds: int):
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    bits = np.asarray(bits, dtype=np.uint8)
    mode = GRAY if img.is_gray else HSV_VALUE
    rec = RecoveryRecord(0, 0, 0, mode, img.width, img.height)
    if rounds == 0:
        if len(bits):
            raise CapacityError(len(bits), 0)
        return img, rec
    hist = build_histogram(img, interior=True)
    rec.pp1, rec.pp2, rec.rounds = hist.pp1, hist.pp2, rounds
    cursor = BitCursor(bits)
    rgb = img.pixels.reshape(-1, img.channels).astype(np.int64)
    vals = rgb.max(axis=1)
    for _ in range(rounds):
        delta, frozen, _used = _forward_round(vals, hist.pp1, hist.pp2, cursor)
        rec.overflow_maps.append(frozen.reshape(img.height, img.width))
        if mode == HSV_VALUE:
            at_max = rgb == vals[:, None]
            down = delta == -1
            # a non-max channel one below the max would join the max set
            collide = down & ((~at_max) & (rgb == (vals - 1)[:, None])).any(axis=1)
            masks = np.zeros(len(vals), dtype=np.uint8)
            masks[collide] = _max_mask(rgb[collide])
            rec.channel_masks.append(masks.reshape(img.height, img.width))
            rgb = rgb + at_max * delta[:, None]
        else:
            rgb = rgb + delta[:, None]
        vals = vals + delta
    if cursor.remaining:
        raise CapacityError(len(bits), cursor.position)
    out = RasterImage(rgb.astype(np.uint8).reshape(img.pixels.shape))
    return out, rec


def _extract_rounds(img: RasterImage, rec: RecoveryRecord):
    if (img.width, img.height) != (rec.width, rec.height):
        raise RecordMismatchError("recovery record was made for a different image size")
    if (rec.mode == GRAY) != img.is_gray:
        raise RecordMismatchError(f"record mode {rec.mode} does not match image channels")
    rgb = img.pixels.reshape(-1, img.channels).astype(np.int64)
    vals = rgb.max(axis=1)
    per_round = []
    for r in range(rec.rounds - 1, -1, -1):
        frozen = rec.overflow_maps[r].reshape(-1)
        restored, bits = _inverse_round(vals, rec.pp1, rec.pp2, frozen)
        delta = vals - restored
        if rec.mode == HSV_VALUE:
            moved = rgb == vals[:, None]
            masks = rec.channel_masks[r].reshape(-1)
            use = masks != 0
            if np.any(use & (delta != -1)):
                raise RecordMismatchError("channel mask present on a pixel whose value did not drop")
            moved[use] = (masks[use, None] & _MASK_BITS[None, :]) != 0
            rgb = rgb - moved * delta[:, None]
            if np.any(rgb.max(axis=1) != restored):
                raise RecordMismatchError("restored channels disagree with the value plane")
        else:
            rgb = rgb - delta[:, None]
        vals = restored
        per_round.append(bits)
    bits = np.concatenate(per_round[::-1]) if per_round else np.zeros(0, dtype=np.uint8)
    cover = RasterImage(rgb.astype(np.uint8).reshape(img.pixels.shape))
    return bits, cover


def hsrdh_embed_bits(img: RasterImage, bits, rounds: int = 1):
    """Raw-bit variant: no frame, bits consumed in raster order per round."""
    return _embed_rounds(img, bits, rounds)


def hsrdh_extract_bits(img: RasterImage, rec: RecoveryRecord):
    """Returns every carried bit (payload plus padding) and the restored cover."""
    return _extract_rounds(img, rec)


def hsrdh_embed(img: RasterImage, payload: bytes, rounds: int = 1):
    """Embed a framed payload; returns ``(stego, record)``.

    RGB input is handled on the HSV value plane (see :func:`hsv_value_embed`).
    """
    return _embed_rounds(img, container.frame_payload(payload, Scheme.HSRDH), rounds)


def hsv_value_embed(img: RasterImage, payload: bytes, rounds: int = 1):
    if img.is_gray:
        raise ValueError("HSV value embedding needs an RGB image")
    return hsrdh_embed(img, payload, rounds)


def hsrdh_extract(img: RasterImage, rec: RecoveryRecord):
    """Returns ``(payload, restored_cover)``."""
    bits, cover = _extract_rounds(img, rec)
    scheme, payload = container.parse_frame(bits)
    container.expect_scheme(scheme, Scheme.HSRDH)
    return payload, cover


hsv_value_extract = hsrdh_extract
