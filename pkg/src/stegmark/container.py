"""Payload framing shared by every embedding scheme.

Frame layout (big-endian, MSB-first bits)::

    magic 'M' 'I' | version 0x01 | scheme id | length (4 bytes) | payload | crc32(payload)
"""

from __future__ import annotations

import enum

import numpy as np

from .keystream import crc32

MAGIC = b"MI"
VERSION = 1
HEADER_BYTES = 8
OVERHEAD_BYTES = 12
OVERHEAD_BITS = OVERHEAD_BYTES * 8


class Scheme(enum.IntEnum):
    LSB = 1
    PVD = 2
    HSRDH = 3
    SVDWM = 4
    KMEANS = 5
    ROIWM = 6
    SELFHASH = 7


class FrameError(ValueError):
    pass


class NoFrameError(FrameError):
    """Bad magic: the carrier holds no frame."""

    def __init__(self, msg="no hidden frame"):
        super().__init__(msg)


class VersionError(FrameError):
    pass


class LengthError(FrameError):
    pass


class CorruptPayloadError(FrameError):
    def __init__(self, msg="payload corrupted"):
        super().__init__(msg)


class OversizeError(ValueError):
    pass


class CapacityError(ValueError):
    """Payload does not fit the carrier."""

    def __init__(self, needed, available, unit="bits"):
        super().__init__(f"capacity exceeded: needed={needed} available={available} {unit}")
        self.needed = needed
        self.available = available


def bytes_to_bits(data) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits) -> bytes:
    bits = np.asarray(bits, dtype=np.uint8)
    if len(bits) % 8:
        raise ValueError("bit count is not a multiple of 8")
    return np.packbits(bits).tobytes()


def frame_bytes(payload: bytes, scheme_id: int) -> bytes:
    payload = bytes(payload)
    if len(payload) >= 1 << 32:
        raise OversizeError(f"payload of {len(payload)} bytes exceeds the 32-bit length field")
    return (
        MAGIC
        + bytes([VERSION, int(scheme_id)])
        + len(payload).to_bytes(4, "big")
        + payload
        + crc32(payload).to_bytes(4, "big")
    )


def frame_payload(payload: bytes, scheme_id: int) -> np.ndarray:
    return bytes_to_bits(frame_bytes(payload, scheme_id))


def frame_bits_needed(payload_len: int) -> int:
    return (OVERHEAD_BYTES + payload_len) * 8


def parse_header(header: bytes):
    """Validate the 8 header bytes; return ``(scheme_id, length)``."""
    if header[:2] != MAGIC:
        raise NoFrameError()
    if header[2] != VERSION:
        raise VersionError(f"unsupported frame version {header[2]}")
    return header[3], int.from_bytes(header[4:8], "big")


def parse_frame(bits) -> tuple[int, bytes]:
    bits = np.asarray(bits, dtype=np.uint8)
    if len(bits) < OVERHEAD_BITS:
        if len(bits) >= 16 and bits_to_bytes(bits[:16]) != MAGIC:
            raise NoFrameError()
        raise LengthError(f"only {len(bits)} bits available, frame needs at least {OVERHEAD_BITS}")
    scheme_id, length = parse_header(bits_to_bytes(bits[: HEADER_BYTES * 8]))
    total = frame_bits_needed(length)
    if total > len(bits):
        raise LengthError(f"frame declares {length} payload bytes but only {len(bits)} bits are available")
    body = bits_to_bytes(bits[HEADER_BYTES * 8 : total])
    payload, crc = body[:length], body[length:]
    if crc32(payload) != int.from_bytes(crc, "big"):
        raise CorruptPayloadError()
    return scheme_id, payload


def expect_scheme(scheme_id: int, expected: Scheme):
    if scheme_id != expected:
        raise NoFrameError(f"frame belongs to scheme {scheme_id}, expected {int(expected)} ({expected.name})")


class BitCursor:
    """MSB-first reader over a bit array that never passes its capacity."""

    def __init__(self, bits):
        self.bits = np.asarray(bits, dtype=np.uint8)
        self.position = 0

    @property
    def remaining(self):
        return len(self.bits) - self.position

    def read(self, n: int) -> np.ndarray:
        """Up to ``n`` bits; fewer only when the cursor is exhausted."""
        n = max(0, min(n, self.remaining))
        out = self.bits[self.position : self.position + n]
        self.position += n
        return out
