"""Deterministic keyed primitives shared by every scheme.

The generator is SplitMix64; permutations are Fisher-Yates shuffles driven
by it with modulo-rejection sampling, so stego files made with a given key
are reproducible everywhere.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import FNV_OFFSET, FNV_PRIME, GOLDEN, MASK64, MIX1, MIX2


@dataclass(frozen=True)
class StegoKey:
    seed: int

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ValueError("key seed must be a 64-bit unsigned integer")

    @classmethod
    def from_hex(cls, text: str) -> StegoKey:
        t = text.strip().lower()
        if t.startswith("0x"):
            t = t[2:]
        if not 1 <= len(t) <= 16 or any(ch not in "0123456789abcdef" for ch in t):
            raise ValueError(f"key must be 1-16 hex digits: {text!r}")
        return cls(int(t, 16))

    def to_bytes(self) -> bytes:
        return self.seed.to_bytes(8, "big")

    def __repr__(self):
        # keys never appear in logs or reports
        return "StegoKey(<hidden>)"


class SplitMix64:
    """Single-owner generator state."""

    def __init__(self, key):
        seed = key.seed if isinstance(key, StegoKey) else int(key)
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def stream_bytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += self.next_u64().to_bytes(8, "big")
        return bytes(out[:n])


def keyed_permutation(n: int, key: StegoKey) -> np.ndarray:
    """Fisher-Yates shuffle of ``0..n-1`` under ``key``."""
    if n < 1:
        raise ValueError("cannot permute an empty domain")
    return _kernels.permutation(int(n), np.uint64(key.seed))


def inverse_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm), dtype=perm.dtype)
    return inv


def fnv1a64(data) -> int:
    if isinstance(data, np.ndarray):
        arr = np.ascontiguousarray(data, dtype=np.uint8).reshape(-1)
    else:
        arr = np.frombuffer(bytes(data), dtype=np.uint8)
    return int(_kernels.fnv1a64_array(arr))


def fnv1a64_bytes(data: bytes) -> int:
    """Small helper used for short inputs where kernel dispatch is overkill."""
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def crc32(data) -> int:
    # zlib implements exactly the reflected 0xEDB88320 variant with
    # init/final XOR 0xFFFFFFFF.
    return zlib.crc32(bytes(data)) & 0xFFFFFFFF


def xor_keystream(data, key: StegoKey) -> bytes:
    """XOR ``data`` with the key's byte stream (big-endian words); an involution."""
    data = bytes(data)
    ks = np.frombuffer(SplitMix64(key).stream_bytes(len(data)), dtype=np.uint8)
    return (np.frombuffer(data, dtype=np.uint8) ^ ks).tobytes()
