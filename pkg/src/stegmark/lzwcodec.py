"""Variable-width LZW.

Wire format: 4-byte big-endian code count, then the codes bit-packed
MSB-first.  The width of a code is the smallest ``w >= 9`` with
``next_code < 2**w`` at the moment the code is emitted, capped at 16; the
table freezes when it holds 2**16 entries.  There is no end-of-data code.
"""

from __future__ import annotations

import numpy as np

MIN_WIDTH = 9
MAX_WIDTH = 16
MAX_ENTRIES = 1 << MAX_WIDTH


class LzwDecodeError(ValueError):
    pass


class InvalidCodeError(LzwDecodeError):
    pass


class TruncatedStreamError(LzwDecodeError):
    pass


def _width_for(next_code: int) -> int:
    return min(max(MIN_WIDTH, next_code.bit_length()), MAX_WIDTH)


def _width_runs(count: int):
    """Yield ``(start, stop, width)`` runs covering code indices ``0..count-1``.

    Code ``i`` is emitted when ``next_code = min(256 + i, 2**16)``.
    """
    i = 0
    while i < count:
        w = _width_for(min(256 + i, MAX_ENTRIES))
        stop = count if w == MAX_WIDTH else min(count, (1 << w) - 256)
        yield i, stop, w
        i = stop


def code_widths(count: int) -> np.ndarray:
    out = np.empty(count, dtype=np.int64)
    for a, b, w in _width_runs(count):
        out[a:b] = w
    return out


def encode_codes(data: bytes) -> list[int]:
    """Greedy longest-match LZW on a 256-entry initial table."""
    if not data:
        return []
    table = {bytes([i]): i for i in range(256)}
    next_code = 256
    codes = []
    w = data[:1]
    for i in range(1, len(data)):
        wc = w + data[i : i + 1]
        if wc in table:
            w = wc
            continue
        codes.append(table[w])
        if next_code < MAX_ENTRIES:
            table[wc] = next_code
            next_code += 1
        w = data[i : i + 1]
    codes.append(table[w])
    return codes


def decode_codes(codes) -> bytes:
    table = [bytes([i]) for i in range(256)]
    out = bytearray()
    prev = None
    for pos, code in enumerate(codes):
        if prev is None:
            if code >= 256:
                raise InvalidCodeError(f"code {code} at position 0 exceeds initial table")
            entry = table[code]
        elif code < len(table):
            entry = table[code]
        elif code == len(table) and len(table) < MAX_ENTRIES:
            # the code names the entry under construction
            entry = prev + prev[:1]
        else:
            raise InvalidCodeError(
                f"code {code} at position {pos} but table holds {len(table)} entries"
            )
        out += entry
        if prev is not None and len(table) < MAX_ENTRIES:
            table.append(prev + entry[:1])
        prev = entry
    return bytes(out)


def pack_codes(codes) -> bytes:
    n = len(codes)
    header = n.to_bytes(4, "big")
    if n == 0:
        return header
    arr = np.asarray(codes, dtype=np.int64)
    parts = []
    for a, b, w in _width_runs(n):
        shifts = np.arange(w - 1, -1, -1, dtype=np.int64)
        parts.append(((arr[a:b, None] >> shifts) & 1).astype(np.uint8).reshape(-1))
    return header + np.packbits(np.concatenate(parts)).tobytes()


def unpack_codes(stream: bytes) -> list[int]:
    if len(stream) < 4:
        raise TruncatedStreamError("stream shorter than its 4-byte code count")
    n = int.from_bytes(stream[:4], "big")
    if n == 0:
        return []
    runs = list(_width_runs(n))
    need = sum((b - a) * w for a, b, w in runs)
    body = stream[4:]
    if len(body) * 8 < need:
        raise TruncatedStreamError(f"stream holds {len(body) * 8} bits, {need} needed for {n} codes")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8)).astype(np.int64)
    out = []
    pos = 0
    for a, b, w in runs:
        seg = bits[pos : pos + (b - a) * w].reshape(b - a, w)
        out.append(seg @ (1 << np.arange(w - 1, -1, -1, dtype=np.int64)))
        pos += (b - a) * w
    return np.concatenate(out).tolist()


def lzw_compress(data: bytes) -> bytes:
    return pack_codes(encode_codes(bytes(data)))


def lzw_decompress(stream: bytes) -> bytes:
    return decode_codes(unpack_codes(bytes(stream)))
