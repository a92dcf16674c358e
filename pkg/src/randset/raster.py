"""Bit-exact reading and writing of binary rasters in the Netpbm PBM format.

Foreground pixels are PBM value 1 (printed black). Both the plain (P1) and
raw (P4) variants round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["BinaryRaster", "PbmParseError", "parse_pbm", "write_pbm", "read_pbm_file", "write_pbm_file"]

_WHITESPACE = b" \t\n\r\x0b\x0c"


class PbmParseError(ValueError):
    """Malformed PBM input. Carries the byte offset where parsing failed."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class BinaryRaster:
    """An immutable rectangular bit grid; True means foreground.

    ``bits`` is row-major with shape (height, width), so pixel (x, y) is
    ``bits[y, x]``.
    """

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"raster dimensions must be positive, got {self.width}x{self.height}")
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != (self.height, self.width):
            raise ValueError(f"bits shape {bits.shape} does not match {self.height}x{self.width}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_array(cls, bits) -> "BinaryRaster":
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError("expected a 2-d boolean array")
        h, w = bits.shape
        return cls(width=w, height=h, bits=bits)

    def foreground_count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryRaster):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.bits, other.bits)
        )

    def __repr__(self):
        return f"BinaryRaster({self.width}x{self.height}, {self.foreground_count()} fg)"


class _Tokenizer:
    """Whitespace/comment-skipping scanner over PBM header bytes."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_filler(self):
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = self.data[self.pos : self.pos + 1]
            if c in (b"#",):
                while self.pos < n and data[self.pos : self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            elif c in _WHITESPACE:
                self.pos += 1
            else:
                return

    def read_uint(self, what: str) -> int:
        self.skip_filler()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if self.pos == start:
            raise PbmParseError(f"expected {what}", start)
        return int(self.data[start : self.pos])


def parse_pbm(data: bytes) -> BinaryRaster:
    """Parse plain (P1) or raw (P4) PBM bytes into a raster.

    PBM value 1 maps to foreground. Plain-format whitespace and ``#``
    comments are tolerated; raw rows are padded to byte boundaries.
    """
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError("parse_pbm expects bytes")
    data = bytes(data)
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        raise PbmParseError(f"bad magic {magic!r}, expected P1 or P4", 0)
    tok = _Tokenizer(data)
    tok.pos = 2
    width = tok.read_uint("width")
    height = tok.read_uint("height")
    if width < 1 or height < 1:
        raise PbmParseError(f"nonpositive dimensions {width}x{height}", 2)

    if magic == b"P1":
        bits = np.empty(width * height, dtype=bool)
        count = 0
        while count < width * height:
            tok.skip_filler()
            if tok.pos >= len(data):
                raise PbmParseError(
                    f"truncated payload: got {count} of {width * height} pixels", tok.pos
                )
            c = data[tok.pos : tok.pos + 1]
            if c == b"1":
                bits[count] = True
            elif c == b"0":
                bits[count] = False
            else:
                raise PbmParseError(f"unexpected character {c!r} in plain payload", tok.pos)
            tok.pos += 1
            count += 1
        return BinaryRaster(width, height, bits.reshape(height, width))

    # P4: exactly one whitespace byte separates the header from the payload.
    if tok.pos >= len(data) or data[tok.pos : tok.pos + 1] not in _WHITESPACE:
        raise PbmParseError("expected whitespace before raw payload", tok.pos)
    tok.pos += 1
    row_bytes = (width + 7) // 8
    need = row_bytes * height
    payload = data[tok.pos : tok.pos + need]
    if len(payload) < need:
        raise PbmParseError(
            f"truncated payload: got {len(payload)} of {need} bytes", tok.pos + len(payload)
        )
    rows = np.frombuffer(payload, dtype=np.uint8).reshape(height, row_bytes)
    bits = np.unpackbits(rows, axis=1)[:, :width].astype(bool)
    return BinaryRaster(width, height, bits)


def write_pbm(raster: BinaryRaster, variant: str = "raw") -> bytes:
    """Serialize a raster as PBM bytes; ``variant`` is "plain" or "raw"."""
    if variant not in ("plain", "raw"):
        raise ValueError(f"unknown variant {variant!r}")
    header = f"{'P1' if variant == 'plain' else 'P4'}\n{raster.width} {raster.height}\n".encode()
    if variant == "plain":
        body = b"\n".join(
            b" ".join(b"1" if v else b"0" for v in row) for row in raster.bits
        )
        return header + body + b"\n"
    packed = np.packbits(raster.bits.astype(np.uint8), axis=1)
    return header + packed.tobytes()


def read_pbm_file(path) -> BinaryRaster:
    return parse_pbm(Path(path).read_bytes())


def write_pbm_file(path, raster: BinaryRaster, variant: str = "raw") -> None:
    Path(path).write_bytes(write_pbm(raster, variant))
