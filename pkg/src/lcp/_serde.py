"""Internal byte-level plumbing shared by the codecs and the container.

Varints are unsigned LEB128.  Multi-byte scalars are little-endian.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptStream
from .model import QuantGrid

_GRID_HEAD = struct.Struct("<dBB")  # error_bound, source_width, dim_count


def write_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError(f"varints are unsigned, got {value}")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def varint_size(value: int) -> int:
    size = 1
    while value >= 0x80:
        value >>= 7
        size += 1
    return size


class ByteCursor:
    """Sequential reader over a bytes-like object with structural checks."""

    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CorruptStream(
                f"need {n} bytes at offset {self.pos}, only {self.remaining()} available"
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def take_byte(self) -> int:
        return self.take(1)[0]

    def take_varint(self, limit: int = 2**63 - 1) -> int:
        value = 0
        shift = 0
        while True:
            byte = self.take_byte()
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                break
            shift += 7
            if shift > 63:
                raise CorruptStream("varint longer than 64 bits")
        if value > limit:
            raise CorruptStream(f"varint {value} exceeds limit {limit}")
        return value

    def take_struct(self, fmt: struct.Struct):
        return fmt.unpack(self.take(fmt.size))

    def expect_end(self) -> None:
        if self.remaining():
            raise CorruptStream(f"{self.remaining()} unexpected trailing bytes")


def write_grid(out: bytearray, grid: QuantGrid) -> None:
    out += _GRID_HEAD.pack(grid.error_bound, grid.source_width, grid.dim_count)
    out += grid.minima.astype("<f8").tobytes()


def read_grid(cur: ByteCursor) -> QuantGrid:
    error_bound, source_width, dim_count = cur.take_struct(_GRID_HEAD)
    if dim_count < 1:
        raise CorruptStream("grid record with zero dimensions")
    if source_width not in (4, 8):
        raise CorruptStream(f"grid record with unknown source width {source_width}")
    if not (error_bound > 0.0 and np.isfinite(error_bound)):
        raise CorruptStream(f"grid record with invalid error bound {error_bound}")
    minima = np.frombuffer(cur.take(8 * dim_count), dtype="<f8").astype(np.float64)
    return QuantGrid(error_bound, minima, source_width)
