"""Pure-numpy kernel implementations.

Used when the compiled module is unavailable or when ``LCP_BACKEND=fallback``
forces it.  Outputs are byte-identical to the native kernels; the native
module exists purely for speed.
"""
from __future__ import annotations

import numpy as np


def pack_fixed(values: np.ndarray, width: int) -> bytes:
    """Pack each value into ``width`` bits, MSB first, zero-padded tail byte."""
    n = values.shape[0]
    if n == 0 or width == 0:
        return b""
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    bits = ((values[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder="big").tobytes()


def unpack_fixed(data: bytes, count: int, width: int) -> np.ndarray:
    if count == 0 or width == 0:
        return np.zeros(count, dtype=np.uint64)
    total_bits = count * width
    bits = np.unpackbits(
        np.frombuffer(data, dtype=np.uint8), count=total_bits, bitorder="big"
    )
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    return (bits.reshape(count, width).astype(np.uint64) << shifts[None, :]).sum(
        axis=1, dtype=np.uint64
    )


def huffman_encode(symbol_indices: np.ndarray, codes: np.ndarray, lengths: np.ndarray) -> bytes:
    """Concatenate per-symbol canonical codes, MSB first."""
    n = symbol_indices.shape[0]
    if n == 0:
        return b""
    sym_codes = codes[symbol_indices]
    sym_lens = lengths[symbol_indices].astype(np.int64)
    total = int(sym_lens.sum())
    ends = np.cumsum(sym_lens)
    rep_codes = np.repeat(sym_codes, sym_lens)
    rep_lens = np.repeat(sym_lens, sym_lens)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(ends - sym_lens, sym_lens)
    shift = (rep_lens - 1 - offsets).astype(np.uint64)
    bits = ((rep_codes >> shift) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits, bitorder="big").tobytes()


def huffman_decode(
    data: bytes,
    count: int,
    first_code: np.ndarray,
    level_base: np.ndarray,
    level_count: np.ndarray,
    min_len: int,
    max_len: int,
) -> np.ndarray:
    """Walk the canonical code tables bit by bit; returns canonical symbol ranks."""
    out = np.empty(count, dtype=np.int64)
    fc = first_code.tolist()
    lb = level_base.tolist()
    lc = level_count.tolist()
    acc = 0
    nbits = 0
    pos = 0
    nbytes = len(data)
    for i in range(count):
        code = 0
        need = min_len
        while need:
            if nbits == 0:
                if pos >= nbytes:
                    raise ValueError("bit stream exhausted")
                acc = data[pos]
                pos += 1
                nbits = 8
            take = need if need < nbits else nbits
            code = (code << take) | ((acc >> (nbits - take)) & ((1 << take) - 1))
            nbits -= take
            need -= take
        level = min_len
        while True:
            idx = code - fc[level]
            if 0 <= idx < lc[level]:
                out[i] = lb[level] + idx
                break
            level += 1
            if level > max_len:
                raise ValueError("invalid code in bit stream")
            if nbits == 0:
                if pos >= nbytes:
                    raise ValueError("bit stream exhausted")
                acc = data[pos]
                pos += 1
                nbits = 8
            code = (code << 1) | ((acc >> (nbits - 1)) & 1)
            nbits -= 1
    return out


def group_by_ids(ids: np.ndarray, want_perm: bool = True):
    """Group equal ids: sorted uniques, counts, per-element rank, stable permutation.

    ``perm[j]`` is the original position of the element at group-major slot
    ``j``; elements of one group keep their input order.
    """
    uniq, inverse, counts = np.unique(ids, return_inverse=True, return_counts=True)
    ranks = inverse.astype(np.int64, copy=False)
    perm = None
    if want_perm:
        perm = np.argsort(ranks, kind="stable").astype(np.int64, copy=False)
    return uniq.astype(np.int64, copy=False), counts.astype(np.int64, copy=False), ranks, perm


def stable_positions(ranks: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Inverse of the group-major permutation: slot index for each element."""
    perm = np.argsort(ranks, kind="stable")
    pos = np.empty(ranks.shape[0], dtype=np.int64)
    pos[perm] = np.arange(ranks.shape[0], dtype=np.int64)
    return pos
