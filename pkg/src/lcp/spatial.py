"""Spatial codec: block-structured coding of one quantized frame.

Quantized space is carved into axis-aligned cubes of ``block_edge`` cells
per side.  Each particle splits into (block id, within-block position); only
occupied blocks are stored.  Grouping is hash-based, so cost is linear in
the particle count plus B log B for the occupied blocks, and no global
coordinate sort ever happens.

Payload layout after the shared grid record:

    block_edge          varint
    blocks_per_dim      d varints
    particle_count      varint
    mode byte           bit 0: order stream present
    stream: occupied block ids (sorted, delta-coded)
    stream: per-block particle counts
    d streams: within-block positions, block-major particle order
    stream (optional): per-particle block rank, original order
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from ._serde import ByteCursor, read_grid, write_grid, write_varint
from .coding import encode_stream, read_stream
from .errors import CorruptStream, QuantRangeOverflow
from .model import (
    QUANT_MAX,
    SYMBOL_MAX,
    CompressedFrame,
    Frame,
    Method,
    QuantizedFrame,
    validate_frame,
)
from .quantizer import dequantize, quantize


@dataclass(frozen=True)
class BlockLayout:
    """Geometry of the block decomposition for one frame."""

    block_edge: int
    blocks_per_dim: np.ndarray  # (d,) int64
    origin: np.ndarray          # (d,) float64, the grid minima


@dataclass(frozen=True)
class BlockAssignment:
    layout: BlockLayout
    block_ids: np.ndarray      # (N,) int64, linearized, x varies fastest
    rel_positions: np.ndarray  # (N, d) int64 in [0, block_edge)


@dataclass(frozen=True)
class BlockStreams:
    """Stream-ready view: occupied blocks ascending, particles block-major."""

    block_ids: np.ndarray       # (B,) int64, strictly increasing
    counts: np.ndarray          # (B,) int64, all >= 1
    rel_positions: np.ndarray   # (N, d) int64, block-major order
    order_stream: np.ndarray | None  # (N,) int64 block rank per original particle


def _check_extent(blocks_per_dim, block_edge: int) -> None:
    for bn in blocks_per_dim:
        if int(bn) * block_edge > QUANT_MAX + 1:
            raise QuantRangeOverflow(
                "block grid extent exceeds the quantized integer budget"
            )


def assign_blocks(qframe: QuantizedFrame, block_edge: int) -> BlockAssignment:
    """Split own-grid quantized coordinates into block ids and offsets."""
    if not (isinstance(block_edge, (int, np.integer)) and block_edge >= 1):
        raise ValueError(f"block_edge must be a positive integer, got {block_edge}")
    block_edge = int(block_edge)
    q = qframe.qcoords
    n, d = q.shape
    if n and int(q.min()) < 0:
        raise ValueError(
            "assign_blocks needs own-grid quantized coordinates (all non-negative)"
        )
    if n:
        blocks_per_dim = q.max(axis=0) // block_edge + 1
    else:
        blocks_per_dim = np.zeros(d, dtype=np.int64)
    volume = 1
    for bn in blocks_per_dim.tolist():
        volume *= bn
    if volume > SYMBOL_MAX:
        raise QuantRangeOverflow("too many blocks for the coding integer range")
    if n:
        _check_extent(blocks_per_dim, block_edge)
    block_coords = q // block_edge
    rel = q - block_coords * block_edge
    strides = np.ones(d, dtype=np.int64)
    for k in range(1, d):
        strides[k] = strides[k - 1] * blocks_per_dim[k - 1]
    ids = (block_coords * strides).sum(axis=1, dtype=np.int64)
    layout = BlockLayout(block_edge, blocks_per_dim, qframe.grid.minima)
    return BlockAssignment(layout, ids, rel)


def build_streams(assignment: BlockAssignment, order_preserving: bool = True) -> BlockStreams:
    """Group particles by block, keeping each block's particles in input order."""
    uniq, counts, ranks, perm = kernels.group_by_ids(assignment.block_ids, want_perm=True)
    rel_bm = assignment.rel_positions[perm]
    return BlockStreams(
        block_ids=uniq,
        counts=counts,
        rel_positions=np.ascontiguousarray(rel_bm),
        order_stream=ranks if order_preserving else None,
    )


def compress_spatial(
    frame: Frame,
    error_bound: float,
    block_edge: int,
    *,
    order_preserving: bool = True,
    backend: str = "zlib",
) -> CompressedFrame:
    validate_frame(frame)
    qf = quantize(frame, error_bound)
    assignment = assign_blocks(qf, block_edge)
    streams = build_streams(assignment, order_preserving)
    n, d = qf.qcoords.shape
    payload = bytearray()
    write_grid(payload, qf.grid)
    write_varint(payload, assignment.layout.block_edge)
    for bn in assignment.layout.blocks_per_dim.tolist():
        write_varint(payload, bn)
    write_varint(payload, n)
    payload.append(1 if order_preserving else 0)
    payload += encode_stream(streams.block_ids, delta=True, backend=backend)
    payload += encode_stream(streams.counts, delta=True, backend=backend)
    for k in range(d):
        payload += encode_stream(streams.rel_positions[:, k], delta=False, backend=backend)
    if order_preserving:
        payload += encode_stream(streams.order_stream, delta=True, backend=backend)
    return CompressedFrame(
        method=Method.SPATIAL,
        payload=bytes(payload),
        frame_index=frame.index,
        particle_count=n,
        grid=qf.grid,
        effective_eb=float(error_bound),
    )


def decompress_spatial(cf: CompressedFrame) -> Frame:
    if cf.method != Method.SPATIAL:
        raise ValueError("not a spatially compressed frame")
    cur = ByteCursor(cf.payload)
    grid = read_grid(cur)
    d = grid.dim_count
    block_edge = cur.take_varint(limit=SYMBOL_MAX)
    if block_edge < 1:
        raise CorruptStream("block edge must be positive")
    blocks_per_dim = np.empty(d, dtype=np.int64)
    for k in range(d):
        blocks_per_dim[k] = cur.take_varint(limit=SYMBOL_MAX)
    volume = 1
    for bn in blocks_per_dim.tolist():
        volume *= bn
    if volume > SYMBOL_MAX:
        raise CorruptStream("block grid volume out of range")
    n = cur.take_varint()
    if n != cf.particle_count:
        raise CorruptStream(
            f"payload holds {n} particles, frame record says {cf.particle_count}"
        )
    mode = cur.take_byte()
    if mode & ~0x01:
        raise CorruptStream(f"unknown mode byte 0x{mode:02x}")
    ordered = bool(mode & 0x01)
    if n:
        _check_extent_or_corrupt(blocks_per_dim, block_edge)
    ids = read_stream(cur, max_count=n)
    nblocks = len(ids)
    counts = read_stream(cur, expected_count=nblocks)
    rel = np.empty((n, d), dtype=np.int64)
    for k in range(d):
        rel[:, k] = read_stream(cur, expected_count=n)
    order = read_stream(cur, expected_count=n) if ordered else None
    cur.expect_end()

    if nblocks:
        if int(ids.min()) < 0 or int(ids.max()) >= volume:
            raise CorruptStream("block id outside the grid")
        if nblocks > 1 and int(np.diff(ids).min()) <= 0:
            raise CorruptStream("block ids must be strictly increasing")
        if int(counts.min()) < 1:
            raise CorruptStream("every stored block must hold a particle")
    if int(counts.sum()) != n:
        raise CorruptStream("per-block counts do not add up to the particle count")
    if n and (int(rel.min()) < 0 or int(rel.max()) >= block_edge):
        raise CorruptStream("within-block position outside the block")
    if ordered and n:
        if int(order.min()) < 0 or int(order.max()) >= nblocks:
            raise CorruptStream("order stream rank outside the stored blocks")
        if not np.array_equal(np.bincount(order, minlength=nblocks), counts):
            raise CorruptStream("order stream ranks disagree with block counts")

    block_coords = np.empty((nblocks, d), dtype=np.int64)
    scratch = ids.copy()
    for k in range(d):
        block_coords[:, k] = scratch % blocks_per_dim[k]
        scratch //= blocks_per_dim[k]
    q_block_major = np.repeat(block_coords, counts, axis=0) * block_edge + rel
    if ordered:
        positions = kernels.stable_positions(order, counts)
        q = q_block_major[positions]
    else:
        q = q_block_major
    qf = QuantizedFrame(grid=grid, qcoords=np.ascontiguousarray(q), index=cf.frame_index)
    return dequantize(qf)


def _check_extent_or_corrupt(blocks_per_dim, block_edge: int) -> None:
    try:
        _check_extent(blocks_per_dim, block_edge)
    except QuantRangeOverflow:
        raise CorruptStream("block grid extent exceeds the quantized integer budget") from None
