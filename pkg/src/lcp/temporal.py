"""Temporal codec: integer residuals against a reconstructed reference frame.

The current frame is quantized on its own grid; the reference
*reconstruction* is then re-quantized onto that same grid, and only the
integer differences are coded.  Because the prediction source is the
reconstruction (exactly what the decoder holds), the loop is closed: the
decoded frame equals plain quantization of the current frame, so the error
bound holds no matter how long a reference chain gets.

Payload layout after the shared grid record:

    reference index     varint
    particle_count      varint
    d streams: per-dimension residuals (no delta stage)
"""
from __future__ import annotations

import numpy as np

from ._serde import ByteCursor, read_grid, write_grid, write_varint
from .coding import encode_stream, read_stream
from .errors import CorruptStream, DimensionMismatch, ParticleCountMismatch
from .model import (
    QUANT_MAX,
    CompressedFrame,
    Frame,
    Method,
    QuantizedFrame,
    validate_frame,
)
from .quantizer import dequantize, quantize


def compress_temporal(
    frame: Frame,
    reference: Frame,
    error_bound: float,
    *,
    backend: str = "zlib",
) -> CompressedFrame:
    """Code ``frame`` as residuals against the reconstructed ``reference``."""
    validate_frame(frame)
    validate_frame(reference)
    if frame.dim_count != reference.dim_count:
        raise DimensionMismatch(
            f"frame has {frame.dim_count} dimensions, reference has {reference.dim_count}"
        )
    if frame.particle_count != reference.particle_count:
        raise ParticleCountMismatch(
            f"frame holds {frame.particle_count} particles, "
            f"reference holds {reference.particle_count}"
        )
    qcur = quantize(frame, error_bound)
    qref = quantize(reference, error_bound, minima=qcur.grid.minima)
    residual = qcur.qcoords - qref.qcoords
    n, d = residual.shape
    payload = bytearray()
    write_grid(payload, qcur.grid)
    write_varint(payload, reference.index)
    write_varint(payload, n)
    for k in range(d):
        payload += encode_stream(residual[:, k], delta=False, backend=backend)
    return CompressedFrame(
        method=Method.TEMPORAL,
        payload=bytes(payload),
        frame_index=frame.index,
        particle_count=n,
        grid=qcur.grid,
        effective_eb=float(error_bound),
        reference=reference.index,
    )


def decompress_temporal(cf: CompressedFrame, reference: Frame) -> Frame:
    """Invert :func:`compress_temporal` given the reconstructed reference."""
    if cf.method != Method.TEMPORAL:
        raise ValueError("not a temporally compressed frame")
    cur = ByteCursor(cf.payload)
    grid = read_grid(cur)
    ref_index = cur.take_varint()
    if ref_index != cf.reference:
        raise CorruptStream(
            f"payload references frame {ref_index}, frame record says {cf.reference}"
        )
    n = cur.take_varint()
    if n != cf.particle_count:
        raise CorruptStream(
            f"payload holds {n} particles, frame record says {cf.particle_count}"
        )
    if reference.index != ref_index:
        raise ValueError(
            f"wrong reference supplied: frame {reference.index} instead of {ref_index}"
        )
    if reference.dim_count != grid.dim_count:
        raise DimensionMismatch(
            f"reference has {reference.dim_count} dimensions, payload has {grid.dim_count}"
        )
    if reference.particle_count != n:
        raise ParticleCountMismatch(
            f"reference holds {reference.particle_count} particles, payload holds {n}"
        )
    d = grid.dim_count
    residual = np.empty((n, d), dtype=np.int64)
    for k in range(d):
        residual[:, k] = read_stream(cur, expected_count=n)
    cur.expect_end()
    qref = quantize(reference, grid.error_bound, minima=grid.minima)
    q = qref.qcoords + residual
    if n and not (np.abs(q) <= QUANT_MAX).all():
        raise CorruptStream("decoded quantized coordinate out of range")
    qf = QuantizedFrame(grid=grid, qcoords=q, index=cf.frame_index)
    return dequantize(qf)
