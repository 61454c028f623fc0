"""Error-bounded scalar quantization.

A coordinate x maps to the integer q = floor((x - min) / (2 * eb)); the
reconstruction (2q + 1) * eb + min is the midpoint of q's cell, so the
round trip error is at most eb in every dimension.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonPositiveErrorBound, QuantRangeOverflow
from .model import QUANT_MAX, Frame, QuantGrid, QuantizedFrame, validate_frame


def _check_bound(error_bound: float) -> float:
    error_bound = float(error_bound)
    if not (error_bound > 0.0 and np.isfinite(error_bound)):
        raise NonPositiveErrorBound(
            f"error bound must be a positive finite number, got {error_bound}"
        )
    return error_bound


def quantize(frame: Frame, error_bound: float, minima=None) -> QuantizedFrame:
    """Quantize a frame onto the grid anchored at ``minima``.

    With the default ``minima=None`` the frame's own per-dimension minima
    anchor the grid, which makes every quantized value non-negative.  An
    explicit ``minima`` re-quantizes onto a foreign grid (the temporal
    codec does this to its reference frame) and may produce negative
    integers.
    """
    error_bound = _check_bound(error_bound)
    validate_frame(frame)
    coords = frame.coords
    if minima is None:
        if frame.particle_count:
            minima = coords.min(axis=0)
        else:
            minima = np.zeros(frame.dim_count, dtype=np.float64)
    else:
        minima = np.ascontiguousarray(np.asarray(minima, dtype=np.float64))
        if minima.shape != (frame.dim_count,):
            raise DimensionMismatch(
                f"minima shape {minima.shape} does not match dimension {frame.dim_count}"
            )
    cell = 2.0 * error_bound
    scaled = np.floor((coords - minima) / cell)
    if frame.particle_count and not (np.abs(scaled) <= QUANT_MAX).all():
        raise QuantRangeOverflow(
            "coordinate span exceeds the integer budget at this error bound"
        )
    q = scaled.astype(np.int64)
    if frame.particle_count:
        # float rounding can land a value one cell off; nudge and re-check
        err = coords - ((2.0 * q + 1.0) * error_bound + minima)
        np.add(q, 1, out=q, where=err > error_bound)
        np.subtract(q, 1, out=q, where=err < -error_bound)
        err = coords - ((2.0 * q + 1.0) * error_bound + minima)
        if not (np.abs(err) <= error_bound).all():
            raise QuantRangeOverflow(
                "error bound is below float64 resolution at this value magnitude"
            )
        if not (np.abs(q) <= QUANT_MAX).all():
            raise QuantRangeOverflow(
                "coordinate span exceeds the integer budget at this error bound"
            )
    grid = QuantGrid(error_bound, minima, frame.source_width)
    return QuantizedFrame(grid=grid, qcoords=q, index=frame.index)


def dequantize(qframe: QuantizedFrame) -> Frame:
    """Reconstruct cell midpoints; exact inverse up to the error bound."""
    grid = qframe.grid
    coords = (2.0 * qframe.qcoords + 1.0) * grid.error_bound + grid.minima
    return Frame(index=qframe.index, coords=coords, source_width=grid.source_width)


def reconstruct(frame: Frame, error_bound: float) -> Frame:
    """What a decoder will hand back for ``frame`` at this bound."""
    return dequantize(quantize(frame, error_bound))
