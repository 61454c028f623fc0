"""Core data model: frames, quantization grids, compressed units, archives.

All types are plain frozen dataclasses.  They are treated as immutable after
construction; codec stages communicate exclusively by passing them around,
which keeps every stage safe to run concurrently on different frames.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import (
    DimensionMismatch,
    FrameNotFound,
    NonFiniteCoordinate,
    NonPositiveErrorBound,
)

SOURCE_F32 = 4
SOURCE_F64 = 8

# |quantized integer| cap.  Chosen so that a difference of two quantized
# values (temporal residuals) always fits int64 with headroom.
QUANT_MAX = 2**61 - 1
# |coded symbol| cap.  Chosen so that a difference of two symbols (delta
# stage) always fits int64.
SYMBOL_MAX = 2**62 - 1


def _as_coords(values) -> np.ndarray:
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(
            f"coordinates are not a rectangular numeric array: {exc}"
        ) from None
    return arr


@dataclass(frozen=True)
class Frame:
    """One snapshot: ``coords`` is an (N, d) float64 array.

    ``source_width`` records the byte width of the scalars the data came
    from (4 for float32 sources, 8 for float64); narrower inputs are
    promoted to float64 internally and restored on output.
    """

    index: int
    coords: np.ndarray
    source_width: int = SOURCE_F64

    def __post_init__(self):
        arr = _as_coords(self.coords)
        if arr.ndim != 2:
            raise DimensionMismatch(
                f"frame coordinates must be 2-dimensional (N, d), got shape {arr.shape}"
            )
        object.__setattr__(self, "coords", np.ascontiguousarray(arr))
        if self.source_width not in (SOURCE_F32, SOURCE_F64):
            raise ValueError(f"source_width must be 4 or 8, got {self.source_width}")

    @property
    def particle_count(self) -> int:
        return self.coords.shape[0]

    @property
    def dim_count(self) -> int:
        return self.coords.shape[1]


def validate_frame(frame: Frame) -> None:
    """Raise unless the frame satisfies the model invariants."""
    if frame.dim_count < 1:
        raise DimensionMismatch("frame must have at least one coordinate dimension")
    if not np.isfinite(frame.coords).all():
        bad = np.argwhere(~np.isfinite(frame.coords))[0]
        raise NonFiniteCoordinate(
            f"non-finite coordinate at particle {bad[0]}, dimension {bad[1]}"
        )


@dataclass(frozen=True)
class QuantGrid:
    """Everything needed to invert quantization: bound, per-dim minima, width."""

    error_bound: float
    minima: np.ndarray
    source_width: int = SOURCE_F64

    def __post_init__(self):
        if not (self.error_bound > 0.0 and np.isfinite(self.error_bound)):
            raise NonPositiveErrorBound(
                f"error bound must be a positive finite number, got {self.error_bound}"
            )
        m = np.ascontiguousarray(np.asarray(self.minima, dtype=np.float64))
        if m.ndim != 1:
            raise DimensionMismatch("grid minima must be a 1-d array, one value per dimension")
        object.__setattr__(self, "minima", m)

    @property
    def dim_count(self) -> int:
        return self.minima.shape[0]


@dataclass(frozen=True)
class QuantizedFrame:
    grid: QuantGrid
    qcoords: np.ndarray  # (N, d) int64
    index: int = 0

    def __post_init__(self):
        q = np.ascontiguousarray(np.asarray(self.qcoords))
        if q.dtype != np.int64:
            raise ValueError("quantized coordinates must be int64")
        if q.ndim != 2 or q.shape[1] != self.grid.dim_count:
            raise DimensionMismatch(
                f"quantized coordinates shape {q.shape} does not match grid dimension "
                f"{self.grid.dim_count}"
            )
        object.__setattr__(self, "qcoords", q)

    @property
    def particle_count(self) -> int:
        return self.qcoords.shape[0]


class Method(IntEnum):
    """How a frame was compressed."""

    SPATIAL = 0
    TEMPORAL = 1


#: Supported dictionary-coder backends, in wire-id order.  "none" stores
#: payloads raw; "zlib" is the default.  The id byte travels with every
#: coded stream, so archives remain readable whatever the writer chose.
BACKEND_NAMES = ("none", "zlib", "lzma")


@dataclass(frozen=True)
class CodecConfig:
    """User-facing knobs for dataset compression."""

    error_bound: float
    batch_size: int = 16
    block_edge: int | str = "auto"      # positive int, or "auto" to optimize
    anchor_scale: int | str = "auto"    # positive int, or "auto" (resolves to 5)
    order_preserving: bool = True
    backend: str = "zlib"

    def __post_init__(self):
        if not (isinstance(self.error_bound, (int, float))
                and self.error_bound > 0.0
                and np.isfinite(self.error_bound)):
            raise NonPositiveErrorBound(
                f"error bound must be a positive finite number, got {self.error_bound}"
            )
        if not (isinstance(self.batch_size, int) and self.batch_size >= 1):
            raise ValueError(f"batch_size must be a positive integer, got {self.batch_size}")
        if self.block_edge != "auto" and not (
            isinstance(self.block_edge, int) and self.block_edge >= 1
        ):
            raise ValueError(f'block_edge must be a positive integer or "auto", got {self.block_edge}')
        if self.anchor_scale != "auto" and not (
            isinstance(self.anchor_scale, int) and self.anchor_scale >= 1
        ):
            raise ValueError(
                f'anchor_scale must be a positive integer or "auto", got {self.anchor_scale}'
            )
        if self.backend not in BACKEND_NAMES:
            raise ValueError(f"unknown backend {self.backend!r}, expected one of {BACKEND_NAMES}")


@dataclass(frozen=True)
class CompressedFrame:
    """One frame's coded payload plus the metadata needed to decode it."""

    method: Method
    payload: bytes
    frame_index: int
    particle_count: int
    grid: QuantGrid
    effective_eb: float
    reference: int | None = None

    def __post_init__(self):
        if self.method == Method.TEMPORAL:
            if self.reference is None:
                raise ValueError("temporal frames must name a reference frame")
            if not self.reference < self.frame_index:
                raise ValueError(
                    f"reference {self.reference} must precede frame {self.frame_index}"
                )
        elif self.reference is not None:
            raise ValueError("spatial frames carry no reference")


@dataclass
class Archive:
    """In-memory compressed dataset.

    Spatially-compressed batch leaders live in the ``anchors`` list; all
    other frames sit inside ``batches``.  ``fetch`` resolves a dataset
    frame index to its compressed record wherever it is stored.
    """

    config: CodecConfig
    dim_count: int
    frame_count: int
    block_edge: int
    anchor_scale_effective: int
    source_width: int
    batches: list[list[CompressedFrame]]
    anchors: list[CompressedFrame]
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        index: dict[int, CompressedFrame] = {}
        anchor_set = set()
        for cf in self.anchors:
            if cf.frame_index in index:
                raise ValueError(f"frame {cf.frame_index} stored twice")
            index[cf.frame_index] = cf
            anchor_set.add(cf.frame_index)
        for batch in self.batches:
            for cf in batch:
                if cf.frame_index in index:
                    raise ValueError(f"frame {cf.frame_index} stored twice")
                index[cf.frame_index] = cf
        if sorted(index) != list(range(self.frame_count)):
            raise ValueError("archive must cover frame indices 0..frame_count-1 exactly once")
        self._index = index
        self._anchor_set = anchor_set

    def fetch(self, frame_index: int) -> CompressedFrame:
        try:
            return self._index[frame_index]
        except KeyError:
            raise FrameNotFound(
                f"frame {frame_index} not in archive of {self.frame_count} frames"
            ) from None

    def is_anchor(self, frame_index: int) -> bool:
        return frame_index in self._anchor_set

    @property
    def batch_size(self) -> int:
        return self.config.batch_size
