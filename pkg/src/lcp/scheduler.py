"""Method selection and dataset-level orchestration.

Frame-by-frame choice between the spatial and temporal codecs is driven by
a small state machine that amortizes the cost of trial compressions: after
the spatial codec wins a comparison, the next frames skip the temporal
trial entirely, with the skip span doubling (2, 4, ... 32) on every further
spatial win.  Any temporal win keeps the pipeline in a temporal run, where
the trial is free because its output is the compression.

Datasets are cut into fixed-size batches.  A batch's first frame references
the most recent spatially compressed batch leader (its anchor) rather than
its predecessor, which caps every decode chain at batch_size + 1 frames.
When the opening frames look strongly temporally correlated, anchors are
quantized ``anchor_scale`` times tighter so the long chains hanging off
them start from a cleaner reference.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

from .errors import CorruptStream, DimensionMismatch
from .model import Archive, CodecConfig, CompressedFrame, Frame, Method, validate_frame
from .quantizer import reconstruct
from .spatial import compress_spatial, decompress_spatial
from .temporal import compress_temporal, decompress_temporal

#: Skip spans the state machine steps through after consecutive spatial wins.
SKIP_LADDER = (2, 4, 8, 16, 32)

#: What "auto" anchor tightening resolves to on correlated data.
AUTO_ANCHOR_SCALE = 5

#: Block-edge candidates the optimizer tries: powers of two up to 2**16.
BLOCK_EDGE_CANDIDATES = tuple(2**k for k in range(17))

#: Trial compressions sample at most this many particles.
TUNING_SAMPLE_CAP = 1_000_000


class TemporalCorrelation(Enum):
    HIGH = "high"
    LOW = "low"
    UNKNOWN = "unknown"


class FsmMode(Enum):
    FORCED_SPATIAL = "forced_spatial"
    COMPARE = "compare"
    SKIP = "skip"
    TEMPORAL_RUN = "temporal_run"


@dataclass(frozen=True)
class FsmState:
    """Selector state.  In SKIP, ``remaining`` counts frames left before the
    next comparison; ``skip_len`` is the ladder rung that set it."""

    mode: FsmMode = FsmMode.FORCED_SPATIAL
    skip_len: int = 0
    remaining: int = 0

    def __post_init__(self):
        if self.mode == FsmMode.SKIP:
            if self.skip_len not in SKIP_LADDER:
                raise ValueError(f"skip span must be one of {SKIP_LADDER}")
            if not 0 <= self.remaining <= self.skip_len - 1:
                raise ValueError("remaining must lie in [0, skip_len - 1]")
        elif self.skip_len or self.remaining:
            raise ValueError(f"{self.mode.value} state carries no skip counters")


def needs_probe(state: FsmState) -> bool:
    """Does this frame run the temporal codec at all?"""
    if state.mode == FsmMode.SKIP:
        return state.remaining == 0
    return state.mode in (FsmMode.COMPARE, FsmMode.TEMPORAL_RUN)


def probe_is_charged(state: FsmState) -> bool:
    """A temporal run here is overhead (in a temporal run it IS the output)."""
    return needs_probe(state) and state.mode != FsmMode.TEMPORAL_RUN


def fsm_step(state: FsmState, chosen: Method) -> FsmState:
    """Advance the selector after a frame was compressed as ``chosen``."""
    if chosen == Method.TEMPORAL:
        return FsmState(FsmMode.TEMPORAL_RUN)
    if state.mode == FsmMode.SKIP:
        if state.remaining > 0:
            return FsmState(FsmMode.SKIP, state.skip_len, state.remaining - 1)
        widened = min(state.skip_len * 2, SKIP_LADDER[-1])
        return FsmState(FsmMode.SKIP, widened, widened - 1)
    if state.mode == FsmMode.COMPARE:
        first = SKIP_LADDER[0]
        return FsmState(FsmMode.SKIP, first, first - 1)
    # FORCED_SPATIAL cold start, or a spatial win ending a temporal run
    return FsmState(FsmMode.COMPARE)


@dataclass
class SelectorCache:
    """Mutable selector context threaded through a compression run."""

    last_spatial_size: int | None = None
    correlation: TemporalCorrelation = TemporalCorrelation.UNKNOWN


@dataclass(frozen=True)
class FrameDecision:
    """Audit record of one frame's method selection."""

    frame_index: int
    method: Method
    probed: bool          # the temporal codec ran at this frame
    probe_charged: bool   # ...and counts as selection overhead
    spatial_size: int | None
    temporal_size: int | None
    is_anchor: bool
    effective_eb: float


@dataclass
class DecodeStats:
    """Counts compressed frames touched while answering random access."""

    frames_touched: int = 0


def select_method(
    frame: Frame,
    prev_reconstructed: Frame | None,
    state: FsmState,
    cache: SelectorCache,
    *,
    error_bound: float,
    spatial_eb: float | None = None,
    block_edge: int,
    order_preserving: bool = True,
    backend: str = "zlib",
):
    """Compress one frame by whichever codec the state machine picks.

    Returns (compressed frame, its reconstruction, next state, decision).
    ``spatial_eb`` lets batch leaders compress tighter than the user bound;
    it applies only to the spatial side.
    """
    if spatial_eb is None:
        spatial_eb = error_bound
    forced = (
        prev_reconstructed is None
        or prev_reconstructed.particle_count != frame.particle_count
        or state.mode == FsmMode.FORCED_SPATIAL
        or (state.mode == FsmMode.SKIP and state.remaining > 0)
    )
    spatial_cf = temporal_cf = None
    if forced:
        spatial_cf = compress_spatial(
            frame, spatial_eb, block_edge,
            order_preserving=order_preserving, backend=backend,
        )
        chosen = spatial_cf
        if state.mode == FsmMode.SKIP and state.remaining > 0:
            next_state = fsm_step(state, Method.SPATIAL)
        else:
            # cold start, or a particle-count change invalidated the reference;
            # restart the ladder from a fresh comparison
            next_state = FsmState(FsmMode.COMPARE)
    else:
        temporal_cf = compress_temporal(
            frame, prev_reconstructed, error_bound, backend=backend
        )
        t_size = len(temporal_cf.payload)
        baseline = cache.last_spatial_size
        if state.mode == FsmMode.TEMPORAL_RUN:
            # the temporal output is already in hand; only a size regression
            # beyond the cached spatial cost justifies a spatial attempt
            try_spatial = baseline is None or t_size > baseline
        else:
            try_spatial = baseline is None or t_size >= baseline
        if try_spatial:
            spatial_cf = compress_spatial(
                frame, spatial_eb, block_edge,
                order_preserving=order_preserving, backend=backend,
            )
            chosen = spatial_cf if len(spatial_cf.payload) <= t_size else temporal_cf
        else:
            chosen = temporal_cf
        next_state = fsm_step(state, chosen.method)
    if spatial_cf is not None:
        cache.last_spatial_size = len(spatial_cf.payload)
    recon = reconstruct(frame, chosen.effective_eb)
    decision = FrameDecision(
        frame_index=frame.index,
        method=chosen.method,
        probed=temporal_cf is not None,
        probe_charged=temporal_cf is not None and state.mode != FsmMode.TEMPORAL_RUN,
        spatial_size=len(spatial_cf.payload) if spatial_cf is not None else None,
        temporal_size=len(temporal_cf.payload) if temporal_cf is not None else None,
        is_anchor=False,
        effective_eb=chosen.effective_eb,
    )
    return chosen, recon, next_state, decision


def sample_for_tuning(frame: Frame, cap: int = TUNING_SAMPLE_CAP) -> Frame:
    """Thin a frame to at most ``cap`` particles by uniform index stride."""
    n = frame.particle_count
    if n <= cap:
        return frame
    stride = -(-n // cap)
    return Frame(frame.index, frame.coords[::stride], frame.source_width)


def optimize_block_size(
    frame: Frame,
    error_bound: float,
    *,
    candidates=None,
    order_preserving: bool = True,
    backend: str = "zlib",
) -> int:
    """Pick the candidate block edge that codes ``frame`` smallest.

    Ties go to the smaller edge.  The default candidate set is the
    power-of-two ladder; pass ``candidates`` for an exhaustive sweep.
    """
    if candidates is None:
        candidates = BLOCK_EDGE_CANDIDATES
    candidates = sorted(set(int(c) for c in candidates))
    if not candidates or candidates[0] < 1:
        raise ValueError("block edge candidates must be positive integers")
    best_edge = best_size = None
    for edge in candidates:
        size = len(
            compress_spatial(
                frame, error_bound, edge,
                order_preserving=order_preserving, backend=backend,
            ).payload
        )
        if best_size is None or size < best_size:
            best_edge, best_size = edge, size
    return best_edge


def detect_temporal_correlation(
    first: Frame,
    second: Frame,
    error_bound: float,
    block_edge: int,
    *,
    order_preserving: bool = True,
    backend: str = "zlib",
) -> TemporalCorrelation:
    """HIGH when coding frame 1 against frame 0 halves the spatial cost."""
    spatial_cf = compress_spatial(
        second, error_bound, block_edge,
        order_preserving=order_preserving, backend=backend,
    )
    reference = reconstruct(first, error_bound)
    temporal_cf = compress_temporal(second, reference, error_bound, backend=backend)
    if 2 * len(temporal_cf.payload) <= len(spatial_cf.payload):
        return TemporalCorrelation.HIGH
    return TemporalCorrelation.LOW


def compress_dataset(frames, config: CodecConfig, *, decisions: list | None = None) -> Archive:
    """Compress a frame sequence into an in-memory archive.

    Frames are re-indexed by position.  ``decisions``, when given, collects
    one :class:`FrameDecision` per frame for inspection.
    """
    frames = [
        f if f.index == i else dataclasses.replace(f, index=i)
        for i, f in enumerate(frames)
    ]
    for frame in frames:
        validate_frame(frame)
    dims = {f.dim_count for f in frames}
    if len(dims) > 1:
        raise DimensionMismatch(f"frames disagree on dimensionality: {sorted(dims)}")
    widths = {f.source_width for f in frames}
    if len(widths) > 1:
        raise ValueError(f"frames disagree on source width: {sorted(widths)}")
    dim_count = dims.pop() if dims else 0
    source_width = widths.pop() if widths else 8
    eb = config.error_bound

    block_edge = config.block_edge
    if block_edge == "auto":
        probe = next((f for f in frames if f.particle_count), None)
        if probe is None:
            block_edge = 1
        else:
            block_edge = optimize_block_size(
                sample_for_tuning(probe), eb,
                order_preserving=config.order_preserving, backend=config.backend,
            )

    correlation = TemporalCorrelation.UNKNOWN
    anchor_scale = 1
    requested_scale = AUTO_ANCHOR_SCALE if config.anchor_scale == "auto" else config.anchor_scale
    if requested_scale > 1:
        if (
            len(frames) >= 2
            and frames[0].particle_count
            and frames[0].particle_count == frames[1].particle_count
        ):
            correlation = detect_temporal_correlation(
                frames[0], frames[1], eb, block_edge,
                order_preserving=config.order_preserving, backend=config.backend,
            )
        if correlation == TemporalCorrelation.HIGH:
            anchor_scale = requested_scale

    cache = SelectorCache(correlation=correlation)
    state = FsmState()
    anchors: list[CompressedFrame] = []
    batches: list[list[CompressedFrame]] = []
    last_anchor_recon: Frame | None = None
    prev_recon: Frame | None = None

    for start in range(0, len(frames), config.batch_size):
        batch: list[CompressedFrame] = []
        for j, frame in enumerate(frames[start:start + config.batch_size]):
            leader = j == 0
            reference = last_anchor_recon if leader else prev_recon
            spatial_eb = eb / anchor_scale if leader else eb
            cf, recon, state, decision = select_method(
                frame, reference, state, cache,
                error_bound=eb,
                spatial_eb=spatial_eb,
                block_edge=block_edge,
                order_preserving=config.order_preserving,
                backend=config.backend,
            )
            if leader and cf.method == Method.SPATIAL:
                anchors.append(cf)
                last_anchor_recon = recon
                decision = dataclasses.replace(decision, is_anchor=True)
            else:
                batch.append(cf)
            prev_recon = recon
            if decisions is not None:
                decisions.append(decision)
        batches.append(batch)

    return Archive(
        config=config,
        dim_count=dim_count,
        frame_count=len(frames),
        block_edge=block_edge,
        anchor_scale_effective=anchor_scale,
        source_width=source_width,
        batches=batches,
        anchors=anchors,
    )


def decompress_frame(source, frame_index: int, *, stats: DecodeStats | None = None) -> Frame:
    """Decode a single frame, following its reference chain backwards.

    ``source`` is anything with ``fetch(index)`` and ``frame_count``: an
    in-memory :class:`Archive` or a container reader.  The chain is at most
    batch_size + 1 frames long by construction.
    """
    chain = [source.fetch(frame_index)]
    while chain[-1].method == Method.TEMPORAL:
        if len(chain) > source.frame_count:
            raise CorruptStream("reference chain does not terminate")
        chain.append(source.fetch(chain[-1].reference))
    recon = decompress_spatial(chain[-1])
    for cf in reversed(chain[:-1]):
        recon = decompress_temporal(cf, recon)
    if stats is not None:
        stats.frames_touched += len(chain)
    return recon


def iter_frames(source):
    """Yield every frame in order, decoding each compressed record once.

    Holds one previous reconstruction plus the anchors seen so far.
    """
    anchor_cache: dict[int, Frame] = {}
    prev: Frame | None = None
    for index in range(source.frame_count):
        cf = source.fetch(index)
        if cf.method == Method.SPATIAL:
            recon = decompress_spatial(cf)
        else:
            if prev is not None and prev.index == cf.reference:
                base = prev
            elif cf.reference in anchor_cache:
                base = anchor_cache[cf.reference]
            else:
                base = decompress_frame(source, cf.reference)
            recon = decompress_temporal(cf, base)
        if source.is_anchor(index):
            anchor_cache[index] = recon
        prev = recon
        yield recon


def decompress_dataset(source) -> list[Frame]:
    return list(iter_frames(source))
