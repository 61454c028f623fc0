"""Lossless integer stream coding.

Pipeline per stream: optional delta stage, zig-zag mapping to unsigned
symbols, then whichever of canonical Huffman or fixed-width bit packing
costs fewer expected bits, then a general-purpose dictionary coder over the
packed payload (kept only when it actually shrinks it).

Serialized stream layout (all little-endian, varints are LEB128):

    tag byte            bit 0: scheme (0 fixed, 1 huffman); bit 1: delta applied
    symbol count        varint
    scheme header       fixed: one width byte
                        huffman: varint K, varint first symbol, K-1 varint
                        symbol deltas, K code-length bytes
    backend id byte     0 raw, 1 zlib, 2 lzma
    stored length       varint
    stored payload      bytes
"""
from __future__ import annotations

import lzma
import zlib
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from ._serde import ByteCursor, write_varint
from .errors import CorruptStream, CountMismatch, EmptyInput
from .model import SYMBOL_MAX

SCHEME_FIXED = "fixed"
SCHEME_HUFFMAN = "huffman"

_SCHEME_IDS = {SCHEME_FIXED: 0, SCHEME_HUFFMAN: 1}
_SCHEME_NAMES = {v: k for k, v in _SCHEME_IDS.items()}

BACKEND_IDS = {"none": 0, "zlib": 1, "lzma": 2}
_BACKEND_NAMES = {v: k for k, v in BACKEND_IDS.items()}

#: Huffman code lengths are capped so decode tables stay small and codes fit
#: comfortably in a machine word.
MAX_CODE_LEN = 32

#: Largest zig-zag symbol a valid stream may carry (= zigzag of +-SYMBOL_MAX).
_MAX_ZZ = 2 * SYMBOL_MAX


@dataclass(frozen=True)
class CodedStream:
    """Parsed stream header, for inspection and tests."""

    scheme: str
    delta: bool
    symbol_count: int
    backend: str
    stored_bytes: int
    bit_width: int | None = None       # fixed scheme only
    table_symbols: int | None = None   # huffman scheme only


# --- reversible element transforms -------------------------------------------

def delta_encode(values: np.ndarray) -> np.ndarray:
    """First value verbatim, then successive differences."""
    out = np.empty_like(values)
    if len(values):
        out[0] = values[0]
        np.subtract(values[1:], values[:-1], out=out[1:])
    return out


def delta_decode(deltas: np.ndarray) -> np.ndarray:
    return np.cumsum(deltas, dtype=np.int64)


def zigzag_encode(values: np.ndarray) -> np.ndarray:
    """Map signed to unsigned: 0,-1,1,-2,... -> 0,1,2,3,..."""
    v = values.astype(np.int64, copy=False)
    return (v.astype(np.uint64) << np.uint64(1)) ^ (v >> np.int64(63)).astype(np.uint64)


def zigzag_decode(symbols: np.ndarray) -> np.ndarray:
    half = (symbols >> np.uint64(1)).astype(np.int64)
    return half ^ -((symbols & np.uint64(1)).astype(np.int64))


# --- Huffman code construction ------------------------------------------------

def _code_lengths(counts: np.ndarray) -> np.ndarray:
    """Optimal prefix code lengths for positive symbol counts (two-queue merge)."""
    k = counts.shape[0]
    if k == 1:
        return np.ones(1, dtype=np.int64)
    order = np.argsort(counts, kind="stable")
    total = 2 * k - 1
    weight = np.empty(total, dtype=np.int64)
    weight[:k] = counts
    parent = np.zeros(total, dtype=np.int64)
    merged = np.empty(k - 1, dtype=np.int64)
    leaf_head = 0
    mhead = mtail = 0
    nxt = k
    for _ in range(k - 1):
        pair = [0, 0]
        for slot in range(2):
            take_leaf = leaf_head < k and (
                mhead == mtail or weight[order[leaf_head]] <= weight[merged[mhead]]
            )
            if take_leaf:
                pair[slot] = order[leaf_head]
                leaf_head += 1
            else:
                pair[slot] = merged[mhead]
                mhead += 1
        weight[nxt] = weight[pair[0]] + weight[pair[1]]
        parent[pair[0]] = nxt
        parent[pair[1]] = nxt
        merged[mtail] = nxt
        mtail += 1
        nxt += 1
    depth = np.zeros(total, dtype=np.int64)
    for node in range(total - 2, -1, -1):
        depth[node] = depth[parent[node]] + 1
    return depth[:k]


def _limit_lengths(lengths: np.ndarray, counts: np.ndarray, cap: int = MAX_CODE_LEN) -> np.ndarray:
    """Clamp code lengths to ``cap`` and restore the Kraft inequality."""
    if int(lengths.max()) <= cap:
        return lengths
    lengths = np.minimum(lengths, cap)
    budget = 1 << cap
    total = sum(1 << (cap - int(n)) for n in lengths)
    if total > budget:
        # lengthen the rarest symbols first; each step halves a contribution
        for i in np.lexsort((np.arange(len(counts)), counts)):
            while lengths[i] < cap and total > budget:
                total -= 1 << (cap - int(lengths[i]) - 1)
                lengths[i] += 1
            if total <= budget:
                break
    if total > budget:
        raise AssertionError("cannot satisfy Kraft inequality at the length cap")
    return lengths


def _canonical_tables(lengths: np.ndarray):
    """Canonical code assignment plus the level tables the decoder walks.

    Returns (codes, canon_order, first_code, level_base, level_count,
    min_len, max_len); ``codes`` aligns with the input (alphabet) order,
    ``canon_order[j]`` is the alphabet position of canonical rank ``j``.
    """
    lengths = lengths.astype(np.int64, copy=False)
    canon_order = np.argsort(lengths, kind="stable").astype(np.int64)
    level_count = np.bincount(lengths, minlength=MAX_CODE_LEN + 1).astype(np.int64)
    first_code = np.zeros(MAX_CODE_LEN + 1, dtype=np.uint64)
    level_base = np.zeros(MAX_CODE_LEN + 1, dtype=np.int64)
    code = 0
    cum = 0
    for ln in range(1, MAX_CODE_LEN + 1):
        code = (code + int(level_count[ln - 1])) << 1
        if code + int(level_count[ln]) > (1 << ln):
            raise CorruptStream("code lengths violate the Kraft inequality")
        first_code[ln] = code
        level_base[ln] = cum
        cum += int(level_count[ln])
    lens_sorted = lengths[canon_order]
    within = np.arange(len(lengths), dtype=np.int64) - level_base[lens_sorted]
    codes_sorted = first_code[lens_sorted] + within.astype(np.uint64)
    codes = np.empty(len(lengths), dtype=np.uint64)
    codes[canon_order] = codes_sorted
    min_len = int(lengths.min()) if len(lengths) else 1
    max_len = int(lengths.max()) if len(lengths) else 1
    return codes, canon_order, first_code, level_base, level_count, min_len, max_len


def build_code_lengths(counts) -> np.ndarray:
    """Public entry: capped canonical code lengths for positive counts."""
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    if counts.size == 0:
        raise EmptyInput("cannot build a code over an empty symbol set")
    if (counts <= 0).any():
        raise ValueError("symbol counts must be positive")
    return _limit_lengths(_code_lengths(counts), counts)


# --- scheme headers -----------------------------------------------------------

def _table_blob(alphabet: np.ndarray, lengths: np.ndarray) -> bytes:
    out = bytearray()
    write_varint(out, len(alphabet))
    prev = None
    for value in alphabet.tolist():
        write_varint(out, value if prev is None else value - prev)
        prev = value
    out += lengths.astype(np.uint8).tobytes()
    return bytes(out)


def _read_table(cur: ByteCursor):
    k = cur.take_varint()
    if k < 1:
        raise CorruptStream("huffman table with no symbols")
    # each symbol costs at least one delta byte and one length byte
    if 2 * k > cur.remaining() + 1:
        raise CorruptStream("huffman table larger than the stream")
    alphabet = np.empty(k, dtype=np.uint64)
    value = cur.take_varint(limit=_MAX_ZZ)
    alphabet[0] = value
    for i in range(1, k):
        step = cur.take_varint(limit=_MAX_ZZ)
        if step < 1:
            raise CorruptStream("huffman table symbols must be strictly increasing")
        value += step
        if value > _MAX_ZZ:
            raise CorruptStream("huffman table symbol out of range")
        alphabet[i] = value
    lengths = np.frombuffer(cur.take(k), dtype=np.uint8).astype(np.int64)
    if int(lengths.min()) < 1 or int(lengths.max()) > MAX_CODE_LEN:
        raise CorruptStream("huffman code length out of range")
    return alphabet, lengths


# --- dictionary coder backend ---------------------------------------------------

def backend_compress(data: bytes, backend: str = "zlib") -> bytes:
    """Run the raw dictionary coder (no framing, no keep-if-smaller logic)."""
    if backend == "zlib":
        return zlib.compress(data, 6)
    if backend == "lzma":
        return lzma.compress(data, format=lzma.FORMAT_XZ, preset=6)
    if backend == "none":
        return bytes(data)
    raise ValueError(f"unknown backend {backend!r}")


def backend_decompress(data: bytes, backend: str, max_size: int | None = None) -> bytes:
    try:
        if backend == "zlib":
            if max_size is None:
                return zlib.decompress(data)
            obj = zlib.decompressobj()
            out = obj.decompress(data, max_size + 1)
            if len(out) > max_size or not obj.eof or obj.unconsumed_tail:
                raise CorruptStream("backend payload larger than declared")
            return out
        if backend == "lzma":
            out = lzma.decompress(data, format=lzma.FORMAT_XZ)
            if max_size is not None and len(out) > max_size:
                raise CorruptStream("backend payload larger than declared")
            return out
        if backend == "none":
            return bytes(data)
    except (zlib.error, lzma.LZMAError, EOFError) as exc:
        raise CorruptStream(f"backend payload is undecodable: {exc}") from None
    raise ValueError(f"unknown backend {backend!r}")


# --- stream encode / decode -----------------------------------------------------

def _coerce_symbols(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.integer):
        raise TypeError(f"stream symbols must be integers, got dtype {arr.dtype}")
    if arr.ndim != 1:
        raise ValueError(f"stream symbols must be 1-dimensional, got shape {arr.shape}")
    if arr.dtype == np.uint64 and arr.size and int(arr.max()) > SYMBOL_MAX:
        raise ValueError("symbol magnitude exceeds the coding range")
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    if arr.size and (int(arr.max()) > SYMBOL_MAX or int(arr.min()) < -SYMBOL_MAX):
        raise ValueError("symbol magnitude exceeds the coding range")
    return arr


def _analyze(zz: np.ndarray):
    """Alphabet, counts and per-element alphabet index for unsigned symbols."""
    alphabet_signed, counts, inverse, _ = kernels.group_by_ids(
        zz.view(np.int64), want_perm=False
    )
    return alphabet_signed.view(np.uint64), counts, inverse


def _fixed_plan(alphabet: np.ndarray, n: int):
    width = max(1, int(alphabet[-1]).bit_length())
    return width, 8 + n * width


def _huffman_plan(alphabet: np.ndarray, counts: np.ndarray):
    lengths = _limit_lengths(_code_lengths(counts), counts)
    blob = _table_blob(alphabet, lengths)
    payload_bits = int((counts * lengths).sum())
    return lengths, blob, 8 * len(blob) + payload_bits


def expected_length(values, scheme: str) -> int:
    """Exact coded size in bits (scheme header + payload, before the backend).

    Computed from symbol statistics alone; no payload is materialized.
    """
    arr = _coerce_symbols(values)
    if arr.size == 0:
        raise EmptyInput("expected_length needs at least one symbol")
    alphabet, counts, _ = _analyze(zigzag_encode(arr))
    if scheme == SCHEME_FIXED:
        return _fixed_plan(alphabet, arr.size)[1]
    if scheme == SCHEME_HUFFMAN:
        return _huffman_plan(alphabet, counts)[2]
    raise ValueError(f"unknown scheme {scheme!r}")


def encode_stream(values, *, delta: bool = True, backend: str = "zlib") -> bytes:
    """Code a 1-d integer sequence into a self-delimiting byte stream."""
    if backend not in BACKEND_IDS:
        raise ValueError(f"unknown backend {backend!r}")
    arr = _coerce_symbols(values)
    n = arr.size
    out = bytearray()
    if n == 0:
        out.append(_SCHEME_IDS[SCHEME_FIXED] | (0x02 if delta else 0))
        write_varint(out, 0)
        out.append(0)  # width
        out.append(BACKEND_IDS["none"])
        write_varint(out, 0)
        return bytes(out)
    work = delta_encode(arr) if delta else arr
    zz = zigzag_encode(work)
    alphabet, counts, inverse = _analyze(zz)
    width, fixed_bits = _fixed_plan(alphabet, n)
    lengths, blob, huffman_bits = _huffman_plan(alphabet, counts)
    use_huffman = huffman_bits < fixed_bits
    if use_huffman:
        codes, _, _, _, _, _, _ = _canonical_tables(lengths)
        payload = kernels.huffman_encode(inverse, codes, lengths.astype(np.uint8))
    else:
        payload = kernels.pack_fixed(zz, width)
    stored, backend_id = _shrink_or_store(payload, backend)
    scheme = SCHEME_HUFFMAN if use_huffman else SCHEME_FIXED
    out.append(_SCHEME_IDS[scheme] | (0x02 if delta else 0))
    write_varint(out, n)
    if use_huffman:
        out += blob
    else:
        out.append(width)
    out.append(backend_id)
    write_varint(out, len(stored))
    out += stored
    return bytes(out)


def _shrink_or_store(payload: bytes, backend: str):
    if backend == "none" or not payload:
        return payload, BACKEND_IDS["none"]
    squeezed = backend_compress(payload, backend)
    if len(squeezed) < len(payload):
        return squeezed, BACKEND_IDS[backend]
    return payload, BACKEND_IDS["none"]


def read_stream(cur: ByteCursor, expected_count: int | None = None,
                max_count: int | None = None) -> np.ndarray:
    """Decode one stream starting at the cursor; advances past it."""
    tag = cur.take_byte()
    if tag & ~0x03:
        raise CorruptStream(f"unknown stream tag 0x{tag:02x}")
    scheme = _SCHEME_NAMES[tag & 0x01]
    delta = bool(tag & 0x02)
    n = cur.take_varint()
    if expected_count is not None and n != expected_count:
        raise CountMismatch(f"stream holds {n} symbols, expected {expected_count}")
    if max_count is not None and n > max_count:
        raise CorruptStream(f"stream claims {n} symbols, at most {max_count} are possible")
    width = 0
    table = None
    if scheme == SCHEME_FIXED:
        width = cur.take_byte()
        if n and not 1 <= width <= 63:
            raise CorruptStream(f"fixed-length width {width} out of range")
    else:
        table = _read_table(cur)
    backend_id = cur.take_byte()
    if backend_id not in _BACKEND_NAMES:
        raise CorruptStream(f"unknown backend id {backend_id}")
    stored = cur.take(cur.take_varint())
    if n == 0:
        if stored:
            raise CorruptStream("empty stream with a payload")
        return np.empty(0, dtype=np.int64)
    if scheme == SCHEME_FIXED:
        raw_size = (n * width + 7) // 8
    else:
        raw_size = (n * MAX_CODE_LEN + 7) // 8
    payload = backend_decompress(stored, _BACKEND_NAMES[backend_id], max_size=raw_size)
    if scheme == SCHEME_FIXED:
        if len(payload) != raw_size:
            raise CorruptStream("fixed-length payload size mismatch")
        zz = kernels.unpack_fixed(payload, n, width)
    else:
        alphabet, lengths = table
        _, canon_order, first_code, level_base, level_count, min_len, max_len = (
            _canonical_tables(lengths)
        )
        try:
            ranks = kernels.huffman_decode(
                payload, n, first_code, level_base, level_count, min_len, max_len
            )
        except ValueError as exc:
            raise CorruptStream(str(exc)) from None
        used_bits = int(lengths[canon_order][ranks].sum())
        if len(payload) != (used_bits + 7) // 8:
            raise CorruptStream("huffman payload size mismatch")
        zz = alphabet[canon_order][ranks]
    if int(zz.max()) > _MAX_ZZ:
        raise CorruptStream("decoded symbol out of range")
    work = zigzag_decode(zz)
    return delta_decode(work) if delta else work


def decode_stream(data: bytes, expected_count: int | None = None) -> np.ndarray:
    """Decode a standalone stream; the buffer must contain exactly one."""
    cur = ByteCursor(bytes(data))
    values = read_stream(cur, expected_count)
    cur.expect_end()
    return values


def describe_stream(data: bytes) -> CodedStream:
    """Parse a stream's header without decoding its payload."""
    cur = ByteCursor(bytes(data))
    tag = cur.take_byte()
    if tag & ~0x03:
        raise CorruptStream(f"unknown stream tag 0x{tag:02x}")
    scheme = _SCHEME_NAMES[tag & 0x01]
    delta = bool(tag & 0x02)
    n = cur.take_varint()
    bit_width = None
    table_symbols = None
    if scheme == SCHEME_FIXED:
        bit_width = cur.take_byte()
    else:
        table_symbols = len(_read_table(cur)[0])
    backend_id = cur.take_byte()
    if backend_id not in _BACKEND_NAMES:
        raise CorruptStream(f"unknown backend id {backend_id}")
    stored = cur.take_varint()
    return CodedStream(
        scheme=scheme,
        delta=delta,
        symbol_count=n,
        backend=_BACKEND_NAMES[backend_id],
        stored_bytes=stored,
        bit_width=bit_width,
        table_symbols=table_symbols,
    )
