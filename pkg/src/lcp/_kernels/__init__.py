"""Kernel dispatch: compiled core when importable, numpy fallback otherwise.

``LCP_BACKEND=native`` or ``LCP_BACKEND=fallback`` in the environment pins
the choice at import time; :func:`set_backend` switches it later (tests use
this to prove both produce identical bytes).
"""
from __future__ import annotations

import contextlib
import os

import numpy as np

from . import fallback as _fallback

try:
    from . import _native
except ImportError:
    _native = None

_IMPLS = {"fallback": _fallback}
if _native is not None:
    _IMPLS["native"] = _native


def _initial():
    forced = os.environ.get("LCP_BACKEND")
    if forced:
        if forced not in _IMPLS:
            raise ImportError(
                f"LCP_BACKEND={forced!r} is not available; "
                f"choices here: {sorted(_IMPLS)}"
            )
        return forced
    return "native" if _native is not None else "fallback"


_active_name = _initial()
_active = _IMPLS[_active_name]


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def backend_name() -> str:
    return _active_name


def set_backend(name: str) -> None:
    global _active_name, _active
    if name not in _IMPLS:
        raise ValueError(f"unknown kernel backend {name!r}; choices: {sorted(_IMPLS)}")
    _active_name = name
    _active = _IMPLS[name]


@contextlib.contextmanager
def using_backend(name: str):
    prev = _active_name
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def pack_fixed(values, width: int) -> bytes:
    values = np.ascontiguousarray(values, dtype=np.uint64)
    if not 0 <= width <= 64:
        raise ValueError(f"bit width must be in [0, 64], got {width}")
    return _active.pack_fixed(values, width)


def unpack_fixed(data, count: int, width: int) -> np.ndarray:
    if not 0 <= width <= 64:
        raise ValueError(f"bit width must be in [0, 64], got {width}")
    if len(data) * 8 < count * width:
        raise ValueError("buffer too short for requested bit count")
    return _active.unpack_fixed(bytes(data), count, width)


def huffman_encode(symbol_indices, codes, lengths) -> bytes:
    symbol_indices = np.ascontiguousarray(symbol_indices, dtype=np.int64)
    codes = np.ascontiguousarray(codes, dtype=np.uint64)
    lengths = np.ascontiguousarray(lengths, dtype=np.uint8)
    return _active.huffman_encode(symbol_indices, codes, lengths)


def huffman_decode(data, count: int, first_code, level_base, level_count,
                   min_len: int, max_len: int) -> np.ndarray:
    first_code = np.ascontiguousarray(first_code, dtype=np.uint64)
    level_base = np.ascontiguousarray(level_base, dtype=np.int64)
    level_count = np.ascontiguousarray(level_count, dtype=np.int64)
    return _active.huffman_decode(
        bytes(data), count, first_code, level_base, level_count, min_len, max_len
    )


def group_by_ids(ids, want_perm: bool = True):
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    return _active.group_by_ids(ids, want_perm)


def stable_positions(ranks, counts) -> np.ndarray:
    ranks = np.ascontiguousarray(ranks, dtype=np.int64)
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    return _active.stable_positions(ranks, counts)
