# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
# distutils: language = c++
"""Compiled kernels: bit packing, canonical Huffman, block grouping.

Byte-for-byte equivalent to ``lcp._kernels.fallback``; only faster.
"""

from cython.operator cimport dereference as deref, preincrement as inc
from libc.stdint cimport int64_t, uint64_t
from libcpp.algorithm cimport sort
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

import numpy as np

cdef extern from *:
    ctypedef unsigned long long uint128 "__uint128_t"


def pack_fixed(const uint64_t[::1] values, int width):
    cdef Py_ssize_t n = values.shape[0]
    if n == 0 or width == 0:
        return b""
    cdef Py_ssize_t total_bits = n * width
    out = bytearray((total_bits + 7) >> 3)
    cdef unsigned char[::1] ob = out
    cdef uint128 acc = 0
    cdef int nbits = 0
    cdef Py_ssize_t i, w = 0
    for i in range(n):
        acc = (acc << width) | values[i]
        nbits += width
        while nbits >= 8:
            nbits -= 8
            ob[w] = <unsigned char>((acc >> nbits) & 0xFF)
            w += 1
    if nbits:
        ob[w] = <unsigned char>((acc << (8 - nbits)) & 0xFF)
    return bytes(out)


def unpack_fixed(bytes data, Py_ssize_t count, int width):
    out = np.empty(count, dtype=np.uint64)
    if count == 0 or width == 0:
        out[:] = 0
        return out
    cdef uint64_t[::1] ov = out
    cdef const unsigned char[::1] db = data
    cdef uint128 acc = 0
    cdef int nbits = 0
    cdef Py_ssize_t i, pos = 0
    cdef uint64_t mask
    if width == 64:
        mask = <uint64_t>0xFFFFFFFFFFFFFFFF
    else:
        mask = (<uint64_t>1 << width) - 1
    for i in range(count):
        while nbits < width:
            acc = (acc << 8) | db[pos]
            pos += 1
            nbits += 8
        nbits -= width
        ov[i] = <uint64_t>(acc >> nbits) & mask
    return out


def huffman_encode(const int64_t[::1] symbol_indices,
                   const uint64_t[::1] codes,
                   const unsigned char[::1] lengths):
    cdef Py_ssize_t n = symbol_indices.shape[0]
    if n == 0:
        return b""
    cdef Py_ssize_t total_bits = 0
    cdef Py_ssize_t i
    for i in range(n):
        total_bits += lengths[symbol_indices[i]]
    out = bytearray((total_bits + 7) >> 3)
    cdef unsigned char[::1] ob = out
    cdef uint128 acc = 0
    cdef int nbits = 0, width
    cdef Py_ssize_t w = 0
    cdef int64_t s
    for i in range(n):
        s = symbol_indices[i]
        width = lengths[s]
        acc = (acc << width) | codes[s]
        nbits += width
        while nbits >= 8:
            nbits -= 8
            ob[w] = <unsigned char>((acc >> nbits) & 0xFF)
            w += 1
    if nbits:
        ob[w] = <unsigned char>((acc << (8 - nbits)) & 0xFF)
    return bytes(out)


def huffman_decode(bytes data, Py_ssize_t count,
                   const uint64_t[::1] first_code,
                   const int64_t[::1] level_base,
                   const int64_t[::1] level_count,
                   int min_len, int max_len):
    out = np.empty(count, dtype=np.int64)
    if count == 0:
        return out
    cdef int64_t[::1] ov = out
    cdef const unsigned char[::1] db = data
    cdef Py_ssize_t nbytes = len(data)
    cdef uint64_t acc = 0, code
    cdef int nbits = 0, level, need, take
    cdef Py_ssize_t i, pos = 0
    cdef int64_t idx
    for i in range(count):
        code = 0
        need = min_len
        while need:
            if nbits == 0:
                if pos >= nbytes:
                    raise ValueError("bit stream exhausted")
                acc = db[pos]
                pos += 1
                nbits = 8
            take = need if need < nbits else nbits
            code = (code << take) | ((acc >> (nbits - take)) & ((<uint64_t>1 << take) - 1))
            nbits -= take
            need -= take
        level = min_len
        while True:
            idx = <int64_t>code - <int64_t>first_code[level]
            if 0 <= idx < level_count[level]:
                ov[i] = level_base[level] + idx
                break
            level += 1
            if level > max_len:
                raise ValueError("invalid code in bit stream")
            if nbits == 0:
                if pos >= nbytes:
                    raise ValueError("bit stream exhausted")
                acc = db[pos]
                pos += 1
                nbits = 8
            code = (code << 1) | ((acc >> (nbits - 1)) & 1)
            nbits -= 1
    return out


def group_by_ids(const int64_t[::1] ids, bint want_perm=True):
    cdef Py_ssize_t n = ids.shape[0]
    cdef unordered_map[int64_t, int64_t] table
    cdef unordered_map[int64_t, int64_t].iterator it
    cdef vector[int64_t] keys
    cdef vector[int64_t] offs
    cdef Py_ssize_t i, nb
    cdef int64_t v, r, run
    table.reserve(<size_t>(n if n > 16 else 16))
    for i in range(n):
        v = ids[i]
        it = table.find(v)
        if it == table.end():
            table[v] = 1
        else:
            deref(it).second += 1
    keys.reserve(table.size())
    it = table.begin()
    while it != table.end():
        keys.push_back(deref(it).first)
        inc(it)
    sort(keys.begin(), keys.end())
    nb = keys.size()
    uniq = np.empty(nb, dtype=np.int64)
    counts = np.empty(nb, dtype=np.int64)
    ranks = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] uv = uniq
    cdef int64_t[::1] cv = counts
    cdef int64_t[::1] rv = ranks
    for i in range(nb):
        v = keys[i]
        uv[i] = v
        cv[i] = table[v]
        table[v] = i  # repurpose the map as id -> rank
    for i in range(n):
        rv[i] = table[ids[i]]
    if not want_perm:
        return uniq, counts, ranks, None
    offs.resize(nb)
    run = 0
    for i in range(nb):
        offs[i] = run
        run += cv[i]
    perm = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] pv = perm
    for i in range(n):
        r = rv[i]
        pv[offs[r]] = i
        offs[r] += 1
    return uniq, counts, ranks, perm


def stable_positions(const int64_t[::1] ranks, const int64_t[::1] counts):
    cdef Py_ssize_t n = ranks.shape[0]
    cdef Py_ssize_t nb = counts.shape[0]
    cdef vector[int64_t] offs
    cdef Py_ssize_t i
    cdef int64_t r, run = 0
    offs.resize(nb)
    for i in range(nb):
        offs[i] = run
        run += counts[i]
    pos = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] pv = pos
    for i in range(n):
        r = ranks[i]
        if r < 0 or r >= nb:
            raise ValueError("rank out of range")
        pv[i] = offs[r]
        offs[r] += 1
    return pos
