# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled philox4x64-10 kernel; bit-identical twin of ``_philox_np``."""

from libc.stdint cimport uint64_t

import numpy as np

BACKEND = "compiled"

cdef extern from *:
    ctypedef unsigned long long uint128 "unsigned __int128"

cdef uint64_t M0 = 0xD2E7470EE14C6C93ULL
cdef uint64_t M1 = 0xCA5A826395121157ULL
cdef uint64_t W0 = 0x9E3779B97F4A7C15ULL
cdef uint64_t W1 = 0xBB67AE8584CAA73BULL


cdef inline void _block(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                        uint64_t k0, uint64_t k1, uint64_t* out) noexcept nogil:
    cdef uint128 p0, p1
    cdef uint64_t hi0, lo0, hi1, lo1
    cdef int r
    for r in range(10):
        p0 = <uint128> M0 * c0
        p1 = <uint128> M1 * c2
        hi0 = <uint64_t> (p0 >> 64)
        lo0 = <uint64_t> p0
        hi1 = <uint64_t> (p1 >> 64)
        lo1 = <uint64_t> p1
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = k0 + W0
        k1 = k1 + W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


def philox_blocks(c0, c1, c2, c3, key0, key1):
    """Run philox4x64-10 on broadcastable counter word arrays."""
    arrs = np.broadcast_arrays(
        np.asarray(c0, dtype=np.uint64), np.asarray(c1, dtype=np.uint64),
        np.asarray(c2, dtype=np.uint64), np.asarray(c3, dtype=np.uint64))
    shape = arrs[0].shape
    cdef uint64_t[::1] w0 = np.ascontiguousarray(arrs[0]).ravel()
    cdef uint64_t[::1] w1 = np.ascontiguousarray(arrs[1]).ravel()
    cdef uint64_t[::1] w2 = np.ascontiguousarray(arrs[2]).ravel()
    cdef uint64_t[::1] w3 = np.ascontiguousarray(arrs[3]).ravel()
    cdef Py_ssize_t n = w0.shape[0], i
    out = [np.empty(n, dtype=np.uint64) for _ in range(4)]
    cdef uint64_t[::1] o0 = out[0]
    cdef uint64_t[::1] o1 = out[1]
    cdef uint64_t[::1] o2 = out[2]
    cdef uint64_t[::1] o3 = out[3]
    cdef uint64_t k0 = key0, k1 = key1
    cdef uint64_t buf[4]
    with nogil:
        for i in range(n):
            _block(w0[i], w1[i], w2[i], w3[i], k0, k1, buf)
            o0[i] = buf[0]
            o1[i] = buf[1]
            o2[i] = buf[2]
            o3[i] = buf[3]
    return tuple(a.reshape(shape) for a in out)


def raw_cells(seed, path_lo, n_paths, n_steps, n_values, key_salt):
    """Raw 64-bit words, shape (n_paths, n_steps, n_values).

    Same counter layout as the numpy fallback: word v of cell (path, step)
    is lane v % 4 of the block at counter (v // 4, step, path, 0) under key
    (seed, key_salt).
    """
    cdef Py_ssize_t np_ = n_paths, ns = n_steps, nv = n_values
    cdef Py_ssize_t nb = (nv + 3) // 4
    cdef uint64_t k0 = seed, k1 = key_salt, plo = path_lo
    out = np.empty((np_, ns, nv), dtype=np.uint64)
    cdef uint64_t[:, :, ::1] o = out
    cdef Py_ssize_t p, s, b, lane, v
    cdef uint64_t buf[4]
    with nogil:
        for p in range(np_):
            for s in range(ns):
                for b in range(nb):
                    _block(<uint64_t> b, <uint64_t> s, plo + <uint64_t> p, 0ULL,
                           k0, k1, buf)
                    for lane in range(4):
                        v = 4 * b + lane
                        if v < nv:
                            o[p, s, v] = buf[lane]
    return out
