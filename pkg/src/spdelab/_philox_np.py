"""Vectorized numpy implementation of the philox4x64-10 counter RNG.

Pure fallback for the compiled kernel in ``_philox_cy``; both produce
bit-identical 64-bit words for the same counters and key.  The 128-bit
products needed by the round function are assembled from 32-bit halves
because numpy has no mulhi on uint64.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)


def _mulhilo(a: np.uint64, b: np.ndarray):
    lo = a * b  # uint64 multiply wraps mod 2^64
    a_hi, a_lo = a >> _SH32, a & _MASK32
    b_hi, b_lo = b >> _SH32, b & _MASK32
    t0 = a_lo * b_lo
    t1 = a_hi * b_lo
    t2 = a_lo * b_hi
    carry = ((t0 >> _SH32) + (t1 & _MASK32) + (t2 & _MASK32)) >> _SH32
    hi = a_hi * b_hi + (t1 >> _SH32) + (t2 >> _SH32) + carry
    return hi, lo


def philox_blocks(c0, c1, c2, c3, key0: int, key1: int):
    """Run philox4x64-10 on broadcastable counter word arrays.

    Returns the four output word arrays of the common broadcast shape.
    """
    c0 = np.asarray(c0, dtype=np.uint64).copy()
    c1 = np.asarray(c1, dtype=np.uint64).copy()
    c2 = np.asarray(c2, dtype=np.uint64).copy()
    c3 = np.asarray(c3, dtype=np.uint64).copy()
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    c0, c1, c2, c3 = (np.ascontiguousarray(a) for a in (c0, c1, c2, c3))
    k0 = np.uint64(key0)
    k1 = np.uint64(key1)
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0 = hi1 ^ c1 ^ k0
            c1 = lo1
            c2 = hi0 ^ c3 ^ k1
            c3 = lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return c0, c1, c2, c3


def raw_cells(
    seed: int,
    path_lo: int,
    n_paths: int,
    n_steps: int,
    n_values: int,
    key_salt: int,
) -> np.ndarray:
    """Raw 64-bit words, shape (n_paths, n_steps, n_values).

    Word ``v`` of cell (path, step) is lane ``v % 4`` of the philox block at
    counter ``(v // 4, step, path, 0)`` under key ``(seed, key_salt)``; the
    stream is a pure function of the counter, so any sharding over paths or
    steps reproduces the same values.
    """
    n_blocks = (n_values + 3) // 4
    blocks = np.arange(n_blocks, dtype=np.uint64)[None, None, :]
    steps = np.arange(n_steps, dtype=np.uint64)[None, :, None]
    paths = np.arange(path_lo, path_lo + n_paths, dtype=np.uint64)[:, None, None]
    zero = np.uint64(0)
    o0, o1, o2, o3 = philox_blocks(blocks, steps, paths, zero, seed, key_salt)
    lanes = np.stack([o0, o1, o2, o3], axis=-1)
    return lanes.reshape(n_paths, n_steps, 4 * n_blocks)[:, :, :n_values]
