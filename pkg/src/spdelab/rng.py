"""Counter-based Gaussian stream with a compiled kernel and numpy fallback.

Standard normals for the sampler are a pure function of
``(seed, path index, step index, value index)``: the raw 64-bit word comes
from a philox4x64-10 block keyed by the seed, and the normal is the inverse
CDF of the induced uniform in (0, 1).  No sequential state exists anywhere,
so ensembles can be generated in shards over paths (or steps) in any order
and still be bit-identical.

The compiled kernel (``spdelab._philox_cy``) is preferred when importable;
set ``SPDELAB_KERNEL=python`` or ``SPDELAB_KERNEL=compiled`` to force a
backend.  Both emit identical words, and the uniform-to-normal transform is
shared, so results never depend on the backend.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.special import ndtri

from . import _philox_np

__all__ = ["backend_name", "available_backends", "standard_normal_cells", "philox_blocks"]

# Arbitrary fixed key salt (pi digits); distinguishes this stream family
# from any other philox use of the same seed.
KEY_SALT = 0x243F6A8885A308D3

_FORCE = os.environ.get("SPDELAB_KERNEL", "").strip().lower()
try:
    from . import _philox_cy
except ImportError:
    _philox_cy = None

if _FORCE == "python":
    _impl = _philox_np
elif _FORCE == "compiled":
    if _philox_cy is None:
        raise ImportError("SPDELAB_KERNEL=compiled but the extension is not built")
    _impl = _philox_cy
else:
    _impl = _philox_cy if _philox_cy is not None else _philox_np


def backend_name() -> str:
    """Which kernel is active: "compiled" or "python"."""
    return _impl.BACKEND


def available_backends() -> dict:
    """Importable kernel modules keyed by backend name (for benchmarks/tests)."""
    out = {"python": _philox_np}
    if _philox_cy is not None:
        out["compiled"] = _philox_cy
    return out


def philox_blocks(c0, c1, c2, c3, key0: int, key1: int):
    """philox4x64-10 output words for broadcastable counter arrays."""
    return _impl.philox_blocks(c0, c1, c2, c3, key0, key1)


def _to_uniform(words: np.ndarray) -> np.ndarray:
    # 53-bit mantissa, centered in the cell: values lie strictly inside (0, 1).
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normal_cells(
    seed: int,
    path_lo: int,
    n_paths: int,
    n_steps: int,
    n_values: int,
    impl=None,
) -> np.ndarray:
    """Standard normals of shape (n_paths, n_steps, n_values).

    ``path_lo`` is the global index of the first path in the shard; the
    result equals the corresponding slice of a single full-range call.
    """
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must fit in 64 bits")
    impl = impl or _impl
    raw = impl.raw_cells(int(seed), int(path_lo), int(n_paths), int(n_steps),
                         int(n_values), KEY_SALT)
    return ndtri(_to_uniform(raw))
