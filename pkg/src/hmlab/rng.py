"""Counter-based random numbers for reproducible parallel sampling.

Every walk owns a stream identified by (seed, stream_index); the draw for
step ``s`` of a stream is a pure function of (seed, stream_index, s).  This
makes results independent of batching, thread count and execution order:
summing per-range tallies reproduces a single monolithic run bit for bit.

The generator is a vectorized Philox 4x32 with 10 rounds.  Keys carry the
64-bit run seed, the 128-bit counter carries (step, stream).  One block
yields 4x32 bits, turned into two 53-bit-mantissa uniforms, which is enough
for one isotropic direction in 2D or 3D.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_SHIFT32 = np.uint64(32)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_ROUNDS = 10


def philox_block(seed: int, stream, step: int):
    """Return four uint64-held 32-bit words for each stream element.

    Parameters
    ----------
    seed : int
        64-bit run seed (key).
    stream : ndarray of uint64
        Stream indices, one per concurrent walk.
    step : int
        Step counter within each stream.
    """
    stream = np.asarray(stream, dtype=np.uint64)
    c0 = np.full(stream.shape, np.uint64(step) & _MASK32, dtype=np.uint64)
    c1 = stream & _MASK32
    c2 = (stream >> _SHIFT32) & _MASK32
    c3 = np.full(stream.shape, (np.uint64(step) >> _SHIFT32) & _MASK32, dtype=np.uint64)
    k0 = np.uint64(seed) & _MASK32
    k1 = (np.uint64(seed) >> _SHIFT32) & _MASK32
    for _ in range(_ROUNDS):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0 = (p1 >> _SHIFT32) ^ c1 ^ k0
        c1 = p1 & _MASK32
        c2 = (p0 >> _SHIFT32) ^ c3 ^ k1
        c3 = p0 & _MASK32
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


def uniform_pair(seed: int, stream, step: int):
    """Two independent uniforms in [0, 1) per stream element."""
    c0, c1, c2, c3 = philox_block(seed, stream, step)
    u = ((c0 >> np.uint64(5)) * np.uint64(1 << 26) + (c1 >> np.uint64(6))).astype(np.float64) * _INV53
    v = ((c2 >> np.uint64(5)) * np.uint64(1 << 26) + (c3 >> np.uint64(6))).astype(np.float64) * _INV53
    return u, v


def directions_2d(seed: int, stream, step: int):
    """Unit vectors uniform on the circle, shape (len(stream), 2)."""
    u, _ = uniform_pair(seed, stream, step)
    ang = (2.0 * np.pi) * u
    return np.stack((np.cos(ang), np.sin(ang)), axis=1)


def directions_3d(seed: int, stream, step: int):
    """Unit vectors uniform on the sphere, shape (len(stream), 3)."""
    u, v = uniform_pair(seed, stream, step)
    z = 2.0 * u - 1.0
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    ang = (2.0 * np.pi) * v
    return np.stack((s * np.cos(ang), s * np.sin(ang), z), axis=1)


def derive_seed(seed: int, *tags) -> int:
    """Stable 64-bit sub-seed for a named purpose.

    Hashing (seed, tags) keeps independent sampling jobs on disjoint key
    material without any shared mutable state; the digest is stable across
    processes and platforms.
    """
    text = repr((int(seed),) + tuple(str(t) for t in tags))
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")
