"""Counter-based random streams for quenched disorder.

A vectorized Philox-4x64-10 block cipher maps (key, counter) -> 4 random
64-bit words with no sequential state, so the value drawn for lattice site i
depends only on (seed, stream tag, i) and never on iteration order.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
_PHILOX_M1 = np.uint64(0xCA5A826395121157)
_WEYL_0 = np.uint64(0x9E3779B97F4A7C15)
_WEYL_1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def _mul_wide(a: np.ndarray, b: np.uint64) -> tuple[np.ndarray, np.ndarray]:
    """128-bit product of uint64 arrays via 32-bit limbs; returns (hi, lo)."""
    a0 = a & _MASK32
    a1 = a >> _SHIFT32
    b0 = b & _MASK32
    b1 = b >> _SHIFT32
    t = a0 * b0
    w0 = t & _MASK32
    carry = t >> _SHIFT32
    t = a1 * b0 + carry
    mid1 = t & _MASK32
    c1 = t >> _SHIFT32
    t = a0 * b1 + mid1
    mid2 = t & _MASK32
    c2 = t >> _SHIFT32
    lo = w0 | (mid2 << _SHIFT32)
    hi = a1 * b1 + c1 + c2
    return hi, lo


def philox4x64(counter0: np.ndarray, counter1: int, key0: int, key1: int) -> np.ndarray:
    """Philox-4x64 block cipher with 10 rounds, vectorized over counter word 0.

    Evaluates the cipher at counter words (counter0[n], counter1, 0, 0) with
    key words (key0, key1) and returns an (n, 4) uint64 array. The block at
    counter c equals numpy.random.Philox(key=..., counter=c-1).random_raw(4),
    numpy advancing its counter before each block.
    """
    mask64 = (1 << 64) - 1
    x0 = np.asarray(counter0, dtype=np.uint64).copy()
    n = x0.shape[0]
    x1 = np.full(n, np.uint64(counter1), dtype=np.uint64)
    x2 = np.zeros(n, dtype=np.uint64)
    x3 = np.zeros(n, dtype=np.uint64)
    # key schedule precomputed in Python ints; uint64 scalar adds would warn
    keys0 = [np.uint64((key0 + r * int(_WEYL_0)) & mask64) for r in range(10)]
    keys1 = [np.uint64((key1 + r * int(_WEYL_1)) & mask64) for r in range(10)]
    for r in range(10):
        hi0, lo0 = _mul_wide(x0, _PHILOX_M0)
        hi1, lo1 = _mul_wide(x2, _PHILOX_M1)
        x0, x1, x2, x3 = hi1 ^ x1 ^ keys0[r], lo1, hi0 ^ x3 ^ keys1[r], lo0
    return np.stack([x0, x1, x2, x3], axis=1)


def derive_key(seed: int, *tags: int) -> tuple[int, int]:
    """Two deterministic 64-bit key words from a seed and context tags."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), *[int(t) for t in tags]])
    k = ss.generate_state(2, dtype=np.uint64)
    return int(k[0]), int(k[1])


def counter_uniforms(seed: int, indices: np.ndarray, tags: tuple[int, ...] = (), slot: int = 0) -> np.ndarray:
    """Per-index uniforms in (0, 1); index i reads block (counter0=i, counter1=slot)."""
    k0, k1 = derive_key(seed, *tags)
    blocks = philox4x64(np.asarray(indices, dtype=np.uint64), slot, k0, k1)
    # 53-bit mantissa, offset keeps the value strictly inside (0, 1)
    return ((blocks[:, 0] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def counter_normals(seed: int, indices: np.ndarray, tags: tuple[int, ...] = (), slot: int = 0) -> np.ndarray:
    """Per-index standard normals via inverse-CDF of the counter uniforms."""
    return ndtri(counter_uniforms(seed, indices, tags=tags, slot=slot))


def spawn_seed(master_seed: int, *tags: int) -> int:
    """Deterministic 32-bit child seed for a sequential-chain RNG."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), *[int(t) for t in tags]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])
