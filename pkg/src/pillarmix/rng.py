"""Deterministic counter-based PRNG (SplitMix64).

All randomness in this package (synthetic scenes, random weight init) flows
through this generator so that results are bit-identical across runs,
platforms, and independent reimplementations. The algorithm is SplitMix64
with its standard constants:

    state_k = seed + k * 0x9E3779B97F4A7C15          (k = 1, 2, ...)
    z = state_k
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out_k = z ^ (z >> 31)

Uniform doubles take the top 53 bits: (out_k >> 11) * 2**-53, giving values
in [0, 1). Because the state is a pure function of (seed, k), draws can be
produced scalar or as vectorized numpy batches with identical results.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53_INV = 2.0 ** -53


def _mix(state: np.ndarray) -> np.ndarray:
    z = state.copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Stateful view over the counter-based stream for a given seed."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._count = 0  # draws consumed so far

    def next_u64(self) -> int:
        return int(self.u64_array(1)[0])

    def u64_array(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs, counters self._count+1 .. +n."""
        ks = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        return _mix(self._seed + ks * _GOLDEN)

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        """Uniform float64 draws in [lo, hi); scalar when size is None,
        else an array of the given int or tuple shape (row-major draw order)."""
        shape = (1,) if size is None else ((size,) if np.isscalar(size) else tuple(size))
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        u = (self.u64_array(n) >> np.uint64(11)).astype(np.float64) * _U53_INV
        out = lo + u * (hi - lo)
        return float(out[0]) if size is None else out.reshape(shape)

    def symmetric(self, scale: float, size) -> np.ndarray:
        """Uniform float64 draws in [-scale, scale)."""
        return (2.0 * self.uniform(size=size) - 1.0) * scale
