"""Deterministic 64-bit PRNG streams (splitmix-style).

Every stochastic component of the toolkit draws from these streams so that a
single integer seed reproduces a run bit-for-bit, independent of platform or
library RNG state. Gaussian draws use Box-Muller over the same stream.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_INV_2_53 = 2.0**-53


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *tags: int) -> int:
    """Fold integer tags into a master seed, yielding an independent stream seed."""
    s = seed & _MASK64
    for t in tags:
        s = _mix64((s + _GAMMA + (t & _MASK64)) & _MASK64)
    return s


def _mix64_array(states: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps mod 2**64; keep every operand uint64 to avoid
    # numpy's silent promotion to float64.
    z = states.astype(np.uint64, copy=True)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Sequential splitmix64 stream with scalar and vectorized draws.

    The vectorized draws consume exactly the same underlying sequence as the
    scalar ones, so mixing call styles keeps streams aligned.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix64(self._state)

    def uniform(self) -> float:
        """Uniform draw in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * _INV_2_53

    def randrange(self, n: int) -> int:
        # Modulo bias is negligible for the small ranges used here (n <= 256).
        return self.next_u64() % n

    def gaussian(self) -> float:
        """One standard normal draw (Box-Muller, cosine branch; consumes 2 words)."""
        u1 = ((self.next_u64() >> 11) + 1) * _INV_2_53  # in (0, 1]
        u2 = (self.next_u64() >> 11) * _INV_2_53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def _raw_array(self, n: int) -> np.ndarray:
        base = np.uint64(self._state)
        steps = (np.arange(1, n + 1, dtype=np.uint64)) * np.uint64(_GAMMA)
        out = _mix64_array(base + steps)
        self._state = (self._state + n * _GAMMA) & _MASK64
        return out

    def uniform_array(self, n: int) -> np.ndarray:
        return (self._raw_array(n) >> np.uint64(11)) * _INV_2_53

    def gaussian_array(self, n: int) -> np.ndarray:
        """n standard normal draws via Box-Muller pairs (consumes 2*ceil(n/2) words)."""
        if n == 0:
            return np.empty(0)
        m = (n + 1) // 2
        raw = self._raw_array(2 * m) >> np.uint64(11)
        u1 = (raw[0::2].astype(np.float64) + 1.0) * _INV_2_53  # in (0, 1]
        u2 = raw[1::2].astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]
