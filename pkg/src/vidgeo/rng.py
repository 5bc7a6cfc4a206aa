"""Seeded xorshift64* generator for the random baseline.

The baseline must be bit-reproducible across implementations, so the
generator is pinned down to its constants rather than delegating to a
platform RNG:

    state <- seed (or 0x9E3779B97F4A7C15 if seed == 0)
    step: x ^= x >> 12; x ^= x << 25; x ^= x >> 27   (mod 2^64)
    output: (x * 0x2545F4914F6CDD1D) mod 2^64

Bounded draws use the plain modulo reduction ``next_u64() % n``; the modulo
bias is negligible for the candidate-set sizes involved (tens of items
against a 64-bit range).
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_ZERO_SEED = 0x9E3779B97F4A7C15


class Xorshift64Star:
    def __init__(self, seed: int):
        self._state = (seed & _MASK) or _ZERO_SEED

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK
        x ^= x >> 27
        self._state = x
        return (x * _MULT) & _MASK

    def randint(self, n: int) -> int:
        """Uniform-ish integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n
