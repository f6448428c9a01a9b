"""Tiny seedable splitmix64 generator.

Noise masks must be reproducible across platforms and interpreter
versions, so the generator is spelled out here instead of relying on a
library whose stream could change between releases.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64: one 64-bit state word, Weyl increment, two xor-multiply mixes."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def stream(self, n: int) -> np.ndarray:
        """The next ``n`` outputs at once, identical to n ``next_u64`` calls.

        The i-th output mixes state + (i+1) * increment, so the whole
        block vectorizes; uint64 arithmetic wraps exactly like the
        scalar path.
        """
        base = np.uint64(self._state) + np.uint64(_GOLDEN) * np.arange(
            1, n + 1, dtype=np.uint64
        )
        self._state = (self._state + n * _GOLDEN) & _MASK64
        z = base
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def below(self, bound: int) -> int:
        """Integer in [0, bound). Modulo bias is below bound/2**64, irrelevant here."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def bit(self) -> int:
        """A single 50/50 bit (the top bit of the next word)."""
        return self.next_u64() >> 63
