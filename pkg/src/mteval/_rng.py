"""Deterministic 64-bit generator used for data splits.

Splits must reproduce bit-for-bit across platforms and Python builds, so
they do not go through ``random`` or numpy.  The generator is pinned here:

* seeding: the user seed is passed once through SplitMix64 to spread
  low-entropy seeds over the state space (state 0 is remapped to the
  SplitMix64 increment, since xorshift fixes 0),
* stream: xorshift64* (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D),
* shuffle: Fisher-Yates, drawing ``j = next() % (i + 1)`` for
  ``i = n-1 .. 1``.

Any change to these constants silently changes every split, so treat them
as frozen.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


class Xorshift64Star:
    """xorshift64* stream seeded through SplitMix64."""

    def __init__(self, seed: int):
        state = (seed ^ 0x9E3779B97F4A7C15) & _MASK64
        # One SplitMix64 round; decorrelates adjacent user seeds.
        state = (state * 0xBF58476D1CE4E5B9) & _MASK64
        state = ((state ^ (state >> 27)) * 0x94D049BB133111EB) & _MASK64
        state ^= state >> 31
        self._state = state if state != 0 else 0x9E3779B97F4A7C15

    def next_uint64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_uint64() % (i + 1)
            items[i], items[j] = items[j], items[i]


def round_half_up(x: float) -> int:
    """Split-size rounding convention: round(x) = floor(x + 0.5)."""
    import math

    return int(math.floor(x + 0.5))
