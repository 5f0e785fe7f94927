"""Seedable, platform-stable random number generation.

Scenario generation and everything downstream must reproduce bit-identically
across runs, platforms, and reimplementations, so we use SplitMix64 instead of
any host-library generator. The full recurrence (all arithmetic mod 2^64):

    state  <- state + 0x9E3779B97F4A7C15
    z      <- state
    z      <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9
    z      <- (z XOR (z >> 27)) * 0x94D049BB133111EB
    output <- z XOR (z >> 31)

Floats in [0, 1) take the top 53 bits of an output word; bounded integers use
rejection sampling so results are unbiased and independent of word size.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit generator; one instance per independent stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("randrange() requires n >= 1")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError("randint() requires lo <= hi")
        return lo + self.randrange(hi - lo + 1)

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq, k: int) -> list:
        """k distinct elements, order determined by the draw sequence."""
        if k > len(seq):
            raise ValueError("sample() larger than population")
        pool = list(seq)
        out = []
        for _ in range(k):
            out.append(pool.pop(self.randrange(len(pool))))
        return out

    def normal(self) -> float:
        """Standard normal via Box-Muller (polar form avoided for determinism)."""
        import math

        u1 = self.random()
        while u1 <= 0.0:
            u1 = self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def derive_seed(seed: int, *indices: int) -> int:
    """Stable sub-stream seed from a master seed and index path.

    Used so batch workers can draw per-instance streams that do not depend on
    scheduling order: derive_seed(batch_seed, i) is a pure function.
    """
    g = SplitMix64(seed)
    out = g.next_u64()
    for idx in indices:
        g = SplitMix64(out ^ (idx & _MASK64))
        out = g.next_u64()
    return out
