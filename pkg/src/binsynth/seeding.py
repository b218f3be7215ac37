"""Splittable 64-bit seeding: SplitMix64 streams and FNV-1a ids.

Every random choice in the pipeline derives from ``mix64(global_seed, key)``
so results never depend on the order in which work is scheduled.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def splitmix_finalize(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64(a: int, b: int) -> int:
    """Combine two 64-bit words: finalize(a XOR finalize(b + gamma))."""
    return splitmix_finalize((a & MASK64) ^ splitmix_finalize(b + GOLDEN_GAMMA))


def fnv1a64(text: str) -> int:
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


class SplitMix64:
    """The SplitMix64 generator: state += gamma, output = finalize(state)."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return splitmix_finalize(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection of the biased tail."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n


def partial_shuffle(n: int, k: int, rng: SplitMix64) -> list[int]:
    """First ``k`` entries of a forward Fisher-Yates shuffle of ``range(n)``."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} of {n}")
    # sparse swap table so drawing k of n costs O(k), not O(n)
    swapped: dict[int, int] = {}
    out = []
    for i in range(k):
        j = i + rng.below(n - i)
        out.append(swapped.get(j, j))
        swapped[j] = swapped.get(i, i)
    return out
