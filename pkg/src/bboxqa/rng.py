"""Portable seeded random numbers.

Everything stochastic in the package draws from these generators so that a
seed reproduces the same output on every platform. ``splitmix64`` seeds and
derives sub-streams; ``Xoshiro256`` (xoshiro256**) is the workhorse for the
simulator and dataset curation. Only integer arithmetic and IEEE float
addition/multiplication are used for the core draws.
"""

from __future__ import annotations

import math
from typing import Sequence

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_mix(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, splitmix64_mix(state)


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def derive_seed(seed: int, *keys: int | str) -> int:
    """Mix ``seed`` with integer or string keys into an independent 64-bit seed.

    Pure function of its arguments, so per-image or per-annotator streams do
    not depend on iteration order.
    """
    h = splitmix64_mix(seed & MASK64)
    for key in keys:
        if isinstance(key, str):
            k = fnv1a64(key.encode("utf-8"))
        else:
            k = int(key) & MASK64
        h = splitmix64_mix(h ^ splitmix64_mix(k + GOLDEN_GAMMA))
    return h


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** seeded through splitmix64."""

    def __init__(self, seed: int):
        state = seed & MASK64
        s = []
        for _ in range(4):
            state, out = splitmix64(state)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high). Lemire's method with rejection."""
        span = high - low
        if span <= 0:
            raise ValueError("empty range")
        threshold = ((1 << 64) - span) % span
        while True:
            m = self.next_u64() * span
            if (m & MASK64) >= threshold:
                return low + (m >> 64)

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def normal(self) -> float:
        # Irwin-Hall sum of 12 uniforms: unit variance, only +/* arithmetic,
        # so bit-identical everywhere. Tails are truncated at +-6.
        return sum(self.random() for _ in range(12)) - 6.0

    def poisson(self, lam: float) -> int:
        if lam <= 0:
            return 0
        limit = math.exp(-lam)
        k = 0
        p = self.random()
        while p > limit:
            k += 1
            p *= self.random()
        return k

    def choice_index(self, weights: Sequence[float]) -> int:
        total = sum(weights)
        u = self.random() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                return i
        # float round-off: fall back to the last positive weight
        for i in range(len(weights) - 1, -1, -1):
            if weights[i] > 0:
                return i
        raise ValueError("weights must contain a positive entry")
