"""Deterministic 64-bit random number generator for reproducible datasets.

The generator is SplitMix64. Its constants are fixed here so that any
implementation of the same algorithm regenerates identical draw sequences:

    state    <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z        <- state
    z        <- ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z        <- ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output   <- z XOR (z >> 31)

Doubles in [0, 1) take the top 53 bits: (output >> 11) * 2^-53.

Per-sample streams are derived by XOR-ing the base seed with the sample
index (see :func:`derive_seed`), each feeding an independent SplitMix64.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def derive_seed(seed: int, index: int) -> int:
    """Seed for the index-th derived stream: seed XOR index, mod 2^64."""
    return (seed ^ index) & _MASK64


class SplitMix64:
    """SplitMix64 stream seeded with a 64-bit integer."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits of the next output."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_disk_point(self, radius: float) -> tuple[float, float]:
        """Uniform point on the disk of the given radius centered at the origin.

        Draw order is fixed: first the radial uniform, then the angular one.
        """
        u = self.next_float()
        v = self.next_float()
        r = radius * math.sqrt(u)
        theta = 2.0 * math.pi * v
        return (r * math.cos(theta), r * math.sin(theta))
