"""Seed derivation and random streams.

All randomness flows through numpy's Philox4x64-10 counter-based generator.
Derived seeds are mixed with SplitMix64 so that nearby integer keys give
unrelated streams.
"""

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x):
    """One SplitMix64 output step applied to ``x`` (a 64-bit integer)."""
    z = (int(x) + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, *keys):
    """Combine a base seed with integer or string keys into a new 64-bit seed."""
    out = int(seed) & MASK64
    for key in keys:
        if isinstance(key, str):
            key = int.from_bytes(key.encode(), "little") & MASK64
        elif isinstance(key, float):
            key = int(np.float64(key).view(np.uint64))
        out = out ^ splitmix64(key)
        out = splitmix64(out)
    return out


def philox(seed, substream=0):
    """Generator for substream ``substream`` of the Philox stream keyed by ``seed``.

    Substreams start 2**64 blocks apart in the counter space, so they never
    overlap and can be drawn in any order.
    """
    bitgen = np.random.Philox(key=int(seed) & MASK64, counter=[0, int(substream), 0, 0])
    return np.random.Generator(bitgen)
