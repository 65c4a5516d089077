"""Seed handling.

Every stochastic draw goes through ``numpy.random.Generator`` backed by
PCG64, seeded with a single unsigned 64-bit integer. Per-trial seeds are
derived from a master seed in counter mode::

    seed(master, i) = splitmix64((master + (i + 1) * 0x9E3779B97F4A7C15) mod 2**64)

For a fixed master the map is injective in ``i`` (an odd multiplier and the
splitmix64 finaliser are both bijections on 64-bit words). The formula is
part of the reproducibility contract and must not change.
"""
import numpy as np

PRNG_ID = "numpy.random.Generator(PCG64)/seed=u64"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed, index):
    """Seed for stream ``index`` under ``master_seed`` (both non-negative ints)."""
    if master_seed < 0 or index < 0:
        raise ValueError("seeds and indices must be non-negative")
    return splitmix64((int(master_seed) + (int(index) + 1) * _GOLDEN) & _MASK64)


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))
