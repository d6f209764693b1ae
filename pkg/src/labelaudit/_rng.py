"""Self-contained PRNG primitives for the numba-compiled training loops.

The jitted trainers need random draws that are bitwise reproducible across
platforms and library versions, so they use an inlined splitmix64 seeder and
xorshift64* stream instead of numpy's generators.
"""

import numpy as np
from numba import njit

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True)
def seed_state(seed):
    """Expand an integer seed into a nonzero 64-bit xorshift state (splitmix64)."""
    z = (np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    z = z ^ (z >> np.uint64(31))
    if z == np.uint64(0):
        z = np.uint64(0x9E3779B97F4A7C15)
    return z


@njit(cache=True)
def next_u64(state):
    """Advance xorshift64*; returns (new_state, 64-bit draw)."""
    x = state
    x ^= x >> np.uint64(12)
    x ^= (x << np.uint64(25)) & _MASK64
    x ^= x >> np.uint64(27)
    x &= _MASK64
    return x, (x * np.uint64(0x2545F4914F6CDD1D)) & _MASK64


@njit(cache=True)
def next_uniform(state):
    """Uniform draw in [0, 1) with 53-bit resolution; returns (state, value)."""
    state, bits = next_u64(state)
    return state, np.float64(bits >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def next_below(state, n):
    """Uniform integer in [0, n); modulo bias is irrelevant at our scales."""
    state, bits = next_u64(state)
    return state, np.int64(bits % np.uint64(n))


@njit(cache=True)
def shuffle_inplace(state, arr):
    """Seeded Fisher-Yates shuffle of an int64 array; returns the new state."""
    for i in range(arr.shape[0] - 1, 0, -1):
        state, j = next_below(state, i + 1)
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp
    return state
