"""SplitMix64 generator used for initialisation, shuffling and dropout.

SplitMix64 (Steele, Lea & Flood 2014) advances a 64-bit counter by a fixed
odd constant and scrambles it with two xor-shift-multiply rounds.  Because
the i-th output depends only on ``seed + i * GAMMA`` the stream can be
produced in bulk with numpy, and the scalar and vector paths agree
bit-for-bit on every platform.

Shuffling is Fisher-Yates from the last position down, drawing the swap
index as ``(u64 * (i + 1)) >> 64``.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix(z):
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    def __init__(self, seed=0):
        self.state = int(seed) & MASK64

    def next_u64(self):
        self.state = (self.state + GAMMA) & MASK64
        return _mix(self.state)

    def u64_array(self, n):
        n = int(n)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            out = _mix_array(z)
        self.state = (self.state + n * GAMMA) & MASK64
        return out

    def random(self, n):
        """``n`` doubles in ``[0, 1)`` built from the top 53 bits."""
        bits = self.u64_array(n) >> np.uint64(11)
        return bits.astype(np.float64) * (1.0 / (1 << 53))

    def uniform(self, low, high, size):
        size = tuple(np.atleast_1d(size))
        count = int(np.prod(size))
        return (low + (high - low) * self.random(count)).reshape(size)

    def below(self, bound):
        """Integer in ``[0, bound)``."""
        return (self.next_u64() * bound) >> 64

    def permutation(self, n):
        order = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            order[i], order[j] = order[j], order[i]
        return np.asarray(order, dtype=np.int64)

    def spawn(self):
        """Independent child generator seeded from this stream."""
        return SplitMix64(self.next_u64())
