"""Deterministic random number streams shared by the walk and training engines.

The whole toolkit draws randomness from splitmix64 streams.  A stream is
keyed by up to three integers (seed, a, b), so independent pieces of work
(one walk, one training pass) own private streams whose output does not
depend on execution order or thread scheduling.

Two mirror implementations live here: a plain-Python ``SplitMix64`` class
for library surfaces and tests, and ``@njit`` helpers consumed by the hot
loops.  They produce identical output for identical keys; a test pins that.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 1/2**53, used to map the top 53 bits of a draw onto [0, 1)
_TO_DOUBLE = 1.1102230246251565e-16


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def stream_key(seed: int, a: int = 0, b: int = 0) -> int:
    """Fold (seed, a, b) into the initial state of an independent stream."""
    s = _mix((seed + _GAMMA) & _MASK64)
    s = _mix((s + _GAMMA + (a & _MASK64)) & _MASK64)
    s = _mix((s + _GAMMA + (b & _MASK64)) & _MASK64)
    return s


class SplitMix64:
    """Minimal splitmix64 generator; state is one 64-bit integer."""

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & _MASK64

    @classmethod
    def for_stream(cls, seed: int, a: int = 0, b: int = 0) -> "SplitMix64":
        return cls(stream_key(seed, a, b))

    def next_uint64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return _mix(self.state)

    def next_double(self) -> float:
        """Uniform draw in [0, 1) with 53 bits of precision."""
        return (self.next_uint64() >> 11) * _TO_DOUBLE

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) for bound < 2**32 (Lemire reduction)."""
        x = self.next_uint64() >> 32
        return (x * bound) >> 32


# ---------------------------------------------------------------------------
# numba mirrors; all operate on / return uint64 state words


@njit(cache=True, nogil=True, inline="always")
def nb_mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def nb_stream_key(seed, a, b):
    g = np.uint64(_GAMMA)
    s = nb_mix(np.uint64(seed) + g)
    s = nb_mix(s + g + np.uint64(a))
    s = nb_mix(s + g + np.uint64(b))
    return s


@njit(cache=True, nogil=True, inline="always")
def nb_next(state):
    """Advance the stream; returns (new_state, raw uint64 draw)."""
    state = state + np.uint64(_GAMMA)
    return state, nb_mix(state)


@njit(cache=True, nogil=True, inline="always")
def nb_next_double(state):
    state, z = nb_next(state)
    return state, np.float64(z >> np.uint64(11)) * _TO_DOUBLE


@njit(cache=True, nogil=True, inline="always")
def nb_next_below(state, bound):
    state, z = nb_next(state)
    x = z >> np.uint64(32)
    return state, np.int64((x * np.uint64(bound)) >> np.uint64(32))
