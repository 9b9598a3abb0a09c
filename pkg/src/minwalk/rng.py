"""Counter-based random numbers keyed by ``(seed, stream, draw index)``.

Every uniform is a pure function of its three coordinates, so a replica's
stream does not depend on which worker runs it or in what order:

    key(seed, stream) = mix(mix(seed ^ SEED_SALT) + (stream + 1) * GOLDEN)
    uniform(key, i)   = (mix(key + mix(i ^ COUNTER_SALT)) >> 11) * 2**-53

``mix`` is the SplitMix64 finalizer, a bijection on 64-bit words. Uniforms
lie in ``[0, 1)`` on a 2**-53 grid. The pure-Python functions here are the
reference the numba kernels are tested against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SEED_SALT = 0x6A09E667F3BCC909
COUNTER_SALT = 0xBB67AE8584CAA73B
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
UNIT = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> int:
    return mix64(mix64((seed & MASK64) ^ SEED_SALT) + (stream + 1) * GOLDEN)


def counter_word(i: int) -> int:
    return mix64(i ^ COUNTER_SALT)


def uniform(key: int, i: int) -> float:
    return (mix64(key + counter_word(i)) >> 11) * UNIT


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream_id: int = 0

    @property
    def key(self) -> int:
        return stream_key(self.seed, self.stream_id)

    @property
    def fingerprint(self) -> str:
        return f"{self.key:016x}"

    def uniforms(self, count: int, start: int = 0) -> np.ndarray:
        return np.array([uniform(self.key, i) for i in range(start, start + count)])


def stream_keys(seed: int, streams) -> np.ndarray:
    """Vector of stream keys as ``uint64``."""
    return np.array([stream_key(seed, int(r)) for r in streams], dtype=np.uint64)


# numba versions; uint64 arithmetic wraps like the masked Python ints above
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_UM1 = np.uint64(_M1)
_UM2 = np.uint64(_M2)
_USALT = np.uint64(COUNTER_SALT)


@nb.njit(inline="always", cache=True)
def nb_mix64(z):
    z = (z ^ (z >> _U30)) * _UM1
    z = (z ^ (z >> _U27)) * _UM2
    return z ^ (z >> _U31)


@nb.njit(inline="always", cache=True)
def nb_counter_word(i):
    return nb_mix64(np.uint64(i) ^ _USALT)


@nb.njit(inline="always", cache=True)
def nb_uniform(key, word):
    return float(nb_mix64(key + word) >> _U11) * UNIT


@nb.njit(cache=True)
def nb_uniforms(key, start, count):
    out = np.empty(count)
    for j in range(count):
        out[j] = nb_uniform(key, nb_counter_word(start + j))
    return out
