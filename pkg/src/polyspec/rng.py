"""Counter-based random streams.

Every draw is a pure function of ``(key, counter)``: the key is derived
from a user seed plus a path of integers (trial index, purpose tag, ...)
and the counter is the position inside the stream.  This makes
trajectories reproducible bit-exactly from ``(seed, trial)`` no matter
how the trials are batched, and lets many streams be advanced in one
vectorised call.

The mixing function is the SplitMix64 finaliser applied twice.
"""
from __future__ import annotations

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / float(1 << 53)


def _mix(x):
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> _S30)) * _M1
        x = (x ^ (x >> _S27)) * _M2
        return x ^ (x >> _S31)


def derive_key(seed: int, *path: int) -> np.uint64:
    k = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
    for p in path:
        with np.errstate(over="ignore"):
            k = _mix(k ^ _mix(np.uint64(p & 0xFFFFFFFFFFFFFFFF) + _GOLDEN))
    return np.uint64(k)


def derive_keys(seed: int, *path: int, last) -> np.ndarray:
    """Vectorised ``derive_key(seed, *path, x)`` for every x in ``last``."""
    k = derive_key(seed, *path)
    last = np.asarray(last, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        return _mix(k ^ _mix(last + _GOLDEN))


def uniform_at(keys, counters) -> np.ndarray:
    """Uniform doubles in [0, 1) for broadcast arrays of keys and counters."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = _mix(_mix(keys ^ (counters * _GOLDEN)) + counters)
    return (x >> _S11).astype(np.float64) * _INV53


def normal_at(keys, counters) -> np.ndarray:
    """Standard normals via Box-Muller; consumes counters 2c and 2c+1."""
    counters = np.asarray(counters, dtype=np.uint64)
    u1 = uniform_at(keys, counters * np.uint64(2))
    u2 = uniform_at(keys, counters * np.uint64(2) + np.uint64(1))
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


class Stream:
    """A sequential view over one counter-based stream."""

    def __init__(self, seed: int, *path: int):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self.key = derive_key(self.seed, *self.path)
        self.counter = 0

    def split(self, *path: int) -> "Stream":
        return Stream(self.seed, *self.path, *path)

    def _take(self, n: int) -> np.ndarray:
        c = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return c

    def uniform(self, shape=()) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64)) if shape != () else 1
        u = uniform_at(self.key, self._take(n))
        return u.reshape(shape) if shape != () else float(u[0])

    def normal(self, shape=()) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64)) if shape != () else 1
        z = normal_at(self.key, self._take(n))
        return z.reshape(shape) if shape != () else float(z[0])

    def exponential(self, shape=()) -> np.ndarray:
        u = self.uniform(shape)
        return -np.log1p(-np.asarray(u))

    def unit_vectors(self, n: int, d: int) -> np.ndarray:
        g = self.normal((n, d))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
