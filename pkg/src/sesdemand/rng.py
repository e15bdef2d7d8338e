"""Counter-based random substreams.

Every random number is a pure function of a 64-bit stream key and a counter:
``uniform(key, c) = unit(mix64(key + (c + 1) * GOLDEN))``, i.e. the SplitMix64
sequence seeded with ``key``.  Child keys are derived with another mix, so a
path, replication or scenario can be regenerated from ``(master_seed, index)``
alone, regardless of how work is split across workers.

The same arithmetic is implemented three times: on Python ints (this module's
scalar API), on numpy ``uint64`` arrays (``*_array``) and inside the numba
kernels (:mod:`sesdemand._kernels`).  The test-suite pins them together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_UNIT = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def seed_key(seed: int) -> int:
    """Stream key for a user-facing integer seed (any Python int)."""
    return mix64(int(seed) & MASK64)


def derive(key: int, index: int) -> int:
    """Key of child substream ``index`` of ``key``."""
    return mix64((key + mix64((int(index) + 1) * GOLDEN)) & MASK64)


def uniform(key: int, counter: int) -> float:
    """The ``counter``-th uniform of stream ``key``, in the open interval (0, 1)."""
    z = mix64((key + (counter + 1) * GOLDEN) & MASK64)
    return ((z >> 11) + 0.5) * _UNIT


_GOLDEN_U = np.uint64(GOLDEN)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1_U
        z = (z ^ (z >> np.uint64(27))) * _M2_U
    return z ^ (z >> np.uint64(31))


def derive_array(keys: np.ndarray | int, index: np.ndarray | int) -> np.ndarray:
    index = np.asarray(index, dtype=np.uint64)
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(keys + mix64_array((index + np.uint64(1)) * _GOLDEN_U))


def uniform_array(keys: np.ndarray, counter: np.ndarray | int) -> np.ndarray:
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = mix64_array(np.asarray(keys, dtype=np.uint64) + (counter + np.uint64(1)) * _GOLDEN_U)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _UNIT


def child_keys(key: int, n: int, start: int = 0) -> np.ndarray:
    """Keys of children ``start .. start + n - 1`` as a ``uint64`` array."""
    return derive_array(np.uint64(key), np.arange(start, start + n, dtype=np.uint64))


@dataclass
class Stream:
    """A positioned random stream: a key plus the next counter to consume.

    Streams are cheap; ``spawn`` gives an independent child stream and does not
    advance the parent.
    """

    key: int
    counter: int = 0

    @classmethod
    def from_seed(cls, seed: int) -> Stream:
        return cls(seed_key(seed))

    def uniform(self) -> float:
        u = uniform(self.key, self.counter)
        self.counter += 1
        return u

    def uniforms(self, n: int) -> tuple[float, ...]:
        return tuple(self.uniform() for _ in range(n))

    def spawn(self, index: int) -> Stream:
        return Stream(derive(self.key, index))


def as_stream(rng: Stream | int | None) -> Stream:
    """Accept a :class:`Stream`, an integer seed, or ``None`` (seed 0)."""
    if isinstance(rng, Stream):
        return rng
    if rng is None:
        return Stream.from_seed(0)
    if isinstance(rng, (int, np.integer)):
        return Stream.from_seed(int(rng))
    raise TypeError(f"expected a Stream or an integer seed, got {type(rng).__name__}")
