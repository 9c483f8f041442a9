"""
Counter-based deterministic generator used to fill character tables.

The generator is SplitMix64 run in counter mode: output number ``n`` of the stream keyed
by ``key`` is ``mix64(key + (n + 1) * GAMMA)`` modulo 2^64. Any output can therefore be
computed directly from ``(key, n)`` without replaying the stream, which is what lets
table entries be addressed by (seed, table index, entry index) and evaluated for whole
vectors of seeds at once.

All arithmetic is on numpy ``uint64`` arrays, whose multiplication wraps modulo 2^64,
so results are bit-identical on every platform. DO NOT CHANGE the constants: they are
part of the serialized format through the generator id.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Final, Union

import numpy as np
import numpy.typing as npt

from .errors import DomainError

U64 = npt.NDArray[np.uint64]
WordLike = Union[int, U64]

MASK64: Final = (1 << 64) - 1

GAMMA: Final = np.uint64(0x9E3779B97F4A7C15)
_MIX1: Final = np.uint64(0xBF58476D1CE4E5B9)
_MIX2: Final = np.uint64(0x94D049BB133111EB)
_S30: Final = np.uint64(30)
_S27: Final = np.uint64(27)
_S31: Final = np.uint64(31)
_ONE: Final = np.uint64(1)


class GeneratorId(IntEnum):
    """Identifiers recorded in the table container's generator byte."""

    EXPLICIT = 0
    SPLITMIX64_CTR_V1 = 1


CURRENT_GENERATOR: Final = GeneratorId.SPLITMIX64_CTR_V1

# Domain-separation tags for derived seeds; the role values are stable on disk.
_DERIVE_TAG: Final = 0x6869746162_000001  # "hitab" + generator 1


def as_u64(values: WordLike) -> U64:
    """Coerce a Python int or integer array to a ``uint64`` array of at least one dimension."""
    if isinstance(values, np.ndarray):
        return np.ascontiguousarray(values, dtype=np.uint64)
    if not 0 <= values <= MASK64:
        raise DomainError(f"{values} does not fit in 64 bits")
    return np.array([values], dtype=np.uint64)


def mix64(z: U64) -> U64:
    """The SplitMix64 output finalizer, applied elementwise."""
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def counter_word(key: WordLike, counter: WordLike) -> U64:
    """
    Output number ``counter`` of the SplitMix64 stream whose state starts at ``key``.

    ``key`` and ``counter`` broadcast against each other.

    Examples:
        >>> hex(int(counter_word(0, 0)[0]))
        '0xe220a8397b1dcdaf'
    """
    k = as_u64(key)
    n = as_u64(counter)
    return mix64(k + (n + _ONE) * GAMMA)


def table_key(seed: WordLike, table: int) -> U64:
    """Stream key of character table ``table`` under ``seed``."""
    return counter_word(seed, table)


def derive_seed(master: WordLike, level: int, role: int) -> U64:
    """
    Sub-seed for one component of a composed scheme.

    The derivation hashes (master, level, role) through two counter steps under a tag
    that names the generator, so components of one scheme get independent tables while
    the whole scheme stays reproducible from the master seed.
    """
    tagged = as_u64(master) ^ np.uint64(_DERIVE_TAG)
    return counter_word(counter_word(tagged, level), role)


def derive_seed_int(master: int, level: int, role: int) -> int:
    """Scalar convenience wrapper around :func:`derive_seed`."""
    return int(derive_seed(master, level, role)[0])


def trial_seeds(master: int, count: int) -> U64:
    """The first ``count`` outputs of the stream keyed by ``master``; used as trial seeds."""
    return counter_word(master, np.arange(count, dtype=np.uint64))
