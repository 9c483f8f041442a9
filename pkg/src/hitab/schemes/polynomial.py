"""
The polynomial baseline: ``h(x) = ((a_(k-1) x^(k-1) + ... + a_0) mod p) mod 2^r`` with the
Mersenne prime ``p = 2^61 - 1``.

Reduction modulo ``p`` folds the bits above position 61 back onto the low bits, since
``2^61 ≡ 1 (mod p)``. The vectorised path multiplies 61-bit residues with 32-bit limbs so
every partial product fits a ``uint64``.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any, Final

import numpy as np
import numpy.typing as npt

from ..errors import DomainError
from ..rng import counter_word, derive_seed_int

MERSENNE_EXPONENT: Final = 61
PRIME: Final = (1 << MERSENNE_EXPONENT) - 1
MAX_RANGE_BITS: Final = 64
COEFFICIENT_ROLE: Final = 7

_P64: Final = np.uint64(PRIME)
_LOW32: Final = np.uint64(0xFFFFFFFF)
_LOW29: Final = np.uint64((1 << 29) - 1)


def mod_mersenne(x: int) -> int:
    """``x mod (2^61 - 1)`` for a non-negative int, by folding."""
    while x >> 62:
        x = (x & PRIME) + (x >> MERSENNE_EXPONENT)
    x = (x & PRIME) + (x >> MERSENNE_EXPONENT)
    return x - PRIME if x >= PRIME else x


def _fold(x: npt.NDArray[np.uint64]) -> npt.NDArray[np.uint64]:
    x = (x & _P64) + (x >> np.uint64(MERSENNE_EXPONENT))
    return np.where(x >= _P64, x - _P64, x)


def mulmod_many(a: npt.NDArray[np.uint64], x: npt.NDArray[np.uint64]) -> npt.NDArray[np.uint64]:
    """Elementwise ``a * x mod p`` for residues below ``p``."""
    a_hi, a_lo = a >> np.uint64(32), a & _LOW32
    x_hi, x_lo = x >> np.uint64(32), x & _LOW32
    high = a_hi * x_hi  # weight 2^64 = 8 (mod p)
    mid = a_hi * x_lo + a_lo * x_hi  # weight 2^32
    low = a_lo * x_lo
    low = (low & _P64) + (low >> np.uint64(MERSENNE_EXPONENT))
    mid_part = (mid >> np.uint64(29)) + ((mid & _LOW29) << np.uint64(32))
    return _fold(_fold((high << np.uint64(3)) + mid_part + low))


class PolynomialHash:
    """
    Degree ``k-1`` polynomial over ``GF(2^61 - 1)``, truncated to ``range_bits`` bits.

    ``coefficients[i]`` multiplies ``x^i``.

    Examples:
        >>> PolynomialHash([5, 7, 11], range_bits=61).eval(3)
        125
    """

    def __init__(self, coefficients: Sequence[int], range_bits: int = 64, seed: int = 0) -> None:
        if not coefficients:
            raise DomainError("a polynomial hash needs at least one coefficient")
        for a in coefficients:
            if not 0 <= a < PRIME:
                raise DomainError(f"coefficient {a} outside [0, 2^61 - 1)")
        if not 1 <= range_bits <= MAX_RANGE_BITS:
            raise DomainError(f"range_bits must lie in [1, {MAX_RANGE_BITS}], got {range_bits}")
        self.coefficients = tuple(int(a) for a in coefficients)
        self._range_bits = range_bits
        self.seed = seed

    @classmethod
    def new(cls, k: int, seed: int, range_bits: int = 64) -> PolynomialHash:
        """
        Draw ``k`` coefficients uniformly from ``[p]``.

        Coefficients are the top 61 bits of successive generator words keyed by a sub-seed
        of ``seed``; the one value equal to ``p`` is rejected.
        """
        if k < 1:
            raise DomainError(f"k must be positive, got {k}")
        key = derive_seed_int(seed, 0, COEFFICIENT_ROLE)
        coefficients: list[int] = []
        counter = 0
        while len(coefficients) < k:
            words = counter_word(key, np.arange(counter, counter + k, dtype=np.uint64))
            counter += k
            for word in words >> np.uint64(64 - MERSENNE_EXPONENT):
                if int(word) < PRIME and len(coefficients) < k:
                    coefficients.append(int(word))
        return cls(coefficients, range_bits, seed)

    @property
    def k(self) -> int:
        return len(self.coefficients)

    @property
    def name(self) -> str:
        return f"poly-{self.k}"

    @property
    def key_bits(self) -> int:
        return MERSENNE_EXPONENT

    @property
    def range_bits(self) -> int:
        return self._range_bits

    @property
    def lookups_per_key(self) -> int:
        return 0

    @property
    def range_mask(self) -> int:
        return (1 << self._range_bits) - 1

    def eval(self, key: int) -> int:
        """
        Horner evaluation modulo ``p``, then the low ``range_bits`` bits.

        Raises:
            DomainError: If ``key >= p``
        """
        if not 0 <= key < PRIME:
            raise DomainError(f"key {key:#x} outside [0, 2^61 - 1)")
        acc = self.coefficients[-1]
        for a in reversed(self.coefficients[:-1]):
            acc = mod_mersenne(acc * key + a)
        return acc & self.range_mask

    def eval_many(self, keys: npt.NDArray[Any]) -> npt.NDArray[np.uint64]:
        x = np.asarray(keys).astype(np.uint64).reshape(-1)
        if x.size and int(x.max()) >= PRIME:
            raise DomainError("a key is not below 2^61 - 1")
        acc = np.full(x.shape, self.coefficients[-1], dtype=np.uint64)
        for a in reversed(self.coefficients[:-1]):
            acc = mulmod_many(acc, x) + np.uint64(a)
            acc = np.where(acc >= _P64, acc - _P64, acc)
        if self._range_bits < MAX_RANGE_BITS:
            acc &= np.uint64(self.range_mask)
        return acc

    def to_bytes(self) -> bytes:
        from .container import dump_scheme

        return dump_scheme(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolynomialHash):
            return NotImplemented
        return (self.coefficients, self._range_bits) == (other.coefficients, other._range_bits)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"PolynomialHash(k={self.k}, range_bits={self._range_bits}, seed={self.seed:#x})"
