"""
The three concrete 100-unique parameter sets.

========== ======== ======== ===== === ==== ===================
name        key bits |Φ|      |Ψ|    c   d    certified bound
========== ======== ======== ===== === ==== ===================
32-2        32       2^16     2^16   2   20   1.5e-42
64-3        64       2^22     2^22   3   24   1.4e-49
64-4-triple 64       2^16     2^32   4   14   9.0e-36
========== ======== ======== ===== === ==== ===================

The bound is the probability that the randomly filled first level is not 100-unique.
``64-4-triple`` hashes each 32-bit intermediate character with the ``32-2`` first level.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Final, Optional, Union

from ..bounds import BoundParams
from ..config import Settings
from ..errors import DomainError
from ..keyspace import KeyCodec
from .double import DEFAULT_RANGE_BITS, DoubleTabulation
from .triple import TripleTabulation

CLAIMED_UNIQUENESS: Final = 100


@dataclass(frozen=True)
class Preset:
    """A named first-level shape with its claimed uniqueness and failure bound."""

    name: str
    codec: KeyCodec
    out_char_bits: int
    out_char_count: int
    claimed_failure_bound: Decimal
    triple: bool = False
    claimed_uniqueness: int = CLAIMED_UNIQUENESS

    @property
    def key_bits(self) -> int:
        return self.codec.key_bits

    def bound_params(self, epsilon: Fraction = Fraction(1)) -> BoundParams:
        """Inputs of the certificate for this preset's first level."""
        return BoundParams(
            c=self.codec.char_count,
            d=self.out_char_count,
            phi_size=self.codec.alphabet_size,
            psi_size=1 << self.out_char_bits,
            k=self.claimed_uniqueness,
            epsilon=epsilon,
        )

    def build(
        self,
        seed: int,
        range_bits: int = DEFAULT_RANGE_BITS,
        settings: Optional[Settings] = None,
    ) -> Union[DoubleTabulation, TripleTabulation]:
        """
        Generate the scheme.

        Raises:
            ResourceError: If its tables exceed the memory budget (``64-3`` needs about
                1.7 GB and exceeds the default)
        """
        if self.triple:
            return TripleTabulation.new(seed, range_bits, settings)
        return DoubleTabulation.new(
            self.codec, self.out_char_count, self.out_char_bits, seed, range_bits, settings
        )


PRESETS: Final[dict[str, Preset]] = {
    p.name: p
    for p in (
        Preset("32-2", KeyCodec(16, 2), 16, 20, Decimal("1.5e-42")),
        Preset("64-3", KeyCodec(22, 3), 22, 24, Decimal("1.4e-49")),
        Preset("64-4-triple", KeyCodec(16, 4), 32, 14, Decimal("9.0e-36"), triple=True),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(
            f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}"
        ) from None


def triple_new(
    seed: int, range_bits: int = DEFAULT_RANGE_BITS, settings: Optional[Settings] = None
) -> TripleTabulation:
    """The ``64-4-triple`` evaluator."""
    return TripleTabulation.new(seed, range_bits, settings)
