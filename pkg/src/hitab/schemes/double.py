"""
Double tabulation: a simple tabulation ``h: Φ^c -> Ψ^d`` composed with an independent
simple tabulation ``r: Ψ^d -> R``.

If ``h`` is k-unique then ``r ∘ h`` is k-independent, and ``h`` can be kept as a universal
constant: a fresh ``r`` gives a fresh, independent k-independent function.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from ..bounds import integer_root
from ..config import Settings, get_settings
from ..errors import DomainError
from ..keyspace import KeyCodec
from ..rng import derive_seed_int
from ..tabulation import SimpleTabulation, TabulationParams
from .base import ComposedTabulation, generate_parts

logger = logging.getLogger(__name__)

DEFAULT_RANGE_BITS = 64


class DoubleTabulation(ComposedTabulation):
    """
    ``r ∘ h`` for a first level ``h`` and a second level ``r``.

    Examples:
        >>> dt = DoubleTabulation.new(KeyCodec(8, 2), d=4, out_bits=8, seed=7, range_bits=32)
        >>> dt.lookups_per_key
        6
        >>> dt.eval(0x1234) == dt.second.eval_chars(dt.first_chars(0x1234))
        True
    """

    def __init__(
        self, first: SimpleTabulation, second: SimpleTabulation, seed: int = 0
    ) -> None:
        fp, sp = first.params, second.params
        if (fp.out_char_bits, fp.out_char_count) != (sp.char_bits, sp.char_count):
            raise DomainError(
                f"first level outputs {fp.out_char_count} characters of {fp.out_char_bits} "
                f"bits, second level reads {sp.char_count} of {sp.char_bits}"
            )
        super().__init__((first,), second, seed)

    @classmethod
    def new(
        cls,
        codec: KeyCodec,
        d: int,
        out_bits: int,
        seed: int,
        range_bits: int = DEFAULT_RANGE_BITS,
        settings: Optional[Settings] = None,
    ) -> DoubleTabulation:
        """
        Generate both levels from sub-seeds derived from ``seed``.

        Args:
            codec: Key split of the first level (``c`` characters over ``Φ``)
            d: Number of intermediate characters
            out_bits: Bits per intermediate character (``Ψ = [2^out_bits]``)
            seed: Master seed
            range_bits: Width of the hash value (``R = [2^range_bits]``)

        Raises:
            DomainError: For incompatible parameters
            ResourceError: If the tables exceed the memory budget
        """
        first, second = generate_parts(
            [
                TabulationParams.for_codec(codec, out_bits, d),
                TabulationParams(out_bits, d, range_bits, 1),
            ],
            seed,
            f"double tabulation {codec.key_bits}-bit keys, d={d}",
            settings,
        )
        return cls(first, second, seed)

    @property
    def first(self) -> SimpleTabulation:
        return self.levels[0]

    @property
    def second(self) -> SimpleTabulation:
        return self.bottom

    @property
    def name(self) -> str:
        p = self.first.params
        return f"double-{self.key_bits}-{p.char_count}"

    def first_chars(self, key: int) -> list[int]:
        """The intermediate characters ``h(x)_0 .. h(x)_{d-1}``."""
        return list(self.intermediate_chars(key))

    def rekeyed(self, seed: int, settings: Optional[Settings] = None) -> DoubleTabulation:
        """
        Keep the first level and draw a new second level from ``seed``.

        The second level is seeded exactly as :meth:`new` would seed it under ``seed``.
        """
        params = self.second.params
        (settings or get_settings()).check_memory(params.table_bytes, "second level")
        second = SimpleTabulation.generate(params, derive_seed_int(seed, 1, 0), settings)
        logger.debug("rekeyed second level under seed %#x", seed)
        return type(self)(self.first, second, seed)


@dataclass(frozen=True)
class DoublePlan:
    """
    Parameters of the plain double tabulation construction for ``c``-character keys.

    The key is read as ``c' = 2^(ceil(lg c) + 1)`` characters over ``Φ``, the first level
    outputs ``d = 8c'`` characters over ``Φ``, and the uniqueness reached is
    ``|Φ|^(1/(5c'))``.
    """

    c: int
    key_bits: int
    padded_chars: int
    char_bits: int
    out_chars: int
    target_uniqueness: int

    @property
    def table_count(self) -> int:
        """``c' + d`` tables, which is also the lookup count."""
        return self.padded_chars + self.out_chars

    def build(
        self, seed: int, range_bits: int = DEFAULT_RANGE_BITS, settings: Optional[Settings] = None
    ) -> DoubleTabulation:
        return DoubleTabulation.new(
            KeyCodec(self.char_bits, self.padded_chars),
            self.out_chars,
            self.char_bits,
            seed,
            range_bits,
            settings,
        )


def double_plan(c: int, key_bits: int) -> DoublePlan:
    """
    Plan a double tabulation for ``key_bits``-bit keys viewed as ``c`` characters.

    Raises:
        DomainError: If ``c'`` does not divide ``key_bits``

    Examples:
        >>> p = double_plan(2, 64)
        >>> p.padded_chars, p.char_bits, p.out_chars, p.target_uniqueness
        (4, 16, 32, 1)
    """
    if c < 1:
        raise DomainError(f"c must be positive, got {c}")
    padded = 1 << ((c - 1).bit_length() + 1)
    if key_bits < padded or key_bits % padded:
        raise DomainError(f"{key_bits}-bit keys do not split into {padded} equal characters")
    char_bits = key_bits // padded
    return DoublePlan(
        c=c,
        key_bits=key_bits,
        padded_chars=padded,
        char_bits=char_bits,
        out_chars=8 * padded,
        target_uniqueness=integer_root(1 << char_bits, 5 * padded),
    )
