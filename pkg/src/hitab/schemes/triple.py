"""
Triple tabulation for 64-bit keys.

The first level maps ``[2^16]^4`` to fourteen 32-bit characters. Each of those is hashed by
one shared 32-bit double tabulation first level, ``[2^16]^2 -> [2^16]^20``, and the
resulting ``14 * 20 = 280`` characters over ``[2^16]`` go through a final simple tabulation
into ``R``. A key costs ``4 + 14*2 + 280 = 312`` lookups.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Final, Optional

from ..config import Settings
from ..errors import DomainError
from ..tabulation import SimpleTabulation, TabulationParams
from .base import ComposedTabulation, generate_parts
from .double import DEFAULT_RANGE_BITS

OUTER: Final = TabulationParams(16, 4, 32, 14)
INNER: Final = TabulationParams(16, 2, 16, 20)


class TripleTabulation(ComposedTabulation):
    """Two shared levels and a 280-character bottom function."""

    def __init__(
        self, levels: Sequence[SimpleTabulation], bottom: SimpleTabulation, seed: int = 0
    ) -> None:
        shapes = [level.params for level in levels]
        if shapes != [OUTER, INNER]:
            raise DomainError(f"triple tabulation levels must be {OUTER} and {INNER}, got {shapes}")
        super().__init__(levels, bottom, seed)

    @classmethod
    def new(
        cls,
        seed: int,
        range_bits: int = DEFAULT_RANGE_BITS,
        settings: Optional[Settings] = None,
    ) -> TripleTabulation:
        bottom = TabulationParams(
            INNER.out_char_bits, OUTER.out_char_count * INNER.out_char_count, range_bits, 1
        )
        outer, inner, final = generate_parts(
            [OUTER, INNER, bottom], seed, "triple tabulation 64-bit keys", settings
        )
        return cls((outer, inner), final, seed)

    @property
    def name(self) -> str:
        return "triple-64"
