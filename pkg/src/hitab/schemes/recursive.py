"""
Recursive tabulation.

A key of ``w`` bits is read as ``c' = 2^ℓ`` characters, ``ℓ = ceil(lg c) + 1``. Level ``i``
is one simple tabulation, shared by all its invocations, from ``[2^(w/2^i)]`` viewed as
``c_i = c'/2^i`` characters of ``w/c'`` bits to ``d_i = 12 c_i`` characters of
``w/2^(i+1)`` bits. Each output character of level ``i`` is the input of level ``i+1``; the
last level outputs characters of ``w/c'`` bits, ``D = d_0 d_1 ... d_(ℓ-1)`` of them, which
a final simple tabulation maps to the hash value.

The padding from ``c`` to ``c'`` is applied even when ``c`` is already a power of two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..bounds import BoundParams, integer_root
from ..config import Settings
from ..errors import DomainError
from ..keyspace import MAX_KEY_BITS
from ..tabulation import SimpleTabulation, TabulationParams
from .base import ComposedTabulation, generate_parts
from .double import DEFAULT_RANGE_BITS

OUTPUT_FACTOR = 12


@dataclass(frozen=True)
class RecursivePlan:
    """
    Shape of a recursive tabulation for ``c``-character, ``key_bits``-bit keys.

    Examples:
        >>> plan = recursive_plan(3, 64)
        >>> plan.levels, plan.padded_chars, plan.level_inputs, plan.level_outputs
        (3, 8, (8, 4, 2), (96, 48, 24))
        >>> plan.bottom_table_count
        110592
    """

    c: int
    key_bits: int
    levels: int
    padded_chars: int
    level_inputs: tuple[int, ...]
    level_outputs: tuple[int, ...]
    target_uniqueness: int

    @property
    def char_bits(self) -> int:
        """Bits of every input character, ``w / c'``."""
        return self.key_bits // self.padded_chars

    @property
    def bottom_table_count(self) -> int:
        """``D``, the product of the per-level output counts."""
        return math.prod(self.level_outputs)

    def level_out_bits(self, i: int) -> int:
        """Bits of level ``i``'s output characters, ``w / 2^(i+1)``."""
        return self.key_bits >> (i + 1)

    def level_invocations(self, i: int) -> int:
        return math.prod(self.level_outputs[:i])

    def level_params(self) -> list[TabulationParams]:
        return [
            TabulationParams(self.char_bits, c_i, self.level_out_bits(i), d_i)
            for i, (c_i, d_i) in enumerate(zip(self.level_inputs, self.level_outputs))
        ]

    def bottom_params(self, range_bits: int = DEFAULT_RANGE_BITS) -> TabulationParams:
        return TabulationParams(self.char_bits, self.bottom_table_count, range_bits, 1)

    @property
    def lookups_per_key(self) -> int:
        return (
            sum(self.level_invocations(i) * c_i for i, c_i in enumerate(self.level_inputs))
            + self.bottom_table_count
        )

    def table_bytes(self, range_bits: int = DEFAULT_RANGE_BITS) -> int:
        return sum(p.table_bytes for p in self.level_params()) + self.bottom_params(
            range_bits
        ).table_bytes

    def bound_params(
        self, k: Optional[int] = None, epsilon: Fraction = Fraction(1)
    ) -> list[BoundParams]:
        """
        Certificate inputs for each level: ``c_i`` characters over ``[2^(w/c')]`` to ``d_i``
        characters over ``[2^(w/2^(i+1))]``, all at uniqueness ``k`` (default the plan's).
        """
        target = self.target_uniqueness if k is None else k
        return [
            BoundParams(
                c=c_i,
                d=d_i,
                phi_size=1 << self.char_bits,
                psi_size=1 << self.level_out_bits(i),
                k=target,
                epsilon=epsilon,
            )
            for i, (c_i, d_i) in enumerate(zip(self.level_inputs, self.level_outputs))
        ]


def recursive_plan(c: int, key_bits: int) -> RecursivePlan:
    """
    Plan the recursion for keys of ``key_bits`` bits viewed as ``c`` characters.

    Raises:
        DomainError: If ``c`` is not positive, the key is wider than a word, or ``key_bits``
            is not a multiple of ``c'``

    Examples:
        >>> recursive_plan(1, 16).level_outputs
        (24,)
    """
    if c < 1:
        raise DomainError(f"c must be positive, got {c}")
    if not 1 <= key_bits <= MAX_KEY_BITS:
        raise DomainError(f"key_bits must lie in [1, {MAX_KEY_BITS}], got {key_bits}")
    levels = (c - 1).bit_length() + 1
    padded = 1 << levels
    if key_bits % padded:
        raise DomainError(
            f"{key_bits}-bit keys do not split into {padded} characters of a power-of-two "
            f"alphabet"
        )
    inputs = tuple(padded >> i for i in range(levels))
    return RecursivePlan(
        c=c,
        key_bits=key_bits,
        levels=levels,
        padded_chars=padded,
        level_inputs=inputs,
        level_outputs=tuple(OUTPUT_FACTOR * c_i for c_i in inputs),
        target_uniqueness=integer_root(1 << key_bits, 10 * padded),
    )


class RecursiveTabulation(ComposedTabulation):
    """The recursive evaluator for a :class:`RecursivePlan`."""

    def __init__(
        self,
        plan: RecursivePlan,
        level_functions: list[SimpleTabulation],
        bottom: SimpleTabulation,
        seed: int = 0,
    ) -> None:
        if [f.params for f in level_functions] != plan.level_params():
            raise DomainError("level functions do not match the plan")
        if bottom.params.char_count != plan.bottom_table_count:
            raise DomainError(
                f"bottom function reads {bottom.params.char_count} characters, plan needs "
                f"{plan.bottom_table_count}"
            )
        super().__init__(level_functions, bottom, seed)
        self.plan = plan

    @classmethod
    def new(
        cls,
        plan: RecursivePlan,
        seed: int,
        range_bits: int = DEFAULT_RANGE_BITS,
        settings: Optional[Settings] = None,
    ) -> RecursiveTabulation:
        """
        Generate every level and the bottom function from sub-seeds of ``seed``.

        Raises:
            ResourceError: If the plan's tables exceed the memory budget
        """
        parts = generate_parts(
            [*plan.level_params(), plan.bottom_params(range_bits)],
            seed,
            f"recursive tabulation c={plan.c}, {plan.key_bits}-bit keys",
            settings,
        )
        return cls(plan, parts[:-1], parts[-1], seed)

    @property
    def name(self) -> str:
        return f"recursive-{self.plan.c}-{self.plan.key_bits}"
