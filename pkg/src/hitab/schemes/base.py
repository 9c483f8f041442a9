"""
The evaluator protocol shared by every scheme, and the composed-tabulation engine.

A composed tabulation is a chain of simple tabulation *levels* followed by a *bottom*
function. Level 0 maps the key to ``d_0`` intermediate characters; each intermediate
character of level ``i`` is in turn the input of the shared level ``i+1`` function; the
characters produced by the last level, ``D = d_0 * d_1 * ...`` of them in first-level-major
order, are the input vector of the bottom function, whose single output character is the
hash value. Double, triple and recursive tabulation are all instances.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from typing import Any, Optional, Protocol, runtime_checkable

import numpy as np
import numpy.typing as npt

from ..config import Settings, get_settings
from ..errors import DomainError
from ..keyspace import MAX_KEY_BITS
from ..rng import derive_seed_int
from ..tabulation import (
    SimpleTabulation,
    TabulationParams,
    output_chars,
    record_lookups,
    unpack_chars,
    words_to_int,
)

logger = logging.getLogger(__name__)


@runtime_checkable
class HashScheme(Protocol):
    """What the CLI, the benchmark and the statistical harness need from a scheme."""

    @property
    def name(self) -> str: ...

    @property
    def key_bits(self) -> int: ...

    @property
    def range_bits(self) -> int: ...

    @property
    def lookups_per_key(self) -> int: ...

    def eval(self, key: int) -> int: ...

    def eval_many(self, keys: npt.NDArray[Any]) -> npt.NDArray[np.uint64]: ...

    def to_bytes(self) -> bytes: ...


def generate_parts(
    plan: Sequence[TabulationParams],
    seed: int,
    what: str,
    settings: Optional[Settings] = None,
) -> list[SimpleTabulation]:
    """
    Generate one simple tabulation per entry of ``plan`` from derived sub-seeds.

    Part ``i`` is seeded with ``derive_seed(seed, level=i, role=0)``. The memory budget is
    checked against the sum of all parts before anything is allocated.
    """
    settings = settings or get_settings()
    settings.check_memory(sum(p.table_bytes for p in plan), what)
    parts = []
    for level, params in enumerate(plan):
        sub_seed = derive_seed_int(seed, level, 0)
        logger.debug("%s level %d: sub-seed %#x", what, level, sub_seed)
        parts.append(SimpleTabulation.generate(params, sub_seed, settings))
    return parts


class ComposedTabulation:
    """
    Levels of simple tabulation feeding a bottom simple tabulation.

    Raises:
        DomainError: If adjacent parts do not fit together
    """

    def __init__(
        self, levels: Sequence[SimpleTabulation], bottom: SimpleTabulation, seed: int = 0
    ) -> None:
        if not levels:
            raise DomainError("a composed tabulation needs at least one level")
        self.levels = tuple(levels)
        self.bottom = bottom
        self.seed = seed
        self._check_shapes()

    def _check_shapes(self) -> None:
        for i, (upper, lower) in enumerate(zip(self.levels, self.levels[1:])):
            if upper.params.out_char_bits != lower.params.in_bits:
                raise DomainError(
                    f"level {i} outputs {upper.params.out_char_bits}-bit characters but level "
                    f"{i + 1} takes {lower.params.in_bits}-bit inputs"
                )
        last = self.levels[-1].params
        if last.out_char_bits != self.bottom.params.char_bits:
            raise DomainError(
                f"last level outputs {last.out_char_bits}-bit characters but the bottom "
                f"function takes {self.bottom.params.char_bits}-bit characters"
            )
        if self.bottom.params.char_count != self.bottom_char_count:
            raise DomainError(
                f"bottom function takes {self.bottom.params.char_count} characters, levels "
                f"produce {self.bottom_char_count}"
            )
        if self.bottom.params.out_char_count != 1:
            raise DomainError("the bottom function must output a single character")
        for i, level in enumerate(self.levels):
            p = level.params
            if (p.char_count - 1) * p.char_bits >= MAX_KEY_BITS:
                raise DomainError(f"level {i} input of {p.in_bits} bits is wider than a key")

    @property
    def bottom_char_count(self) -> int:
        """``D``, the number of characters the bottom function reads."""
        return math.prod(level.params.out_char_count for level in self.levels)

    @property
    def name(self) -> str:
        return f"composed-{self.key_bits}-{len(self.levels)}"

    @property
    def key_bits(self) -> int:
        return self.levels[0].params.input_codec.key_bits

    @property
    def range_bits(self) -> int:
        return self.bottom.params.out_bits

    @property
    def lookups_per_key(self) -> int:
        """Table lookups of one evaluation: every level invocation plus ``D`` at the bottom."""
        total, invocations = 0, 1
        for level in self.levels:
            total += invocations * level.params.char_count
            invocations *= level.params.out_char_count
        return total + self.bottom.params.char_count

    def intermediate_chars(self, key: int) -> Iterator[int]:
        """The ``D`` bottom-level characters of ``key``, produced depth-first."""
        self.levels[0].params.input_codec.check_key(key)
        yield from self._descend(0, key)

    def _descend(self, depth: int, value: int) -> Iterator[int]:
        level = self.levels[depth].params
        packed = self.levels[depth].eval(value)
        chars = output_chars(packed, level.out_char_bits, level.out_char_count)
        if depth + 1 == len(self.levels):
            yield from chars
        else:
            for ch in chars:
                yield from self._descend(depth + 1, ch)

    def eval(self, key: int) -> int:
        """Depth-first evaluation, XORing bottom entries as the characters appear."""
        acc = np.zeros(self.bottom.params.words, dtype=np.uint64)
        tables = self.bottom.tables
        for position, ch in enumerate(self.intermediate_chars(key)):
            acc ^= tables[position, ch]
        record_lookups(self.bottom.params.char_count)
        return words_to_int(acc)

    def expand_many(self, keys: npt.NDArray[Any]) -> npt.NDArray[np.uint64]:
        """Breadth-first expansion of ``n`` keys into an ``(n, D)`` character matrix."""
        first = self.levels[0]
        chars = first.params.input_codec.split_many(keys)
        n = len(chars)
        for depth, level in enumerate(self.levels):
            p = level.params
            if depth:
                chars = p.input_codec.split_many(chars.reshape(-1))
            words = level.eval_chars_many(chars)
            chars = unpack_chars(words, p.out_char_bits, p.out_char_count)
        return chars.reshape(n, -1)

    def chunk_size(self, settings: Optional[Settings] = None) -> int:
        batch = (settings or get_settings()).batch_size
        return max(1, (batch * 64) // self.bottom_char_count)

    def eval_many(self, keys: npt.NDArray[Any]) -> npt.NDArray[np.uint64]:
        """Hash values of many keys (ranges of at most 64 bits), in bounded-memory chunks."""
        if self.bottom.params.words != 1:
            raise DomainError(f"{self.range_bits}-bit hash values do not fit a uint64 vector")
        keys = np.asarray(keys).reshape(-1)
        step = self.chunk_size()
        out = np.empty(len(keys), dtype=np.uint64)
        for start in range(0, len(keys), step):
            block = self.expand_many(keys[start : start + step])
            out[start : start + step] = self.bottom.eval_chars_many(block)[:, 0]
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComposedTabulation):
            return NotImplemented
        return type(self) is type(other) and self.levels == other.levels and (
            self.bottom == other.bottom
        )

    def to_bytes(self) -> bytes:
        from .container import dump_scheme

        return dump_scheme(self)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        shapes = " -> ".join(
            f"[2^{lv.params.char_bits}]^{lv.params.char_count}" for lv in self.levels
        )
        return f"{type(self).__name__}({shapes} -> R=[2^{self.range_bits}])"
