"""
Keys as character vectors and as sets of position characters.

A ``w``-bit key is read as ``c`` characters of ``b`` bits each. Character 0 is the
least-significant ``b`` bits, so extraction is a mask and a shift and serialized functions
stay portable. The same key can also be viewed as the set ``{(i, x_i) : i < c}`` of
position characters, which is the view the set extension of a tabulation function and the
symmetric difference of two keys are defined on.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
import numpy.typing as npt

from .errors import DomainError

MAX_KEY_BITS = 64


@dataclass(frozen=True, order=True)
class KeyCodec:
    """
    How a key splits into ``char_count`` characters of ``char_bits`` bits.

    The top character may be partial: a 64-bit key read as three 22-bit characters has a
    20-bit top character.

    Examples:
        >>> codec = KeyCodec(char_bits=16, char_count=2)
        >>> codec.key_bits, codec.alphabet_size
        (32, 65536)
        >>> [hex(x) for x in codec.split(0xABCD1234)]
        ['0x1234', '0xabcd']
    """

    char_bits: int
    char_count: int

    def __post_init__(self) -> None:
        if self.char_bits < 1 or self.char_count < 1:
            raise DomainError(
                f"char_bits and char_count must be positive, got {self.char_bits}, "
                f"{self.char_count}"
            )
        if self.char_bits > MAX_KEY_BITS or (self.char_count - 1) * self.char_bits >= MAX_KEY_BITS:
            raise DomainError(
                f"{self.char_count} characters of {self.char_bits} bits exceed "
                f"{MAX_KEY_BITS}-bit keys"
            )

    @property
    def key_bits(self) -> int:
        return min(self.char_bits * self.char_count, MAX_KEY_BITS)

    @property
    def alphabet_size(self) -> int:
        """|Φ| = 2^char_bits."""
        return 1 << self.char_bits

    @property
    def universe_size(self) -> int:
        """u = |Φ|^c."""
        return 1 << self.key_bits

    @property
    def char_mask(self) -> int:
        return self.alphabet_size - 1

    def check_key(self, key: int) -> None:
        if not 0 <= key < self.universe_size:
            raise DomainError(f"key {key:#x} does not fit in {self.key_bits} bits")

    def check_char(self, position: int, character: int) -> None:
        if not 0 <= position < self.char_count:
            raise DomainError(f"position {position} outside [0, {self.char_count})")
        if not 0 <= character < self.alphabet_size:
            raise DomainError(
                f"character {character} at position {position} outside "
                f"[0, {self.alphabet_size})"
            )

    def split(self, key: int) -> tuple[int, ...]:
        """Characters of ``key``, least-significant first."""
        self.check_key(key)
        b, mask = self.char_bits, self.char_mask
        return tuple((key >> (i * b)) & mask for i in range(self.char_count))

    def join(self, chars: Sequence[int]) -> int:
        """Inverse of :meth:`split`."""
        if len(chars) != self.char_count:
            raise DomainError(f"expected {self.char_count} characters, got {len(chars)}")
        key = 0
        for i, ch in enumerate(chars):
            self.check_char(i, ch)
            key |= ch << (i * self.char_bits)
        self.check_key(key)
        return key

    def split_many(self, keys: npt.NDArray[Any]) -> npt.NDArray[np.uint64]:
        """
        Vectorised :meth:`split`: an ``(n, c)`` array of characters.

        Raises:
            DomainError: If any key is negative or wider than ``key_bits``
        """
        arr = np.asarray(keys)
        if arr.dtype.kind not in "ui":
            raise DomainError(f"keys must be an integer array, got dtype {arr.dtype}")
        if arr.dtype.kind == "i" and arr.size and int(arr.min()) < 0:
            raise DomainError("keys must be non-negative")
        words = arr.astype(np.uint64).reshape(-1)
        if self.key_bits < MAX_KEY_BITS and words.size:
            if int(words.max()) >= self.universe_size:
                raise DomainError(f"a key does not fit in {self.key_bits} bits")
        shifts = np.arange(self.char_count, dtype=np.uint64) * np.uint64(self.char_bits)
        mask = np.uint64(self.char_mask)
        return (words[:, None] >> shifts[None, :]) & mask

    def to_set(self, key: int) -> PositionCharSet:
        """The position-character set ``{(i, x_i)}`` of ``key``."""
        return PositionCharSet(
            (PositionChar(i, ch) for i, ch in enumerate(self.split(key))), codec=self
        )


@dataclass(frozen=True, order=True)
class PositionChar:
    """A (position, character) pair."""

    position: int
    character: int

    def __post_init__(self) -> None:
        if self.position < 0 or self.character < 0:
            raise DomainError(f"negative position character {self!r}")


class PositionCharSet:
    """
    An immutable set of position characters, optionally tied to a codec.

    ``x ^ y`` is the symmetric difference. Iteration is in (position, character) order.

    Examples:
        >>> codec = KeyCodec(char_bits=4, char_count=2)
        >>> diff = codec.to_set(0x75) ^ codec.to_set(0x95)
        >>> sorted((pc.position, pc.character) for pc in diff)
        [(1, 7), (1, 9)]
    """

    __slots__ = ("_members", "_codec")

    def __init__(
        self, members: Iterable[PositionChar] = (), codec: Optional[KeyCodec] = None
    ) -> None:
        self._members = frozenset(members)
        self._codec = codec
        if codec is not None:
            for pc in self._members:
                codec.check_char(pc.position, pc.character)

    @property
    def codec(self) -> Optional[KeyCodec]:
        return self._codec

    @property
    def members(self) -> frozenset[PositionChar]:
        return self._members

    def positions(self) -> dict[int, list[int]]:
        """Characters present at each position, sorted."""
        by_pos: dict[int, list[int]] = {}
        for pc in sorted(self._members):
            by_pos.setdefault(pc.position, []).append(pc.character)
        return by_pos

    def is_key(self) -> bool:
        """True iff the set has exactly one member per position of its codec."""
        if self._codec is None:
            return False
        counts = self.positions()
        return len(counts) == self._codec.char_count and all(
            len(chars) == 1 for chars in counts.values()
        )

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self) -> Iterator[PositionChar]:
        return iter(sorted(self._members))

    def __contains__(self, item: object) -> bool:
        return item in self._members

    def __bool__(self) -> bool:
        return bool(self._members)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PositionCharSet):
            return NotImplemented
        return self._members == other._members

    def __hash__(self) -> int:
        return hash(self._members)

    def __xor__(self, other: Any) -> PositionCharSet:
        if not isinstance(other, PositionCharSet):
            return NotImplemented
        if self._codec is not None and other._codec is not None and self._codec != other._codec:
            raise DomainError(f"codec mismatch: {self._codec} vs {other._codec}")
        codec = self._codec if self._codec is not None else other._codec
        return PositionCharSet(self._members ^ other._members, codec=codec)

    def __repr__(self) -> str:
        body = ", ".join(f"({pc.position},{pc.character})" for pc in self)
        return f"PositionCharSet({{{body}}})"


def split_key(key: int, codec: KeyCodec) -> list[int]:
    """
    Split ``key`` into its ``c`` characters, least-significant first.

    Examples:
        >>> split_key(0x0F, KeyCodec(char_bits=2, char_count=4))
        [3, 3, 0, 0]
    """
    return list(codec.split(key))


def join_key(chars: Sequence[int], codec: KeyCodec) -> int:
    """
    Pack ``c`` characters back into a key.

    Examples:
        >>> hex(join_key([0x1234, 0xABCD], KeyCodec(char_bits=16, char_count=2)))
        '0xabcd1234'
    """
    return codec.join(chars)


def symmetric_difference(x: PositionCharSet, y: PositionCharSet) -> PositionCharSet:
    """
    ``x △ y = {(i, x_i), (i, y_i) : x_i != y_i}`` for two keys under the same codec.

    Raises:
        DomainError: If the codecs differ or either set is not a key
    """
    if x.codec is None or y.codec is None or x.codec != y.codec:
        raise DomainError(f"symmetric difference needs a shared codec, got {x.codec}, {y.codec}")
    if not (x.is_key() and y.is_key()):
        raise DomainError("symmetric difference is defined on key sets only")
    return x ^ y
