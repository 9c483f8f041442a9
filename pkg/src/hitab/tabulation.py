"""
Simple tabulation: ``h(x) = h_0(x_0) XOR ... XOR h_{c-1}(x_{c-1})``.

Each of the ``c`` character tables maps an input character to a packed vector of ``d``
output characters. Output character ``j`` occupies bits ``[j*ob, (j+1)*ob)`` of the packed
value, least-significant first; values wider than 64 bits are stored as a little-endian
sequence of 64-bit words, so XOR of whole vectors is a word operation. Tables live in one
``(c, 2^b, W)`` numpy ``uint64`` array.

Tables are filled by the counter-based generator of :mod:`hitab.rng`: word ``w`` of entry
``x`` in table ``i`` under ``seed`` is ``counter_word(counter_word(seed, i), x*W + w)``,
with the top word masked to the packed width.
"""

from __future__ import annotations

import contextlib
import hashlib
import logging
import struct
import zlib
from collections.abc import Iterator, Sequence
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Any, Final, Optional

import numpy as np
import numpy.typing as npt

from .config import Settings, get_settings
from .errors import (
    BadMagicError,
    ChecksumMismatchError,
    DomainError,
    FormatError,
    TruncatedStreamError,
    UnknownGeneratorError,
    UnsupportedVersionError,
)
from .keyspace import KeyCodec, PositionCharSet
from .rng import MASK64, U64, GeneratorId, as_u64, counter_word, table_key

logger = logging.getLogger(__name__)

MAGIC: Final = b"HTAB"
FORMAT_VERSION: Final = 1
_HEADER: Final = struct.Struct("<4sBBHIIIIQ")
_CRC: Final = struct.Struct("<I")
_WORD_BITS: Final = 64
MAX_CHAR_BITS: Final = 32


# -- lookup instrumentation ------------------------------------------------------------


class LookupCounter:
    """Running total of table lookups recorded inside :func:`count_lookups`."""

    def __init__(self) -> None:
        self.count = 0

    def __repr__(self) -> str:
        return f"LookupCounter(count={self.count})"


_active_counter: ContextVar[Optional[LookupCounter]] = ContextVar("hitab_lookups", default=None)


@contextlib.contextmanager
def count_lookups() -> Iterator[LookupCounter]:
    """
    Count table lookups made by evaluations in this context.

    Examples:
        >>> params = TabulationParams(4, 3, 8, 1)
        >>> h = SimpleTabulation.generate(params, seed=1)
        >>> with count_lookups() as counter:
        ...     _ = h.eval(0x123)
        >>> counter.count
        3
    """
    counter = LookupCounter()
    token = _active_counter.set(counter)
    try:
        yield counter
    finally:
        _active_counter.reset(token)


def record_lookups(n: int) -> None:
    counter = _active_counter.get()
    if counter is not None:
        counter.count += n


# -- parameters --------------------------------------------------------------------------


@dataclass(frozen=True)
class TabulationParams:
    """
    Shape of a simple tabulation function ``[2^b]^c -> [2^ob]^d``.

    The input is a vector of ``c`` characters. When it fits a machine word the vector is
    also a key, and :attr:`input_codec` converts between the two; the second level of a
    composed scheme takes wider vectors and is evaluated on characters only.

    Attributes:
        char_bits: Bits per input character (``b``)
        char_count: Number of input characters (``c``)
        out_char_bits: Bits per output character (``ob``)
        out_char_count: Number of output characters (``d``)
    """

    char_bits: int
    char_count: int
    out_char_bits: int
    out_char_count: int

    def __post_init__(self) -> None:
        if not 1 <= self.char_bits <= MAX_CHAR_BITS:
            raise DomainError(f"char_bits must lie in [1, {MAX_CHAR_BITS}], got {self.char_bits}")
        if self.char_count < 1:
            raise DomainError(f"char_count must be positive, got {self.char_count}")
        if self.out_char_bits < 1 or self.out_char_count < 1:
            raise DomainError(
                f"out_char_bits and out_char_count must be positive, got "
                f"{self.out_char_bits}, {self.out_char_count}"
            )

    @classmethod
    def for_codec(
        cls, codec: KeyCodec, out_char_bits: int, out_char_count: int
    ) -> TabulationParams:
        return cls(codec.char_bits, codec.char_count, out_char_bits, out_char_count)

    @property
    def input_codec(self) -> KeyCodec:
        """
        Key codec of the input vector.

        Raises:
            DomainError: If the input vector is wider than a 64-bit key
        """
        return KeyCodec(self.char_bits, self.char_count)

    @property
    def in_bits(self) -> int:
        return self.char_bits * self.char_count

    @property
    def table_entries(self) -> int:
        return 1 << self.char_bits

    def check_char(self, position: int, character: int) -> None:
        if not 0 <= position < self.char_count:
            raise DomainError(f"position {position} outside [0, {self.char_count})")
        if not 0 <= character < self.table_entries:
            raise DomainError(
                f"character {character} at position {position} outside "
                f"[0, {self.table_entries})"
            )

    @property
    def out_bits(self) -> int:
        """Packed output width ``d * ob``."""
        return self.out_char_bits * self.out_char_count

    @property
    def words(self) -> int:
        """64-bit words per packed entry."""
        return -(-self.out_bits // _WORD_BITS)

    @property
    def entry_bytes(self) -> int:
        return -(-self.out_bits // 8)

    @property
    def top_word_mask(self) -> int:
        top_bits = self.out_bits - _WORD_BITS * (self.words - 1)
        return MASK64 if top_bits == _WORD_BITS else (1 << top_bits) - 1

    @property
    def table_bytes(self) -> int:
        """In-memory size of all character tables."""
        return self.char_count * self.table_entries * self.words * 8

    def output_codec(self) -> KeyCodec:
        """The output vector read as a key of ``d`` characters (requires ``d*ob <= 64``)."""
        return KeyCodec(self.out_char_bits, self.out_char_count)


def _mask_top(words: U64, params: TabulationParams) -> U64:
    if params.top_word_mask != MASK64:
        words[..., -1] &= np.uint64(params.top_word_mask)
    return words


def entry_words(
    params: TabulationParams, seeds: Any, table: int, chars: Any
) -> npt.NDArray[np.uint64]:
    """
    Generator words of entry ``chars`` in table ``table`` for each seed, shape ``(n, W)``.

    Entries are addressed by counter, so any entry of any seeded table can be computed
    without materialising the table. ``seeds`` and ``chars`` broadcast against each other.
    """
    w = params.words
    keys = table_key(seeds if isinstance(seeds, int) else as_u64(np.asarray(seeds)), table)
    base = as_u64(np.asarray(chars, dtype=np.uint64)) * np.uint64(w)
    keys, base = np.broadcast_arrays(keys.reshape(-1), base.reshape(-1))
    offsets = np.arange(w, dtype=np.uint64)
    out = counter_word(keys[:, None], base[:, None] + offsets[None, :])
    return _mask_top(out, params)


# -- packing helpers ---------------------------------------------------------------------


def words_to_int(words: Sequence[Any]) -> int:
    """Little-endian 64-bit words to a Python int."""
    value = 0
    for i, word in enumerate(words):
        value |= int(word) << (_WORD_BITS * i)
    return value


def int_to_words(value: int, count: int) -> npt.NDArray[np.uint64]:
    if value < 0 or value >> (_WORD_BITS * count):
        raise DomainError(f"value {value:#x} does not fit in {count} words")
    return np.array(
        [(value >> (_WORD_BITS * i)) & MASK64 for i in range(count)], dtype=np.uint64
    )


def unpack_chars(
    words: npt.NDArray[np.uint64], out_char_bits: int, out_char_count: int
) -> npt.NDArray[np.uint64]:
    """
    Split packed ``(n, W)`` words into an ``(n, d)`` array of output characters.

    Characters may straddle a word boundary.
    """
    if not 1 <= out_char_bits <= _WORD_BITS:
        raise DomainError(f"output characters of {out_char_bits} bits do not fit a uint64")
    words = np.atleast_2d(words)
    n, w = words.shape
    ob = out_char_bits
    mask = np.uint64((1 << ob) - 1 if ob < _WORD_BITS else MASK64)
    out = np.empty((n, out_char_count), dtype=np.uint64)
    for j in range(out_char_count):
        offset = j * ob
        wi, shift = divmod(offset, _WORD_BITS)
        part = words[:, wi] >> np.uint64(shift)
        if shift and shift + ob > _WORD_BITS and wi + 1 < w:
            part |= words[:, wi + 1] << np.uint64(_WORD_BITS - shift)
        out[:, j] = part & mask
    return out


def output_chars(value: int, out_char_bits: int, out_char_count: int) -> list[int]:
    """Scalar counterpart of :func:`unpack_chars` for a packed Python int."""
    mask = (1 << out_char_bits) - 1
    return [(value >> (j * out_char_bits)) & mask for j in range(out_char_count)]


# -- the function ------------------------------------------------------------------------


class SimpleTabulation:
    """
    A simple tabulation function with materialised character tables.

    Construct with :meth:`generate` (seeded), :meth:`from_entries` (explicit tables) or
    :func:`deserialize`. Instances are immutable: the table array is read-only.

    Examples:
        >>> params = TabulationParams(2, 2, 4, 1)
        >>> h = SimpleTabulation.from_entries(params, [[0, 1, 2, 3], [0, 4, 8, 12]])
        >>> h.eval(0b1001)  # characters (1, 2)
        9
    """

    def __init__(
        self,
        params: TabulationParams,
        tables: npt.NDArray[np.uint64],
        seed: int = 0,
        generator: GeneratorId = GeneratorId.EXPLICIT,
    ) -> None:
        expected = (params.char_count, params.table_entries, params.words)
        if tables.shape != expected or tables.dtype != np.uint64:
            raise DomainError(f"tables must be uint64 of shape {expected}, got {tables.shape}")
        if params.top_word_mask != MASK64 and np.any(
            tables[..., -1] & ~np.uint64(params.top_word_mask)
        ):
            raise DomainError(f"a table entry exceeds the packed width of {params.out_bits} bits")
        if not 0 <= seed <= MASK64:
            raise DomainError(f"seed {seed} does not fit in 64 bits")
        self.params = params
        self.tables = tables
        self.tables.flags.writeable = False
        self.seed = seed
        self.generator = GeneratorId(generator)

    @classmethod
    def generate(
        cls, params: TabulationParams, seed: int, settings: Optional[Settings] = None
    ) -> SimpleTabulation:
        """
        Fill the tables from the counter-based generator keyed by ``seed``.

        Raises:
            ResourceError: If the tables exceed the configured memory budget
        """
        settings = settings or get_settings()
        settings.check_memory(params.table_bytes, f"tabulation {params.out_bits}-bit output")
        logger.debug(
            "generating %d tables of %d entries x %d words (seed %#x)",
            params.char_count,
            params.table_entries,
            params.words,
            seed,
        )
        per_table = params.table_entries * params.words
        counters = np.arange(per_table, dtype=np.uint64)
        tables = np.empty(
            (params.char_count, params.table_entries, params.words), dtype=np.uint64
        )
        for i in range(params.char_count):
            key = table_key(seed, i)
            tables[i] = counter_word(key, counters).reshape(params.table_entries, params.words)
        _mask_top(tables, params)
        return cls(params, tables, seed=seed, generator=GeneratorId.SPLITMIX64_CTR_V1)

    @classmethod
    def from_entries(
        cls, params: TabulationParams, entries: Sequence[Sequence[int]]
    ) -> SimpleTabulation:
        """Build from explicit packed entries given as Python ints, one list per table."""
        if len(entries) != params.char_count:
            raise DomainError(f"expected {params.char_count} tables, got {len(entries)}")
        tables = np.zeros(
            (params.char_count, params.table_entries, params.words), dtype=np.uint64
        )
        limit = 1 << params.out_bits
        for i, table in enumerate(entries):
            if len(table) != params.table_entries:
                raise DomainError(
                    f"table {i} has {len(table)} entries, expected {params.table_entries}"
                )
            for x, value in enumerate(table):
                if not 0 <= value < limit:
                    raise DomainError(
                        f"entry {value:#x} of table {i} exceeds {params.out_bits} bits"
                    )
                tables[i, x] = int_to_words(value, params.words)
        return cls(params, tables)

    @classmethod
    def zeros(cls, params: TabulationParams) -> SimpleTabulation:
        return cls(
            params,
            np.zeros((params.char_count, params.table_entries, params.words), dtype=np.uint64),
        )

    # HashScheme surface

    @property
    def name(self) -> str:
        p = self.params
        return f"simple-{p.char_bits}x{p.char_count}-{p.out_char_bits}x{p.out_char_count}"

    @property
    def key_bits(self) -> int:
        return self.params.input_codec.key_bits

    @property
    def range_bits(self) -> int:
        return self.params.out_bits

    @property
    def lookups_per_key(self) -> int:
        return self.params.char_count

    def entry(self, table: int, char: int) -> int:
        """Packed entry ``h_table(char)``."""
        self.params.check_char(table, char)
        return words_to_int(self.tables[table, char])

    def eval(self, key: int) -> int:
        """XOR of the ``c`` looked-up entries; the packed output as an int."""
        return self.eval_chars(self.params.input_codec.split(key))

    def eval_chars(self, chars: Sequence[int]) -> int:
        c = self.params.char_count
        if len(chars) != c:
            raise DomainError(f"expected {c} characters, got {len(chars)}")
        for i, ch in enumerate(chars):
            self.params.check_char(i, ch)
        record_lookups(c)
        rows = self.tables[np.arange(c), np.asarray(chars, dtype=np.intp)]
        return words_to_int(np.bitwise_xor.reduce(rows, axis=0))

    def eval_set(self, s: PositionCharSet) -> int:
        """
        ``h(S) = XOR over (i, a) in S of h_i(a)``; 0 for the empty set.

        Raises:
            DomainError: If a member's position or character is out of range
        """
        acc = np.zeros(self.params.words, dtype=np.uint64)
        for pc in s:
            self.params.check_char(pc.position, pc.character)
            acc ^= self.tables[pc.position, pc.character]
        record_lookups(len(s))
        return words_to_int(acc)

    def eval_chars_many(self, chars: npt.NDArray[Any]) -> npt.NDArray[np.uint64]:
        """Vectorised evaluation of an ``(n, c)`` character matrix to ``(n, W)`` words."""
        chars = np.asarray(chars)
        n, c = chars.shape
        if c != self.params.char_count:
            raise DomainError(f"expected {self.params.char_count} character columns, got {c}")
        idx = chars.astype(np.intp, copy=False)
        size = self.tables.shape[1]
        if n and (int(idx.min()) < 0 or int(idx.max()) >= size):
            raise DomainError(f"a character is outside [0, {size})")
        acc = self.tables[0][idx[:, 0]].copy()
        for i in range(1, c):
            acc ^= self.tables[i][idx[:, i]]
        record_lookups(n * c)
        return acc

    def eval_words(self, keys: npt.NDArray[Any]) -> npt.NDArray[np.uint64]:
        """Packed outputs of many keys as ``(n, W)`` words, in chunks of the batch size."""
        chars = self.params.input_codec.split_many(keys)
        batch = get_settings().batch_size
        if len(chars) <= batch:
            return self.eval_chars_many(chars)
        return np.concatenate(
            [self.eval_chars_many(chars[i : i + batch]) for i in range(0, len(chars), batch)]
        )

    def eval_many(self, keys: npt.NDArray[Any]) -> npt.NDArray[np.uint64]:
        """Outputs of many keys as a ``uint64`` vector (outputs of at most 64 bits)."""
        if self.params.words != 1:
            raise DomainError(
                f"{self.params.out_bits}-bit outputs do not fit a uint64 vector; use eval_words"
            )
        return self.eval_words(keys)[:, 0]

    # value semantics

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimpleTabulation):
            return NotImplemented
        return (
            self.params == other.params
            and self.seed == other.seed
            and self.generator == other.generator
            and np.array_equal(self.tables, other.tables)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"SimpleTabulation({self.params!r}, seed={self.seed:#x}, "
            f"generator={self.generator.name})"
        )

    def digest(self) -> str:
        """SHA-256 of the serialized form."""
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def to_bytes(self) -> bytes:
        return serialize(self)


# -- container ---------------------------------------------------------------------------


def serialize(h: SimpleTabulation) -> bytes:
    """
    Encode ``h`` as an ``HTAB`` container.

    Layout: magic, version u8, generator u8, two reserved bytes, little-endian u32
    ``b_in, c, out_char_bits, d``, u64 seed, the tables in index order with each entry as
    ``ceil(d*ob/8)`` little-endian bytes, then the CRC-32 of everything before it.
    """
    p = h.params
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        int(h.generator),
        0,
        p.char_bits,
        p.char_count,
        p.out_char_bits,
        p.out_char_count,
        h.seed,
    )
    raw = h.tables.astype("<u8").view(np.uint8).reshape(p.char_count, p.table_entries, -1)
    body = np.ascontiguousarray(raw[:, :, : p.entry_bytes]).tobytes()
    payload = header + body
    return payload + _CRC.pack(zlib.crc32(payload))


def deserialize(data: bytes, settings: Optional[Settings] = None) -> SimpleTabulation:
    """
    Parse an ``HTAB`` container.

    Raises:
        BadMagicError, UnsupportedVersionError, UnknownGeneratorError,
        TruncatedStreamError, ChecksumMismatchError: Checked in that order
        FormatError: For other malformed contents
    """
    h, used = read_container(memoryview(data), settings)
    if used != len(data):
        raise FormatError(f"{len(data) - used} trailing bytes after HTAB container")
    return h


def read_container(
    data: memoryview, settings: Optional[Settings] = None
) -> tuple[SimpleTabulation, int]:
    """Parse one ``HTAB`` container at the start of ``data``; return it and its length."""
    head = bytes(data[:4])
    if head != MAGIC:
        if len(head) < 4 and MAGIC.startswith(head):
            raise TruncatedStreamError("stream ends inside the HTAB magic")
        raise BadMagicError(f"expected magic {MAGIC!r}, got {head!r}")
    if len(data) < 6:
        raise TruncatedStreamError("stream ends inside the HTAB header")
    if data[4] != FORMAT_VERSION:
        raise UnsupportedVersionError(f"HTAB version {data[4]} (this build reads {FORMAT_VERSION})")
    try:
        generator = GeneratorId(data[5])
    except ValueError:
        raise UnknownGeneratorError(f"unknown table generator id {data[5]}") from None
    if len(data) < _HEADER.size:
        raise TruncatedStreamError(f"header needs {_HEADER.size} bytes, stream has {len(data)}")
    _, _, _, _, b_in, c, ob, d, seed = _HEADER.unpack_from(data)
    try:
        params = TabulationParams(b_in, c, ob, d)
    except DomainError as exc:
        raise FormatError(f"invalid HTAB parameters: {exc}") from exc
    body_len = c * params.table_entries * params.entry_bytes
    total = _HEADER.size + body_len + _CRC.size
    if len(data) < total:
        raise TruncatedStreamError(f"HTAB container needs {total} bytes, stream has {len(data)}")
    (stored,) = _CRC.unpack_from(data, total - _CRC.size)
    if zlib.crc32(data[: total - _CRC.size]) != stored:
        raise ChecksumMismatchError("HTAB checksum mismatch")
    (settings or get_settings()).check_memory(params.table_bytes, "deserialized tabulation")

    packed = np.frombuffer(data[_HEADER.size : _HEADER.size + body_len], dtype=np.uint8)
    packed = packed.reshape(c, params.table_entries, params.entry_bytes)
    wide = np.zeros((c, params.table_entries, params.words * 8), dtype=np.uint8)
    wide[:, :, : params.entry_bytes] = packed
    tables = wide.view("<u8").astype(np.uint64).reshape(c, params.table_entries, params.words)
    try:
        h = SimpleTabulation(params, tables, seed=seed, generator=generator)
    except DomainError as exc:
        raise FormatError(str(exc)) from exc
    return h, total
