"""
The ``HSCH`` composed-scheme container.

Layout (all integers little-endian)::

    "HSCH"  version:u8  tag:u8  reserved:u16  field_a:u32  field_b:u32  seed:u64  parts:u32
    part_count x ( length:u64  HTAB container )      double, triple, recursive
    field_a x coefficient:u64                          poly
    crc32:u32 over every preceding byte

``field_a``/``field_b`` are ``c``/``key_bits`` for recursive schemes and ``k``/``range_bits``
for the polynomial; zero otherwise. Parts are stored levels first, bottom last.
"""

from __future__ import annotations

import struct
import zlib
from collections.abc import Callable
from enum import IntEnum
from typing import Final, Optional, Union

from ..config import Settings
from ..errors import (
    BadMagicError,
    ChecksumMismatchError,
    DomainError,
    FormatError,
    TruncatedStreamError,
    UnknownSchemeError,
    UnsupportedVersionError,
)
from ..tabulation import SimpleTabulation, deserialize, read_container
from .base import ComposedTabulation
from .double import DoubleTabulation
from .polynomial import PolynomialHash
from .recursive import RecursiveTabulation, recursive_plan
from .triple import TripleTabulation

MAGIC: Final = b"HSCH"
FORMAT_VERSION: Final = 1
_HEADER: Final = struct.Struct("<4sBBHIIQI")
_LENGTH: Final = struct.Struct("<Q")
_WORD: Final = struct.Struct("<Q")
_CRC: Final = struct.Struct("<I")

Scheme = Union[DoubleTabulation, TripleTabulation, RecursiveTabulation, PolynomialHash]


class SchemeTag(IntEnum):
    DOUBLE = 1
    TRIPLE = 2
    RECURSIVE = 3
    POLY = 4


def scheme_tag(scheme: object) -> SchemeTag:
    # subclasses before the base
    if isinstance(scheme, RecursiveTabulation):
        return SchemeTag.RECURSIVE
    if isinstance(scheme, TripleTabulation):
        return SchemeTag.TRIPLE
    if isinstance(scheme, DoubleTabulation):
        return SchemeTag.DOUBLE
    if isinstance(scheme, PolynomialHash):
        return SchemeTag.POLY
    raise FormatError(f"{type(scheme).__name__} has no HSCH encoding")


def dump_scheme(scheme: Union[ComposedTabulation, PolynomialHash]) -> bytes:
    """Encode a composed scheme or polynomial as an ``HSCH`` container."""
    tag = scheme_tag(scheme)
    chunks: list[bytes] = []
    if isinstance(scheme, PolynomialHash):
        field_a, field_b, part_count = scheme.k, scheme.range_bits, 0
        chunks.extend(_WORD.pack(a) for a in scheme.coefficients)
    else:
        field_a = field_b = 0
        if isinstance(scheme, RecursiveTabulation):
            field_a, field_b = scheme.plan.c, scheme.plan.key_bits
        parts = [*scheme.levels, scheme.bottom]
        part_count = len(parts)
        for part in parts:
            blob = part.to_bytes()
            chunks.append(_LENGTH.pack(len(blob)))
            chunks.append(blob)
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, tag, 0, field_a, field_b, scheme.seed, part_count
    )
    payload = header + b"".join(chunks)
    return payload + _CRC.pack(zlib.crc32(payload))


def load_scheme(data: bytes, settings: Optional[Settings] = None) -> Scheme:
    """
    Parse an ``HSCH`` container.

    Raises:
        BadMagicError, UnsupportedVersionError, UnknownSchemeError, TruncatedStreamError,
        ChecksumMismatchError: Checked in that order
        FormatError: For inconsistent contents
    """
    view = memoryview(data)
    head = bytes(view[:4])
    if head != MAGIC:
        if len(head) < 4 and MAGIC.startswith(head):
            raise TruncatedStreamError("stream ends inside the HSCH magic")
        raise BadMagicError(f"expected magic {MAGIC!r}, got {head!r}")
    if len(view) < 6:
        raise TruncatedStreamError("stream ends inside the HSCH header")
    if view[4] != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"HSCH version {view[4]} (this build reads {FORMAT_VERSION})"
        )
    try:
        tag = SchemeTag(view[5])
    except ValueError:
        raise UnknownSchemeError(f"unknown scheme tag {view[5]}") from None
    if len(view) < _HEADER.size + _CRC.size:
        raise TruncatedStreamError(f"HSCH header needs {_HEADER.size} bytes")
    body_end = len(view) - _CRC.size
    (stored,) = _CRC.unpack_from(view, body_end)
    _, _, _, _, field_a, field_b, seed, part_count = _HEADER.unpack_from(view)

    if tag is SchemeTag.POLY:
        need = _HEADER.size + field_a * _WORD.size
        if body_end < need:
            raise TruncatedStreamError(f"HSCH polynomial needs {need + _CRC.size} bytes")
        _check_crc(view, body_end, stored)
        coefficients = [
            _WORD.unpack_from(view, _HEADER.size + _WORD.size * i)[0] for i in range(field_a)
        ]
        if need != body_end:
            raise FormatError(f"{body_end - need} unexpected bytes in HSCH polynomial")
        return _build(lambda: PolynomialHash(coefficients, field_b, seed))

    parts: list[memoryview] = []
    offset = _HEADER.size
    for i in range(part_count):
        if offset + _LENGTH.size > body_end:
            raise TruncatedStreamError(f"stream ends before HSCH part {i}")
        (length,) = _LENGTH.unpack_from(view, offset)
        offset += _LENGTH.size
        if offset + length > body_end:
            raise TruncatedStreamError(f"stream ends inside HSCH part {i}")
        parts.append(view[offset : offset + length])
        offset += length
    _check_crc(view, body_end, stored)
    if offset != body_end:
        raise FormatError(f"{body_end - offset} unexpected bytes after the HSCH parts")
    if part_count < 2:
        raise FormatError(f"a composed scheme needs at least 2 parts, got {part_count}")

    tables: list[SimpleTabulation] = []
    for i, blob in enumerate(parts):
        h, used = read_container(blob, settings)
        if used != len(blob):
            raise FormatError(f"HSCH part {i} has {len(blob) - used} trailing bytes")
        tables.append(h)
    levels, bottom = tables[:-1], tables[-1]
    if tag is SchemeTag.DOUBLE:
        if len(levels) != 1:
            raise FormatError(f"double tabulation has 2 parts, got {part_count}")
        return _build(lambda: DoubleTabulation(levels[0], bottom, seed))
    if tag is SchemeTag.TRIPLE:
        return _build(lambda: TripleTabulation(levels, bottom, seed))
    return _build(
        lambda: RecursiveTabulation(recursive_plan(field_a, field_b), levels, bottom, seed)
    )


def _check_crc(view: memoryview, body_end: int, stored: int) -> None:
    if zlib.crc32(view[:body_end]) != stored:
        raise ChecksumMismatchError("HSCH checksum mismatch")


def _build(factory: Callable[[], Scheme]) -> Scheme:
    try:
        return factory()
    except DomainError as exc:
        raise FormatError(f"inconsistent HSCH contents: {exc}") from exc


def load_any(
    data: bytes, settings: Optional[Settings] = None
) -> Union[Scheme, SimpleTabulation]:
    """Parse either container kind, dispatching on the magic bytes."""
    if data[:4] == MAGIC:
        return load_scheme(data, settings)
    return deserialize(data, settings)
