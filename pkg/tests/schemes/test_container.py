"""Tests for the HSCH composed-scheme container."""

import struct
import zlib

import pytest

from hitab.errors import (
    BadMagicError,
    ChecksumMismatchError,
    FormatError,
    TruncatedStreamError,
    UnknownSchemeError,
    UnsupportedVersionError,
)
from hitab.keyspace import KeyCodec
from hitab.schemes import (
    DoubleTabulation,
    PolynomialHash,
    RecursiveTabulation,
    SchemeTag,
    dump_scheme,
    load_any,
    load_scheme,
    recursive_plan,
)
from hitab.tabulation import SimpleTabulation, TabulationParams


def _sealed(payload: bytes) -> bytes:
    return payload + struct.pack("<I", zlib.crc32(payload))


@pytest.fixture(scope="module")
def double_blob() -> bytes:
    """A serialized 16-bit double tabulation."""
    return DoubleTabulation.new(KeyCodec(4, 4), 8, 4, seed=77, range_bits=16).to_bytes()


class TestRoundTrip:
    """Test cases for dump_scheme and load_scheme."""

    def test_double(self, double_blob: bytes) -> None:
        """Test that a double tabulation survives serialization."""
        scheme = load_scheme(double_blob)
        assert isinstance(scheme, DoubleTabulation)
        assert scheme == DoubleTabulation.new(KeyCodec(4, 4), 8, 4, seed=77, range_bits=16)
        assert scheme.seed == 77
        assert scheme.eval(0xBEEF) == load_scheme(double_blob).eval(0xBEEF)

    def test_recursive(self) -> None:
        """Test that the plan is restored from the header fields."""
        rt = RecursiveTabulation.new(recursive_plan(1, 16), seed=3, range_bits=8)
        back = load_scheme(rt.to_bytes())
        assert isinstance(back, RecursiveTabulation)
        assert back.plan == rt.plan
        assert back.eval(0x1234) == rt.eval(0x1234)

    def test_polynomial(self) -> None:
        """Test that coefficients and range survive serialization."""
        h = PolynomialHash.new(k=3, seed=8, range_bits=40)
        back = load_scheme(dump_scheme(h))
        assert back == h
        assert back.seed == 8

    def test_header_layout(self, double_blob: bytes) -> None:
        """Test the fixed header fields."""
        magic, version, tag, reserved, a, b, seed, parts = struct.unpack_from(
            "<4sBBHIIQI", double_blob
        )
        assert (magic, version, tag, reserved) == (b"HSCH", 1, SchemeTag.DOUBLE, 0)
        assert (a, b, seed, parts) == (0, 0, 77, 2)

    def test_load_any(self, double_blob: bytes) -> None:
        """Test dispatch on the magic bytes."""
        h = SimpleTabulation.from_entries(TabulationParams(1, 1, 8, 1), [[1, 2]])
        assert load_any(h.to_bytes()) == h
        assert isinstance(load_any(double_blob), DoubleTabulation)


class TestErrors:
    """Test cases for malformed HSCH streams."""

    def test_bad_magic(self, double_blob: bytes) -> None:
        """Test a wrong magic."""
        with pytest.raises(BadMagicError):
            load_scheme(b"HSCX" + double_blob[4:])

    def test_version(self, double_blob: bytes) -> None:
        """Test an unknown version."""
        data = bytearray(double_blob)
        data[4] = 7
        with pytest.raises(UnsupportedVersionError):
            load_scheme(bytes(data))

    def test_unknown_tag(self, double_blob: bytes) -> None:
        """Test an unknown scheme tag."""
        data = bytearray(double_blob)
        data[5] = 42
        with pytest.raises(UnknownSchemeError):
            load_scheme(bytes(data))

    @pytest.mark.parametrize("cut", [3, 20, 40])
    def test_truncated(self, double_blob: bytes, cut: int) -> None:
        """Test truncation in the magic, the header and the first part."""
        with pytest.raises(TruncatedStreamError):
            load_scheme(double_blob[:cut])

    def test_checksum(self, double_blob: bytes) -> None:
        """Test a flipped byte inside a part."""
        data = bytearray(double_blob)
        data[60] ^= 0x80
        with pytest.raises(ChecksumMismatchError):
            load_scheme(bytes(data))

    def test_too_few_parts(self) -> None:
        """Test that a composed scheme without parts is a format error."""
        header = struct.pack("<4sBBHIIQI", b"HSCH", 1, SchemeTag.DOUBLE, 0, 0, 0, 0, 0)
        with pytest.raises(FormatError):
            load_scheme(_sealed(header))

    def test_trailing_bytes(self) -> None:
        """Test that bytes after the last part are a format error."""
        header = struct.pack("<4sBBHIIQI", b"HSCH", 1, SchemeTag.DOUBLE, 0, 0, 0, 0, 0)
        with pytest.raises(FormatError):
            load_scheme(_sealed(header + b"\x00"))

    def test_inconsistent_parts(self) -> None:
        """Test that parts which do not compose are a format error."""
        first = SimpleTabulation.zeros(TabulationParams(2, 2, 2, 2)).to_bytes()
        second = SimpleTabulation.zeros(TabulationParams(2, 3, 8, 1)).to_bytes()
        body = b"".join(struct.pack("<Q", len(p)) + p for p in (first, second))
        header = struct.pack("<4sBBHIIQI", b"HSCH", 1, SchemeTag.DOUBLE, 0, 0, 0, 0, 2)
        with pytest.raises(FormatError):
            load_scheme(_sealed(header + body))

    def test_triple_with_wrong_shapes(self) -> None:
        """Test that a triple-tagged stream must carry the fixed triple shapes."""
        parts = [
            SimpleTabulation.zeros(TabulationParams(2, 2, 2, 2)).to_bytes(),
            SimpleTabulation.zeros(TabulationParams(2, 1, 2, 2)).to_bytes(),
            SimpleTabulation.zeros(TabulationParams(2, 4, 8, 1)).to_bytes(),
        ]
        body = b"".join(struct.pack("<Q", len(p)) + p for p in parts)
        header = struct.pack("<4sBBHIIQI", b"HSCH", 1, SchemeTag.TRIPLE, 0, 0, 0, 0, 3)
        with pytest.raises(FormatError, match="triple"):
            load_scheme(_sealed(header + body))

    def test_simple_function_has_no_scheme_encoding(self) -> None:
        """Test that dump_scheme refuses a bare simple tabulation."""
        with pytest.raises(FormatError):
            simple = SimpleTabulation.zeros(TabulationParams(1, 1, 8, 1))
            dump_scheme(simple)  # type: ignore[arg-type]
