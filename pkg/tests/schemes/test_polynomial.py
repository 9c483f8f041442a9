"""Tests for the polynomial baseline over the Mersenne prime 2^61 - 1."""

from typing import Any

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hitab.errors import DomainError
from hitab.schemes import PRIME, PolynomialHash
from hitab.schemes.polynomial import mod_mersenne, mulmod_many

residues = st.integers(min_value=0, max_value=PRIME - 1)


class TestArithmetic:
    """Test cases for the modular helpers."""

    @given(x=st.integers(min_value=0, max_value=1 << 130))
    def test_mod_mersenne(self, x: int) -> None:
        """Property test: folding agrees with %."""
        assert mod_mersenne(x) == x % PRIME

    def test_mod_mersenne_edges(self) -> None:
        """Test the values around the prime."""
        assert mod_mersenne(PRIME) == 0
        assert mod_mersenne(PRIME - 1) == PRIME - 1
        assert mod_mersenne(PRIME + 1) == 1
        assert mod_mersenne(PRIME * PRIME) == 0

    @given(a=residues, x=residues)
    def test_mulmod_many(self, a: int, x: int) -> None:
        """Property test: the limb multiplication agrees with Python ints."""
        got = mulmod_many(np.array([a], dtype=np.uint64), np.array([x], dtype=np.uint64))
        assert int(got[0]) == a * x % PRIME

    def test_mulmod_many_extremes(self) -> None:
        """Test the largest residues."""
        top = np.array([PRIME - 1], dtype=np.uint64)
        assert int(mulmod_many(top, top)[0]) == 1


class TestPolynomialHash:
    """Test cases for PolynomialHash."""

    def test_known_value(self) -> None:
        """Test 5 + 7x + 11x^2 at x = 3."""
        assert PolynomialHash([5, 7, 11], range_bits=61).eval(3) == 125

    def test_truncation(self) -> None:
        """Test that the value is reduced to range_bits bits."""
        h = PolynomialHash([5, 7, 11], range_bits=4)
        assert h.eval(3) == 125 & 0xF

    def test_eval_many_matches_eval(self) -> None:
        """Test the vectorised path on large keys and coefficients."""
        h = PolynomialHash.new(k=5, seed=11)
        keys = np.array([0, 1, 12345, PRIME - 1, (1 << 60) + 3], dtype=np.uint64)
        assert [int(v) for v in h.eval_many(keys)] == [h.eval(int(k)) for k in keys]

    def test_new_is_seeded(self) -> None:
        """Test reproducible, in-range coefficients."""
        h = PolynomialHash.new(k=4, seed=1)
        assert h == PolynomialHash.new(k=4, seed=1)
        assert h != PolynomialHash.new(k=4, seed=2)
        assert h.k == 4
        assert all(0 <= a < PRIME for a in h.coefficients)

    def test_surface(self) -> None:
        """Test the scheme protocol surface."""
        h = PolynomialHash.new(k=2, seed=0, range_bits=32)
        assert h.name == "poly-2"
        assert h.key_bits == 61
        assert h.range_bits == 32
        assert h.lookups_per_key == 0
        assert "k=2" in repr(h)

    @pytest.mark.parametrize(
        "coefficients, range_bits", [([], 64), ([PRIME], 64), ([1], 0), ([1], 65)]
    )
    def test_invalid(self, coefficients: Any, range_bits: int) -> None:
        """Test construction checks."""
        with pytest.raises(DomainError):
            PolynomialHash(coefficients, range_bits)

    def test_key_out_of_field(self) -> None:
        """Test that keys at or above p are rejected on both paths."""
        h = PolynomialHash([1, 2])
        with pytest.raises(DomainError):
            h.eval(PRIME)
        with pytest.raises(DomainError):
            h.eval_many(np.array([PRIME], dtype=np.uint64))
        with pytest.raises(DomainError):
            PolynomialHash.new(k=0, seed=1)
