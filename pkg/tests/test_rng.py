"""
Tests for the counter-based generator.

The reference below is the textbook sequential SplitMix64 on Python ints, written
independently of the numpy implementation.
"""

from typing import List

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hitab.errors import DomainError
from hitab.rng import (
    CURRENT_GENERATOR,
    GeneratorId,
    as_u64,
    counter_word,
    derive_seed,
    derive_seed_int,
    table_key,
    trial_seeds,
)

MASK = (1 << 64) - 1


def splitmix64_stream(state: int, count: int) -> List[int]:
    """Sequential SplitMix64: advance by the golden gamma, then finalize."""
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


class TestCounterWord:
    """Test cases for counter_word."""

    def test_first_output_of_seed_zero(self) -> None:
        """Test the well-known first SplitMix64 output for state 0."""
        assert int(counter_word(0, 0)[0]) == 0xE220A8397B1DCDAF

    def test_matches_sequential_stream(self) -> None:
        """Test that counter n equals output n of the sequential generator."""
        expected = splitmix64_stream(12345, 10)
        got = counter_word(12345, np.arange(10, dtype=np.uint64))
        assert [int(v) for v in got] == expected

    @given(
        key=st.integers(min_value=0, max_value=MASK),
        n=st.integers(min_value=0, max_value=50),
    )
    def test_random_access_property(self, key: int, n: int) -> None:
        """Property test: any output is addressable without replaying the stream."""
        assert int(counter_word(key, n)[0]) == splitmix64_stream(key, n + 1)[-1]

    def test_broadcasting(self) -> None:
        """Test that keys and counters broadcast against each other."""
        keys = np.array([[1], [2], [3]], dtype=np.uint64)
        counters = np.arange(4, dtype=np.uint64)
        out = counter_word(keys, counters)
        assert out.shape == (3, 4)
        assert int(out[2, 3]) == int(counter_word(3, 3)[0])


class TestAsU64:
    """Test cases for as_u64."""

    def test_scalar_becomes_vector(self) -> None:
        """Test that a Python int becomes a one-element uint64 array."""
        arr = as_u64(5)
        assert arr.dtype == np.uint64
        assert arr.shape == (1,)

    def test_shape_is_kept(self) -> None:
        """Test that arrays keep their shape."""
        assert as_u64(np.zeros((2, 3), dtype=np.int64)).shape == (2, 3)

    @pytest.mark.parametrize("value", [-1, 1 << 64])
    def test_out_of_range(self, value: int) -> None:
        """Test that ints outside 64 bits are rejected."""
        with pytest.raises(DomainError):
            as_u64(value)


class TestDerivation:
    """Test cases for table keys, sub-seeds and trial seeds."""

    def test_table_key_is_stream_output(self) -> None:
        """Test that table i's key is output i of the seed's stream."""
        assert [int(table_key(99, i)[0]) for i in range(3)] == splitmix64_stream(99, 3)

    def test_derive_seed_formula(self) -> None:
        """Test the two-step tagged derivation."""
        tagged = 7 ^ 0x6869746162_000001
        level_key = splitmix64_stream(tagged, 3)[2]
        expected = splitmix64_stream(level_key, 5)[4]
        assert derive_seed_int(7, 2, 4) == expected

    def test_sub_seeds_are_distinct(self) -> None:
        """Test that levels and roles give distinct sub-seeds."""
        seeds = {derive_seed_int(1, level, role) for level in range(4) for role in range(4)}
        assert len(seeds) == 16

    def test_vectorised_derivation(self) -> None:
        """Test that derive_seed over a vector matches the scalar form."""
        masters = np.array([1, 2, 3], dtype=np.uint64)
        got = derive_seed(masters, 1, 0)
        assert [int(v) for v in got] == [derive_seed_int(m, 1, 0) for m in (1, 2, 3)]

    def test_trial_seeds(self) -> None:
        """Test that trial seeds are the leading outputs of the master stream."""
        assert [int(v) for v in trial_seeds(42, 6)] == splitmix64_stream(42, 6)

    def test_generator_ids(self) -> None:
        """Test the on-disk generator identifiers."""
        assert GeneratorId.EXPLICIT == 0
        assert CURRENT_GENERATOR is GeneratorId.SPLITMIX64_CTR_V1
        assert int(CURRENT_GENERATOR) == 1
