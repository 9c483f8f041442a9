"""Tests for triple tabulation."""

import numpy as np
import pytest

from hitab.errors import DomainError
from hitab.schemes import TripleTabulation
from hitab.schemes.triple import INNER, OUTER
from hitab.tabulation import SimpleTabulation, TabulationParams, count_lookups


@pytest.fixture(scope="module")
def zero_triple() -> TripleTabulation:
    """A triple tabulation with all-zero tables."""
    bottom = SimpleTabulation.zeros(TabulationParams(16, 280, 64, 1))
    return TripleTabulation(
        (SimpleTabulation.zeros(OUTER), SimpleTabulation.zeros(INNER)), bottom
    )


class TestTripleTabulation:
    """Test cases for TripleTabulation."""

    def test_shape(self, zero_triple: TripleTabulation) -> None:
        """Test the fixed level shapes."""
        assert OUTER == TabulationParams(16, 4, 32, 14)
        assert INNER == TabulationParams(16, 2, 16, 20)
        assert zero_triple.bottom_char_count == 280
        assert zero_triple.key_bits == 64
        assert zero_triple.name == "triple-64"

    def test_lookups(self, zero_triple: TripleTabulation) -> None:
        """Test the 4 + 14*2 + 280 lookup count."""
        assert zero_triple.lookups_per_key == 312
        with count_lookups() as counter:
            assert zero_triple.eval(0xFFFFFFFFFFFFFFFF) == 0
        assert counter.count == 312

    def test_zero_tables(self, zero_triple: TripleTabulation) -> None:
        """Test that all-zero tables hash everything to zero."""
        keys = np.array([0, 1, 0xDEADBEEFCAFEF00D], dtype=np.uint64)
        assert not zero_triple.eval_many(keys).any()

    def test_rejects_other_shapes(self) -> None:
        """Test that composable levels of the wrong shape are not a triple tabulation."""
        levels = (
            SimpleTabulation.zeros(TabulationParams(2, 2, 2, 2)),
            SimpleTabulation.zeros(TabulationParams(2, 1, 2, 2)),
        )
        with pytest.raises(DomainError, match="triple"):
            TripleTabulation(levels, SimpleTabulation.zeros(TabulationParams(2, 4, 8, 1)))

    @pytest.mark.slow
    def test_generated(self) -> None:
        """Test a generated triple tabulation on both evaluation paths."""
        scheme = TripleTabulation.new(seed=3, range_bits=32)
        keys = np.array([0, 42, 0x0123456789ABCDEF, 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        values = scheme.eval_many(keys)
        assert [int(v) for v in values] == [scheme.eval(int(k)) for k in keys]
        assert int(values.max()) < 1 << 32
