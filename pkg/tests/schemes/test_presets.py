"""Tests for the named parameter sets."""

from decimal import Decimal
from fractions import Fraction

import pytest

from hitab.bounds import BoundParams
from hitab.config import Settings
from hitab.errors import DomainError, ResourceError
from hitab.keyspace import KeyCodec
from hitab.schemes import PRESETS, DoubleTabulation, get_preset


class TestPresets:
    """Test cases for the preset table."""

    def test_names(self) -> None:
        """Test the three preset names."""
        assert list(PRESETS) == ["32-2", "64-3", "64-4-triple"]

    def test_unknown(self) -> None:
        """Test that unknown names list the choices."""
        with pytest.raises(DomainError, match="32-2"):
            get_preset("128-5")

    @pytest.mark.parametrize(
        "name, expected",
        [
            ("32-2", BoundParams(2, 20, 1 << 16, 1 << 16, 100)),
            ("64-3", BoundParams(3, 24, 1 << 22, 1 << 22, 100)),
            ("64-4-triple", BoundParams(4, 14, 1 << 16, 1 << 32, 100)),
        ],
    )
    def test_bound_params(self, name: str, expected: BoundParams) -> None:
        """Test the certificate inputs of each preset."""
        assert get_preset(name).bound_params() == expected

    def test_bound_params_epsilon(self) -> None:
        """Test that epsilon is passed through."""
        assert get_preset("32-2").bound_params(Fraction(1, 2)).epsilon == Fraction(1, 2)

    def test_claims(self) -> None:
        """Test the claimed failure bounds and key widths."""
        assert get_preset("32-2").claimed_failure_bound == Decimal("1.5e-42")
        assert get_preset("64-3").codec == KeyCodec(22, 3)
        assert get_preset("64-3").key_bits == 64
        assert get_preset("64-4-triple").triple

    def test_64_3_exceeds_default_budget(self) -> None:
        """Test that the 64-bit double preset is refused under 1 GiB."""
        with pytest.raises(ResourceError) as info:
            get_preset("64-3").build(seed=1, settings=Settings())
        assert 1_700_000_000 < info.value.required < 1_720_000_000

    def test_build_32_2(self) -> None:
        """Test that the 32-bit preset builds a double tabulation."""
        scheme = get_preset("32-2").build(seed=5, range_bits=32)
        assert isinstance(scheme, DoubleTabulation)
        assert scheme.name == "double-32-2"
        assert scheme.lookups_per_key == 22
        assert scheme.eval(0xDEADBEEF) < 1 << 32
