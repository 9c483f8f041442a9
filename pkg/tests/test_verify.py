"""Tests for the enumeration checkers and the statistical oracle."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitab.config import Settings
from hitab.errors import DomainError, ResourceError
from hitab.keyspace import KeyCodec
from hitab.rng import trial_seeds
from hitab.schemes import DoubleTabulation, PolynomialHash
from hitab.tabulation import SimpleTabulation, TabulationParams
from hitab.verify import (
    SUITE_ALIASES,
    SUITES,
    DoubleTabulationFamily,
    ExplicitFunction,
    SchemeFamily,
    UniformFamily,
    Verdict,
    ViolationKind,
    ViolationWitness,
    chi_square_independence,
    compose,
    exact_independence,
    has_expansion,
    is_k_odd,
    is_k_unique,
    odd_composition_check,
    rectangle_zero_check,
    run_suite,
)

CHI_KEYS = (0x00000000, 0x00010001, 0xDEADBEEF)


@pytest.fixture(scope="module")
def unique16() -> ExplicitFunction:
    """Sixteen keys, the key itself in position 0 and zero in position 1."""
    return ExplicitFunction.identity_coordinate(16, out_char_count=2, out_char_bits=4)


@pytest.fixture(scope="module")
def square() -> ExplicitFunction:
    """The two one-bit characters of a 2-bit key: the shape of simple tabulation."""
    return ExplicitFunction.key_characters(KeyCodec(char_bits=1, char_count=2))


class TestExplicitFunction:
    """Test cases for ExplicitFunction."""

    def test_identity_coordinate(self) -> None:
        """Test the values and the call surface."""
        f = ExplicitFunction.identity_coordinate(4, out_char_count=2, out_char_bits=2)
        assert [f(x) for x in range(4)] == [(0, 0), (1, 0), (2, 0), (3, 0)]
        assert len(f) == 4
        assert f.alphabet_size == 4

    def test_from_tabulation(self) -> None:
        """Test that tabulating a simple tabulation reproduces its output characters."""
        h = SimpleTabulation.generate(TabulationParams(2, 2, 3, 2), seed=9)
        f = ExplicitFunction.from_tabulation(h)
        assert len(f) == 16
        for x in range(16):
            value = h.eval(x)
            assert f(x) == (value & 7, value >> 3)

    def test_from_seed_is_reproducible(self) -> None:
        """Test that seeded functions are deterministic and in range."""
        f = ExplicitFunction.from_seed(8, 3, 2, seed=4)
        assert f == ExplicitFunction.from_seed(8, 3, 2, seed=4)
        assert f != ExplicitFunction.from_seed(8, 3, 2, seed=5)
        assert int(f.values.max()) < 4

    def test_values_are_read_only(self, unique16: ExplicitFunction) -> None:
        """Test that the table cannot be modified in place."""
        with pytest.raises(ValueError):
            unique16.values[0, 0] = 1

    @pytest.mark.parametrize(
        "args",
        [
            (0, 1, 1, []),
            (2, 1, 1, [[0], [1], [0]]),
            (2, 1, 1, [[0], [2]]),
        ],
    )
    def test_invalid(self, args: tuple) -> None:
        """Test shape and width checks."""
        with pytest.raises(DomainError):
            ExplicitFunction(*args)

    def test_identity_needs_room(self) -> None:
        """Test that the keys must fit the output characters."""
        with pytest.raises(DomainError):
            ExplicitFunction.identity_coordinate(5, out_char_count=1, out_char_bits=2)

    def test_call_out_of_domain(self, unique16: ExplicitFunction) -> None:
        """Test that keys outside the domain are rejected."""
        with pytest.raises(DomainError):
            unique16(16)


class TestSubsetCheckers:
    """Test cases for is_k_unique, is_k_odd and has_expansion."""

    def test_identity_passes(self, unique16: ExplicitFunction) -> None:
        """Test that a coordinate holding the key makes every set unique and odd."""
        unique = is_k_unique(unique16, 4)
        assert unique
        assert unique.witness is None
        assert dict(unique.counts)["subsets"] == 120 + 560 + 1820
        assert is_k_odd(unique16, 4)
        assert has_expansion(unique16, 4)

    def test_constant_fails_on_first_pair(self) -> None:
        """Test that the reported witness is the first pair in enumeration order."""
        f = ExplicitFunction.constant(4, 2, 2)
        for verdict, kind in (
            (is_k_unique(f, 3), ViolationKind.NOT_UNIQUE),
            (is_k_odd(f, 3), ViolationKind.NOT_ODD),
            (has_expansion(f, 2), ViolationKind.NOT_EXPANDING),
        ):
            assert not verdict
            assert verdict.witness == ViolationWitness(kind, (0, 1))
            assert verdict.witness.recheck(f)

    def test_square_fails_at_four(self, square: ExplicitFunction) -> None:
        """Test that the full square has every character twice."""
        assert is_k_unique(square, 3)
        assert is_k_odd(square, 3)
        unique, odd = is_k_unique(square, 4), is_k_odd(square, 4)
        assert unique.witness is not None and unique.witness.key_set == (0, 1, 2, 3)
        assert odd.witness is not None and odd.witness.key_set == (0, 1, 2, 3)

    def test_k_one_is_trivial(self) -> None:
        """Test that no subsets are enumerated for k = 1."""
        verdict = is_k_unique(ExplicitFunction.constant(4, 1, 1), 1)
        assert verdict
        assert dict(verdict.counts)["subsets"] == 0

    def test_budget(self, unique16: ExplicitFunction) -> None:
        """Test that too many subsets raise instead of running."""
        with pytest.raises(ResourceError) as info:
            is_k_unique(unique16, 4, budget=100)
        assert info.value.required == 2500

    @pytest.mark.parametrize("epsilon", [Fraction(0), Fraction(3, 2)])
    def test_expansion_epsilon(self, unique16: ExplicitFunction, epsilon: Fraction) -> None:
        """Test the epsilon range."""
        with pytest.raises(DomainError):
            has_expansion(unique16, 2, epsilon)

    def test_invalid_k(self, unique16: ExplicitFunction) -> None:
        """Test that k must be positive."""
        with pytest.raises(DomainError):
            is_k_odd(unique16, 0)

    @settings(max_examples=500, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**64 - 1))
    def test_unique_implies_odd(self, seed: int) -> None:
        """Property test: a character seen once is seen an odd number of times."""
        f = ExplicitFunction.from_seed(8, 2, 4, seed)
        if is_k_unique(f, 3):
            assert is_k_odd(f, 3)


class TestWitness:
    """Test cases for ViolationWitness."""

    def test_recheck_rejects_false_witness(self, unique16: ExplicitFunction) -> None:
        """Test that a witness that does not reproduce is reported as such."""
        assert not ViolationWitness(ViolationKind.NOT_UNIQUE, (0, 1)).recheck(unique16)

    def test_independence_needs_second_level(self, unique16: ExplicitFunction) -> None:
        """Test that independence witnesses cannot be rechecked on f alone."""
        with pytest.raises(DomainError):
            ViolationWitness(ViolationKind.NOT_INDEPENDENT, (0, 1)).recheck(unique16)

    def test_empty(self) -> None:
        """Test that a witness needs keys."""
        with pytest.raises(DomainError):
            ViolationWitness(ViolationKind.NOT_ODD, ())

    @pytest.mark.parametrize("kind", [ViolationKind.NOT_UNIQUE, ViolationKind.NOT_ODD])
    def test_single_key(self, kind: ViolationKind) -> None:
        """Test that one key cannot witness non-uniqueness or non-oddness."""
        with pytest.raises(DomainError, match="at least 2"):
            ViolationWitness(kind, (3,))

    def test_larger_than_k(self) -> None:
        """Test that a witness may not exceed the subset size that was checked."""
        with pytest.raises(DomainError, match="k=2"):
            ViolationWitness(ViolationKind.NOT_ODD, (0, 1, 2), k=2)
        assert ViolationWitness(ViolationKind.NOT_ODD, (0, 1, 2), k=3).k == 3

    def test_checker_witness_carries_k(self, square: ExplicitFunction) -> None:
        """Test that checkers record the k they enumerated up to."""
        verdict = exact_independence(square, 4, 1)
        assert verdict.witness is not None
        assert verdict.witness.k == 4

    def test_record(self) -> None:
        """Test the key=value rendering of a failed verdict."""
        verdict = Verdict(
            "odd",
            "U=4,k=2",
            False,
            ViolationWitness(ViolationKind.NOT_ODD, (0, 1)),
            (("subsets", 6),),
        )
        assert verdict.to_record() == (
            "check=odd\nparams=U=4,k=2\nverdict=fail\n"
            "witness_kind=not-odd\nwitness_keys=0,1\nsubsets=6"
        )


class TestComposition:
    """Test cases for compose and odd_composition_check."""

    def test_compose_positions(self) -> None:
        """Test that position (i, j) holds g_i applied to f's character i."""
        f = ExplicitFunction(2, 2, 1, [[0, 1], [1, 1]])
        g0 = ExplicitFunction(2, 1, 3, [[5], [6]])
        g1 = ExplicitFunction(2, 1, 3, [[2], [7]])
        composed = compose(f, [g0, g1])
        assert composed(0) == (5, 7)
        assert composed(1) == (6, 7)

    def test_compose_shape_errors(self, unique16: ExplicitFunction) -> None:
        """Test the count and domain checks on the inner functions."""
        g = ExplicitFunction.identity_coordinate(16, 1, 4)
        with pytest.raises(DomainError):
            compose(unique16, [g])
        with pytest.raises(DomainError):
            compose(unique16, [g, ExplicitFunction.identity_coordinate(8, 1, 4)])
        with pytest.raises(DomainError):
            compose(unique16, [g, ExplicitFunction.identity_coordinate(16, 2, 4)])

    def test_identity_composition(self, unique16: ExplicitFunction) -> None:
        """Test that odd functions compose to an odd function."""
        report = odd_composition_check(unique16, [unique16, unique16], 3)
        assert report.hypothesis_holds
        assert report.holds
        assert report.composed.out_char_count == 4

    @settings(max_examples=500, deadline=None)
    @given(seeds=st.lists(st.integers(min_value=0, max_value=2**64 - 1), min_size=3, max_size=3))
    def test_random_compositions(self, seeds: list) -> None:
        """Property test: whenever the hypotheses hold, so does the conclusion."""
        f = ExplicitFunction.from_seed(8, 2, 2, seeds[0])
        gs = [ExplicitFunction.from_seed(4, 2, 2, s) for s in seeds[1:]]
        assert odd_composition_check(f, gs, 3).holds


class TestExactIndependence:
    """Test cases for exact_independence."""

    def test_unique_first_level_is_independent(self) -> None:
        """Test a 4-unique function under every one-bit filling."""
        f = ExplicitFunction.identity_coordinate(4, out_char_count=2, out_char_bits=2)
        verdict = exact_independence(f, 4, 1)
        assert verdict
        assert dict(verdict.counts) == {"fillings": 256, "subsets": 15}

    def test_square_is_three_independent(self, square: ExplicitFunction) -> None:
        """Test simple tabulation on a 2x2 key square: 3-independent, not 4."""
        assert exact_independence(square, 3, 1)
        verdict = exact_independence(square, 4, 1)
        assert not verdict
        assert verdict.witness == ViolationWitness(ViolationKind.NOT_INDEPENDENT, (0, 1, 2, 3))

    def test_table_limit(self, unique16: ExplicitFunction) -> None:
        """Test that tables over 24 bits are refused outright."""
        with pytest.raises(DomainError):
            exact_independence(unique16, 2, 1)

    def test_filling_budget(self) -> None:
        """Test that too many fillings raise."""
        f = ExplicitFunction.identity_coordinate(4, out_char_count=2, out_char_bits=2)
        with pytest.raises(ResourceError) as info:
            exact_independence(f, 2, 2, budget=1000)
        assert info.value.required == 1 << 16

    def test_invalid_range(self, square: ExplicitFunction) -> None:
        """Test that the range needs at least one bit."""
        with pytest.raises(DomainError):
            exact_independence(square, 2, 0)


class TestRectangles:
    """Test cases for rectangle_zero_check."""

    def test_exhaustive(self) -> None:
        """Test every proper box of a 2x2-bit simple tabulation."""
        h = SimpleTabulation.generate(TabulationParams(2, 2, 8, 1), seed=3)
        verdict = rectangle_zero_check(h)
        assert verdict
        assert dict(verdict.counts) == {"boxes": 36, "nonzero": 0}
        assert "exhaustive" in verdict.params

    def test_sampled(self) -> None:
        """Test sampled boxes over three positions."""
        h = SimpleTabulation.generate(TabulationParams(4, 3, 16, 1), seed=3)
        verdict = rectangle_zero_check(h, samples=200, seed=1)
        assert verdict
        assert dict(verdict.counts)["boxes"] == 200
        assert "sampled" in verdict.params

    def test_needs_two_positions(self) -> None:
        """Test that a single position has no boxes."""
        with pytest.raises(DomainError):
            rectangle_zero_check(SimpleTabulation.zeros(TabulationParams(4, 1, 8, 1)))


class TestChiSquare:
    """Test cases for the statistical independence oracle."""

    def test_family_matches_built_scheme(self) -> None:
        """Test that a sampled member equals the double tabulation built from its seed."""
        family = DoubleTabulationFamily(KeyCodec(4, 2), 4, 4, range_bits=16)
        seeds = trial_seeds(7, 3)
        keys = [0, 0x5A, 0xFF]
        values = family.sample(seeds, keys)
        for row, seed in zip(values, seeds):
            scheme = DoubleTabulation.new(KeyCodec(4, 2), 4, 4, int(seed), range_bits=16)
            assert [int(v) for v in row] == [scheme.eval(k) for k in keys]

    def test_scheme_family(self) -> None:
        """Test the per-trial adapter."""
        family = SchemeFamily(lambda s: PolynomialHash.new(k=2, seed=s, range_bits=16), 16)
        values = family.sample(trial_seeds(1, 4), [3, 9])
        assert values.shape == (4, 2)
        assert int(values[2, 1]) == PolynomialHash.new(
            k=2, seed=int(trial_seeds(1, 4)[2]), range_bits=16
        ).eval(9)

    def test_uniform_control(self) -> None:
        """Test that independent uniform values land in the acceptance band."""
        result = chi_square_independence(UniformFamily(), CHI_KEYS, trials=6400)
        assert result.dof == 63
        assert sum(result.histogram) == 6400
        assert result.to_verdict()

    def test_broken_second_level_is_rejected(self) -> None:
        """Test that an all-zero second level is caught."""
        family = DoubleTabulationFamily.from_preset("32-2", second_level_zero=True)
        result = chi_square_independence(family, CHI_KEYS, trials=2000)
        assert result.p_value < 1e-10
        assert not result.to_verdict()
        assert result.to_verdict(expect_uniform=False)
        assert family.name == "double-32-2-zero-second"

    @pytest.mark.slow
    def test_double_32_2(self) -> None:
        """Test the 32-bit double tabulation family at 10^5 trials."""
        family = DoubleTabulationFamily.from_preset("32-2")
        assert chi_square_independence(family, CHI_KEYS, trials=100_000).in_band()

    @pytest.mark.parametrize(
        "keys, trials, bins",
        [
            ((1, 1), 1000, 4),
            ((1, 2, 3, 4, 5), 100_000, 2),
            ((1, 2), 1000, 3),
            ((1, 2), 100, 4),
        ],
    )
    def test_invalid(self, keys: tuple, trials: int, bins: int) -> None:
        """Test key, bin and trial checks."""
        with pytest.raises(DomainError):
            chi_square_independence(UniformFamily(), keys, trials, bins)

    def test_bins_wider_than_range(self) -> None:
        """Test that bins must fit in the range."""
        with pytest.raises(DomainError):
            chi_square_independence(UniformFamily(range_bits=1), (1,), 1000, bins=4)

    def test_triple_preset_is_not_a_double_family(self) -> None:
        """Test that the triple preset cannot be sampled as a double tabulation."""
        with pytest.raises(DomainError):
            DoubleTabulationFamily.from_preset("64-4-triple")


class TestSuites:
    """Test cases for run_suite."""

    @pytest.mark.parametrize("name", ["uniqueness", "oddness", "lemma1", "rectangle"])
    def test_suite_passes(self, name: str) -> None:
        """Test that each enumeration suite passes under the default budgets."""
        verdicts = run_suite(name)
        assert verdicts
        assert all(verdicts)

    def test_chisq_suite(self) -> None:
        """Test the three chi-square verdicts at a desk-sized trial count."""
        verdicts = run_suite("chisq", trials=6400)
        assert [v.check for v in verdicts] == ["chisq", "chisq", "chisq-reject"]
        assert verdicts[2]

    def test_unknown(self) -> None:
        """Test that unknown names list the choices."""
        with pytest.raises(DomainError, match="all"):
            run_suite("bogus")

    def test_budget_is_honoured(self) -> None:
        """Test that the suite reads its budgets from the settings passed in."""
        with pytest.raises(ResourceError):
            run_suite("uniqueness", Settings(subset_budget=10))

    def test_names(self) -> None:
        """Test the registered suite names."""
        assert list(SUITES) == ["uniqueness", "oddness", "lemma1", "rectangle", "chisq"]
        assert SUITE_ALIASES == {"independence": "lemma1"}


    def test_lemma1_records_the_four_key_failure(self) -> None:
        """Test that simple tabulation failing 4-independence is a passing, witnessed verdict."""
        verdicts = run_suite("lemma1")
        assert [v.check for v in verdicts] == [
            "independence",
            "independence",
            "independence-expected-fail",
        ]
        expected = verdicts[2]
        assert expected
        assert expected.witness is not None
        assert expected.witness.key_set == (0, 1, 2, 3)
        assert "verdict=pass" in expected.to_record()

    def test_alias_runs_the_same_checks(self) -> None:
        """Test that the older suite name still resolves."""
        assert run_suite("independence") == run_suite("lemma1")

    def test_all_runs_each_suite_once(self) -> None:
        """Test that the alias does not make "all" repeat a suite."""
        verdicts = run_suite("all", trials=6400)
        assert sum(v.check == "independence-expected-fail" for v in verdicts) == 1
