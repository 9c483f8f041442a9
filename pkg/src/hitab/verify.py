"""
Desk-scale ground truth for uniqueness, oddness and independence.

The checkers here enumerate: key subsets for k-uniqueness and k-oddness, every filling of
the second-level tables for exact independence, every rectangle of a two-character simple
tabulation. Each enumeration is guarded by a budget from :class:`hitab.config.Settings`
and raises :class:`~hitab.errors.ResourceError` rather than run for hours.

Subsets are visited size-major, then lexicographically by their sorted key list, so the
witness a checker reports is deterministic.

For schemes far too large to enumerate, :func:`chi_square_independence` samples many
independently seeded members of a family and tests the joint distribution of a few fixed
keys against uniform.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from itertools import combinations, islice
from typing import Any, Callable, Final, Optional, Protocol, Union

import numpy as np
import numpy.typing as npt
from scipy.special import gammaincc

from .config import Settings, get_settings
from .errors import DomainError, ResourceError
from .keyspace import KeyCodec
from .rng import U64, counter_word, derive_seed, trial_seeds
from .schemes.base import HashScheme
from .schemes.presets import get_preset
from .tabulation import SimpleTabulation, TabulationParams, entry_words, unpack_chars

logger = logging.getLogger(__name__)

P_VALUE_BAND: Final = 1e-4
REJECTION_LEVEL: Final = 1e-10
MAX_CHI_SQUARE_KEYS: Final = 4
MIN_EXPECTED_PER_CELL: Final = 5
MAX_EXACT_TABLE_BITS: Final = 24
UNIFORM_ROLE: Final = 11

_BLOCK: Final = 1 << 14


class ViolationKind(Enum):
    NOT_UNIQUE = "not-unique"
    NOT_ODD = "not-odd"
    NOT_INDEPENDENT = "not-independent"
    NOT_EXPANDING = "not-expanding"


# -- explicit functions --------------------------------------------------------------------


class ExplicitFunction:
    """
    A dense table ``f: [|U|] -> Ψ^d`` with ``Ψ = [2^out_char_bits]``.

    ``values[x, j]`` is output character ``j`` of key ``x``.

    Examples:
        >>> f = ExplicitFunction.identity_coordinate(4, out_char_count=2, out_char_bits=2)
        >>> f(3), len(f)
        ((3, 0), 4)
    """

    def __init__(
        self,
        domain_size: int,
        out_char_count: int,
        out_char_bits: int,
        values: Any,
    ) -> None:
        if domain_size < 1 or out_char_count < 1 or out_char_bits < 1:
            raise DomainError(
                f"domain size, output count and output bits must be positive, got "
                f"{domain_size}, {out_char_count}, {out_char_bits}"
            )
        table = np.array(values, dtype=np.uint64)
        if table.shape != (domain_size, out_char_count):
            raise DomainError(
                f"values must have shape {(domain_size, out_char_count)}, got {table.shape}"
            )
        if out_char_bits < 64 and table.size and int(table.max()) >> out_char_bits:
            raise DomainError(f"an output character exceeds {out_char_bits} bits")
        table.flags.writeable = False
        self.domain_size = domain_size
        self.out_char_count = out_char_count
        self.out_char_bits = out_char_bits
        self.values = table

    @classmethod
    def from_tabulation(cls, h: SimpleTabulation) -> ExplicitFunction:
        """Tabulate ``h`` over its whole input universe."""
        p = h.params
        universe = p.input_codec.universe_size
        keys = np.arange(universe, dtype=np.uint64)
        chars = unpack_chars(h.eval_words(keys), p.out_char_bits, p.out_char_count)
        return cls(universe, p.out_char_count, p.out_char_bits, chars)

    @classmethod
    def identity_coordinate(
        cls, domain_size: int, out_char_count: int, out_char_bits: int
    ) -> ExplicitFunction:
        """``f(x)_0 = x`` and every other output character 0; k-unique for every k."""
        if domain_size > 1 << out_char_bits:
            raise DomainError(f"{domain_size} keys do not fit {out_char_bits}-bit characters")
        values = np.zeros((domain_size, out_char_count), dtype=np.uint64)
        values[:, 0] = np.arange(domain_size, dtype=np.uint64)
        return cls(domain_size, out_char_count, out_char_bits, values)

    @classmethod
    def key_characters(cls, codec: KeyCodec) -> ExplicitFunction:
        """``f(x) = (x_0, ..., x_(c-1))``; composing a tabulation after it gives ``h`` itself."""
        keys = np.arange(codec.universe_size, dtype=np.uint64)
        return cls(codec.universe_size, codec.char_count, codec.char_bits, codec.split_many(keys))

    @classmethod
    def constant(
        cls, domain_size: int, out_char_count: int, out_char_bits: int, value: int = 0
    ) -> ExplicitFunction:
        values = np.full((domain_size, out_char_count), value, dtype=np.uint64)
        return cls(domain_size, out_char_count, out_char_bits, values)

    @classmethod
    def from_seed(
        cls, domain_size: int, out_char_count: int, out_char_bits: int, seed: int
    ) -> ExplicitFunction:
        """Pseudorandom characters from the counter-based generator."""
        counters = np.arange(domain_size * out_char_count, dtype=np.uint64)
        words = counter_word(seed, counters) >> np.uint64(64 - out_char_bits)
        return cls(
            domain_size, out_char_count, out_char_bits, words.reshape(domain_size, -1)
        )

    @property
    def alphabet_size(self) -> int:
        """|Ψ|."""
        return 1 << self.out_char_bits

    def __call__(self, key: int) -> tuple[int, ...]:
        if not 0 <= key < self.domain_size:
            raise DomainError(f"key {key} outside [0, {self.domain_size})")
        return tuple(int(v) for v in self.values[key])

    def __len__(self) -> int:
        return self.domain_size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExplicitFunction):
            return NotImplemented
        return self.out_char_bits == other.out_char_bits and np.array_equal(
            self.values, other.values
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"ExplicitFunction(|U|={self.domain_size}, d={self.out_char_count}, "
            f"Ψ=[2^{self.out_char_bits}])"
        )

    def describe(self) -> str:
        return f"U={self.domain_size},d={self.out_char_count},psi_bits={self.out_char_bits}"


# -- verdicts ------------------------------------------------------------------------------


@dataclass(frozen=True)
class ViolationWitness:
    """A key set on which a property fails."""

    kind: ViolationKind
    key_set: tuple[int, ...]
    k: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.key_set:
            raise DomainError("a witness needs at least one key")
        # One key is always unique and always odd.
        if self.kind in (ViolationKind.NOT_UNIQUE, ViolationKind.NOT_ODD) and (
            len(self.key_set) < 2
        ):
            raise DomainError(f"a {self.kind.value} witness needs at least 2 keys")
        if self.k is not None and len(self.key_set) > self.k:
            raise DomainError(
                f"witness of {len(self.key_set)} keys exceeds the checked size k={self.k}"
            )

    def recheck(self, f: ExplicitFunction, epsilon: Fraction = Fraction(1, 2)) -> bool:
        """True iff the violation reproduces on ``f`` (scanned without the vectorised path)."""
        rows = [f(x) for x in self.key_set]
        tallies = [
            {ch: sum(1 for r in rows if r[j] == ch) for ch in {r[j] for r in rows}}
            for j in range(f.out_char_count)
        ]
        if self.kind is ViolationKind.NOT_UNIQUE:
            return all(n != 1 for tally in tallies for n in tally.values())
        if self.kind is ViolationKind.NOT_ODD:
            return all(n % 2 == 0 for tally in tallies for n in tally.values())
        if self.kind is ViolationKind.NOT_EXPANDING:
            distinct = sum(len(tally) for tally in tallies)
            return distinct <= (1 - epsilon) * f.out_char_count * len(rows)
        raise DomainError(f"{self.kind.value} witnesses need the second level to recheck")


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check; truthy iff it passed."""

    check: str
    params: str
    passed: bool
    witness: Optional[ViolationWitness] = None
    counts: tuple[tuple[str, Union[int, float, str]], ...] = ()

    def __bool__(self) -> bool:
        return self.passed

    def to_record(self) -> str:
        """Line-oriented ``key=value`` rendering."""
        lines = [
            f"check={self.check}",
            f"params={self.params}",
            f"verdict={'pass' if self.passed else 'fail'}",
        ]
        if self.witness is not None:
            lines.append(f"witness_kind={self.witness.kind.value}")
            lines.append(f"witness_keys={','.join(str(x) for x in self.witness.key_set)}")
        lines.extend(f"{name}={value}" for name, value in self.counts)
        return "\n".join(lines)


# -- subset enumeration --------------------------------------------------------------------


def _subset_count(n: int, sizes: range) -> int:
    return sum(math.comb(n, s) for s in sizes)


def _check_subsets(n: int, sizes: range, budget: Optional[int], what: str) -> int:
    limit = budget if budget is not None else get_settings().subset_budget
    total = _subset_count(n, sizes)
    if total > limit:
        raise ResourceError(f"{what} enumerates too many key subsets", required=total, budget=limit)
    logger.debug("%s: %d subsets of %d keys", what, total, n)
    return total


def _subset_blocks(n: int, sizes: range) -> Iterator[npt.NDArray[np.intp]]:
    """Subsets of ``range(n)`` as ``(m, s)`` index blocks, size-major and lexicographic."""
    for s in sizes:
        it = combinations(range(n), s)
        while True:
            block = list(islice(it, _BLOCK))
            if not block:
                break
            yield np.array(block, dtype=np.intp)


def _member_counts(values: npt.NDArray[np.uint64], block: npt.NDArray[np.intp]) -> Any:
    """``counts[m, i, j]``: members of subset ``m`` sharing member ``i``'s character ``j``."""
    chosen = values[block]
    equal = chosen[:, :, None, :] == chosen[:, None, :, :]
    return equal.sum(axis=2)


def _first_failure(
    f: ExplicitFunction,
    k: int,
    budget: Optional[int],
    what: str,
    passes: Callable[[Any], Any],
) -> tuple[Optional[tuple[int, ...]], int]:
    sizes = range(2, min(k, f.domain_size) + 1)
    total = _check_subsets(f.domain_size, sizes, budget, what)
    for block in _subset_blocks(f.domain_size, sizes):
        ok = passes(_member_counts(f.values, block))
        if not ok.all():
            bad = block[int(np.argmin(ok))]
            return tuple(int(x) for x in bad), total
    return None, total


def is_k_unique(f: ExplicitFunction, k: int, budget: Optional[int] = None) -> Verdict:
    """
    Check that every key set of size 2..k has an output position character hit once.

    Raises:
        ResourceError: If the subsets exceed ``budget`` (default ``Settings.subset_budget``)
    """
    _check_k(k)
    bad, total = _first_failure(
        f, k, budget, "uniqueness check", lambda counts: (counts == 1).any(axis=(1, 2))
    )
    return _subset_verdict("unique", f, k, bad, ViolationKind.NOT_UNIQUE, total)


def is_k_odd(f: ExplicitFunction, k: int, budget: Optional[int] = None) -> Verdict:
    """
    Check that every key set of size 2..k has an output position character occurring an odd
    number of times.

    Raises:
        ResourceError: If the subsets exceed ``budget``
    """
    _check_k(k)
    bad, total = _first_failure(
        f, k, budget, "oddness check", lambda counts: (counts % 2 == 1).any(axis=(1, 2))
    )
    return _subset_verdict("odd", f, k, bad, ViolationKind.NOT_ODD, total)


def _check_k(k: int) -> None:
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")


def _subset_verdict(
    check: str,
    f: ExplicitFunction,
    k: int,
    bad: Optional[tuple[int, ...]],
    kind: ViolationKind,
    total: int,
) -> Verdict:
    return Verdict(
        check=check,
        params=f"{f.describe()},k={k}",
        passed=bad is None,
        witness=None if bad is None else ViolationWitness(kind, bad, k),
        counts=(("subsets", total),),
    )


def has_expansion(
    f: ExplicitFunction,
    k: int,
    epsilon: Fraction = Fraction(1, 2),
    budget: Optional[int] = None,
) -> Verdict:
    """
    Check that every key set ``X`` with ``1 <= |X| <= k`` has more than ``(1-ε) d |X|``
    distinct output position characters.

    Raises:
        DomainError: If ``epsilon`` is outside ``(0, 1]``
        ResourceError: If the subsets exceed ``budget``
    """
    _check_k(k)
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    sizes = range(1, min(k, f.domain_size) + 1)
    total = _check_subsets(f.domain_size, sizes, budget, "expansion check")
    d = f.out_char_count
    witness = None
    for block in _subset_blocks(f.domain_size, sizes):
        s = block.shape[1]
        chosen = f.values[block]
        equal = chosen[:, :, None, :] == chosen[:, None, :, :]
        earlier = np.tril(np.ones((s, s), dtype=bool), -1)[None, :, :, None]
        repeated = (equal & earlier).any(axis=2)
        distinct = (~repeated).sum(axis=(1, 2))
        # distinct > (1 - eps) d s, kept in integers
        ok = distinct * eps.denominator > (eps.denominator - eps.numerator) * d * s
        if not ok.all():
            bad = block[int(np.argmin(ok))]
            witness = ViolationWitness(
                ViolationKind.NOT_EXPANDING, tuple(int(x) for x in bad), k
            )
            break
    return Verdict(
        check="expansion",
        params=f"{f.describe()},k={k},epsilon={eps}",
        passed=witness is None,
        witness=witness,
        counts=(("subsets", total),),
    )


# -- composition ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompositionReport:
    """
    Outcome of composing ``f`` with per-position functions ``g_i``.

    ``holds`` is False only when both hypotheses hold and the composition is not k-odd.
    """

    hypothesis_holds: bool
    conclusion: Verdict
    composed: ExplicitFunction

    @property
    def holds(self) -> bool:
        return not self.hypothesis_holds or self.conclusion.passed


def compose(f: ExplicitFunction, gs: Sequence[ExplicitFunction]) -> ExplicitFunction:
    """
    ``F(x)_(i, j) = g_i(f(x)_i)_j``, positions ``(i, j)`` in ``i``-major order.

    Raises:
        DomainError: If there is not one ``g_i`` per output position of ``f``, a ``g_i`` is
            not defined on ``f``'s output alphabet, or the ``g_i`` differ in shape
    """
    if len(gs) != f.out_char_count:
        raise DomainError(f"need {f.out_char_count} inner functions, got {len(gs)}")
    first = gs[0]
    for i, g in enumerate(gs):
        if g.domain_size != f.alphabet_size:
            raise DomainError(
                f"g_{i} is defined on {g.domain_size} keys, f outputs {f.alphabet_size} "
                f"characters"
            )
        if (g.out_char_count, g.out_char_bits) != (first.out_char_count, first.out_char_bits):
            raise DomainError(f"g_{i} differs in output shape from g_0")
    blocks = [g.values[f.values[:, i].astype(np.intp)] for i, g in enumerate(gs)]
    return ExplicitFunction(
        f.domain_size,
        f.out_char_count * first.out_char_count,
        first.out_char_bits,
        np.concatenate(blocks, axis=1),
    )


def odd_composition_check(
    f: ExplicitFunction,
    gs: Sequence[ExplicitFunction],
    k: int,
    budget: Optional[int] = None,
) -> CompositionReport:
    """
    Compose and test: if ``f`` and every ``g_i`` are k-odd, the composition must be too.

    The composition is always materialised and checked so it can be inspected when the
    hypotheses fail.
    """
    composed = compose(f, gs)
    hypothesis = bool(is_k_odd(f, k, budget)) and all(is_k_odd(g, k, budget) for g in gs)
    conclusion = is_k_odd(composed, k, budget)
    if hypothesis and not conclusion:
        logger.warning("odd composition failed on %r", f)
    return CompositionReport(hypothesis, conclusion, composed)


# -- exact independence --------------------------------------------------------------------


def exact_independence(
    f: ExplicitFunction,
    k: int,
    r_bits: int,
    budget: Optional[int] = None,
    subset_budget: Optional[int] = None,
) -> Verdict:
    """
    Enumerate every filling of the tables ``r_j: Ψ -> [2^r_bits]`` and check that ``r ∘ f``
    is exactly k-independent.

    ``r(y) = r_0(y_0) XOR ... XOR r_(d-1)(y_(d-1))``. A filling is an integer of
    ``|Ψ| d r_bits`` bits: ``r_j(a)`` is the ``r_bits``-bit field at offset
    ``(j |Ψ| + a) r_bits``. For each key set of size 1..k the joint hash values must hit
    every point of ``R^|X|`` equally often.

    Raises:
        DomainError: If the tables exceed 24 bits
        ResourceError: If the fillings exceed ``budget`` (default ``Settings.filling_budget``)
            or the key sets exceed ``subset_budget``
    """
    _check_k(k)
    if r_bits < 1:
        raise DomainError(f"r_bits must be positive, got {r_bits}")
    table_bits = f.alphabet_size * f.out_char_count * r_bits
    if table_bits > MAX_EXACT_TABLE_BITS:
        raise DomainError(
            f"second-level tables of {table_bits} bits exceed the {MAX_EXACT_TABLE_BITS}-bit "
            f"enumeration limit"
        )
    fillings = 1 << table_bits
    limit = budget if budget is not None else get_settings().filling_budget
    if fillings > limit:
        raise ResourceError(
            "exact independence enumerates too many fillings", required=fillings, budget=limit
        )
    sizes = range(1, min(k, f.domain_size) + 1)
    total = _check_subsets(f.domain_size, sizes, subset_budget, "exact independence")

    fill = np.arange(fillings, dtype=np.uint64)
    mask = np.uint64((1 << r_bits) - 1)
    hashes = np.zeros((f.domain_size, fillings), dtype=np.uint64)
    for x in range(f.domain_size):
        for j in range(f.out_char_count):
            offset = (j * f.alphabet_size + int(f.values[x, j])) * r_bits
            hashes[x] ^= (fill >> np.uint64(offset)) & mask

    witness = None
    for subset in (c for s in sizes for c in combinations(range(f.domain_size), s)):
        cells = 1 << (len(subset) * r_bits)
        joint = np.zeros(fillings, dtype=np.uint64)
        for i, x in enumerate(subset):
            joint |= hashes[x] << np.uint64(i * r_bits)
        counts = np.bincount(joint.astype(np.intp), minlength=cells)
        if fillings % cells or not np.all(counts == fillings // cells):
            witness = ViolationWitness(ViolationKind.NOT_INDEPENDENT, subset, k)
            break
    return Verdict(
        check="independence",
        params=f"{f.describe()},k={k},r_bits={r_bits}",
        passed=witness is None,
        witness=witness,
        counts=(("fillings", fillings), ("subsets", total)),
    )


# -- statistical independence --------------------------------------------------------------


class SeededFamily(Protocol):
    """A hash family sampled by seed: ``sample`` returns ``(len(seeds), len(keys))`` values."""

    @property
    def name(self) -> str: ...

    @property
    def range_bits(self) -> int: ...

    def sample(self, seeds: U64, keys: Sequence[int]) -> npt.NDArray[np.uint64]: ...


@dataclass(frozen=True)
class DoubleTabulationFamily:
    """
    Double tabulation evaluated for many seeds at once without building any table.

    Member ``s`` equals ``DoubleTabulation.new(codec, d, out_bits, s, range_bits)``.
    ``second_level_zero`` replaces the second level by all-zero tables.
    """

    codec: KeyCodec
    d: int
    out_bits: int
    range_bits: int = 64
    second_level_zero: bool = False

    @classmethod
    def from_preset(cls, name: str, **options: Any) -> DoubleTabulationFamily:
        preset = get_preset(name)
        if preset.triple:
            raise DomainError(f"preset {name} is not a double tabulation")
        return cls(preset.codec, preset.out_char_count, preset.out_char_bits, **options)

    @property
    def name(self) -> str:
        broken = "-zero-second" if self.second_level_zero else ""
        return f"double-{self.codec.key_bits}-{self.codec.char_count}{broken}"

    def sample(self, seeds: U64, keys: Sequence[int]) -> npt.NDArray[np.uint64]:
        if self.range_bits > 64:
            raise DomainError("sampled families hash to at most 64 bits")
        first = TabulationParams.for_codec(self.codec, self.out_bits, self.d)
        second = TabulationParams(self.out_bits, self.d, self.range_bits, 1)
        first_seeds = derive_seed(seeds, 0, 0)
        second_seeds = derive_seed(seeds, 1, 0)
        out = np.zeros((len(seeds), len(keys)), dtype=np.uint64)
        if self.second_level_zero:
            return out
        for col, key in enumerate(keys):
            packed = np.zeros((len(seeds), first.words), dtype=np.uint64)
            for i, ch in enumerate(self.codec.split(key)):
                packed ^= entry_words(first, first_seeds, i, ch)
            chars = unpack_chars(packed, self.out_bits, self.d)
            for j in range(self.d):
                out[:, col] ^= entry_words(second, second_seeds, j, chars[:, j])[:, 0]
        return out


@dataclass(frozen=True)
class UniformFamily:
    """Independent uniform words per (seed, key): the calibration control."""

    range_bits: int = 64

    @property
    def name(self) -> str:
        return "uniform"

    def sample(self, seeds: U64, keys: Sequence[int]) -> npt.NDArray[np.uint64]:
        stream = derive_seed(seeds, 0, UNIFORM_ROLE)
        counters = np.arange(len(keys), dtype=np.uint64)
        words = counter_word(stream[:, None], counters[None, :])
        if self.range_bits < 64:
            words &= np.uint64((1 << self.range_bits) - 1)
        return words


@dataclass(frozen=True)
class SchemeFamily:
    """Adapter for any seeded constructor; builds one scheme per trial."""

    factory: Callable[[int], HashScheme]
    range_bits: int
    label: str = "scheme"

    @property
    def name(self) -> str:
        return self.label

    def sample(self, seeds: U64, keys: Sequence[int]) -> npt.NDArray[np.uint64]:
        key_array = np.array(keys, dtype=np.uint64)
        return np.stack([self.factory(int(s)).eval_many(key_array) for s in seeds])


@dataclass(frozen=True)
class ChiSquareResult:
    """Pearson chi-square of the joint hash tuple against uniform."""

    family: str
    keys: tuple[int, ...]
    trials: int
    bins: int
    statistic: float
    dof: int
    p_value: float
    histogram: tuple[int, ...] = field(repr=False, default=())

    def in_band(self, band: float = P_VALUE_BAND) -> bool:
        return band <= self.p_value <= 1 - band

    def to_verdict(self, expect_uniform: bool = True) -> Verdict:
        passed = self.in_band() if expect_uniform else self.p_value < REJECTION_LEVEL
        return Verdict(
            check="chisq" if expect_uniform else "chisq-reject",
            params=(
                f"family={self.family},keys={','.join(hex(k) for k in self.keys)},"
                f"trials={self.trials},bins={self.bins}"
            ),
            passed=passed,
            counts=(
                ("statistic", f"{self.statistic:.6f}"),
                ("dof", self.dof),
                ("p_value", f"{self.p_value:.6e}"),
            ),
        )


def chi_square_independence(
    family: SeededFamily,
    keys: Sequence[int],
    trials: int,
    bins: int = 4,
    master_seed: int = 0,
) -> ChiSquareResult:
    """
    Sample ``trials`` members of ``family`` and test the joint distribution of ``keys``.

    Each hash value is coarsened to its top ``log2(bins)`` bits; the joint cell of a trial
    is the tuple of coarsened values. Trial seeds are the stream keyed by ``master_seed``.

    Raises:
        DomainError: For repeated or too many keys, a bin count that is not a power of two,
            or too few trials (fewer than ``100 * bins`` or ``5`` per joint cell)
    """
    key_tuple = tuple(int(k) for k in keys)
    if not 1 <= len(key_tuple) <= MAX_CHI_SQUARE_KEYS:
        raise DomainError(f"between 1 and {MAX_CHI_SQUARE_KEYS} keys, got {len(key_tuple)}")
    if len(set(key_tuple)) != len(key_tuple):
        raise DomainError("keys must be distinct")
    if bins < 2 or bins & (bins - 1):
        raise DomainError(f"bins must be a power of two >= 2, got {bins}")
    bin_bits = bins.bit_length() - 1
    if bin_bits > family.range_bits:
        raise DomainError(f"{bins} bins exceed the {family.range_bits}-bit range")
    cells = bins ** len(key_tuple)
    if trials < 100 * bins or trials < MIN_EXPECTED_PER_CELL * cells:
        raise DomainError(f"{trials} trials undersample {cells} cells of {bins} bins")

    seeds = trial_seeds(master_seed, trials)
    values = family.sample(seeds, key_tuple)
    coarse = values >> np.uint64(family.range_bits - bin_bits)
    joint = np.zeros(trials, dtype=np.int64)
    for col in range(len(key_tuple)):
        joint = joint * bins + coarse[:, col].astype(np.int64)
    observed = np.bincount(joint, minlength=cells)
    expected = trials / cells
    statistic = float(np.sum((observed - expected) ** 2) / expected)
    dof = cells - 1
    p_value = float(gammaincc(dof / 2, statistic / 2))
    logger.info("chi-square %s: statistic %.3f, p=%.3g", family.name, statistic, p_value)
    return ChiSquareResult(
        family=family.name,
        keys=key_tuple,
        trials=trials,
        bins=bins,
        statistic=statistic,
        dof=dof,
        p_value=p_value,
        histogram=tuple(int(n) for n in observed),
    )


# -- rectangles ----------------------------------------------------------------------------


def rectangle_zero_check(
    h: SimpleTabulation, samples: Optional[int] = None, seed: int = 0
) -> Verdict:
    """
    Check that the ``2^c`` corners of every combinatorial box XOR to zero.

    For ``c = 2`` and characters of at most 4 bits every proper rectangle is checked;
    otherwise ``samples`` boxes (default 1000) are drawn from the generator keyed by
    ``seed``. A box picks two distinct characters per position.

    Raises:
        DomainError: If ``c < 2``
    """
    p = h.params
    if p.char_count < 2:
        raise DomainError(f"boxes need at least 2 character positions, got {p.char_count}")
    if p.char_count == 2 and p.char_bits <= 4 and samples is None:
        low, high = np.array(list(combinations(range(p.table_entries), 2)), dtype=np.intp).T
        a, a2 = np.repeat(low, len(low)), np.repeat(high, len(low))
        b, b2 = np.tile(low, len(low)), np.tile(high, len(low))
        corners = [
            h.eval_chars_many(np.stack([x, y], axis=1))
            for x, y in ((a, b), (a, b2), (a2, b), (a2, b2))
        ]
        acc = corners[0] ^ corners[1] ^ corners[2] ^ corners[3]
        boxes = len(a)
        mode = "exhaustive"
    else:
        boxes = 1000 if samples is None else samples
        picks = counter_word(seed, np.arange(boxes * p.char_count * 2, dtype=np.uint64))
        picks = (picks % np.uint64(p.table_entries)).reshape(boxes, p.char_count, 2)
        # the second character of each pair is shifted off the first so the pair is proper
        shift = picks[:, :, 1] % np.uint64(p.table_entries - 1) + np.uint64(1)
        picks[:, :, 1] = (picks[:, :, 0] + shift) % np.uint64(p.table_entries)
        acc = np.zeros((boxes, p.words), dtype=np.uint64)
        for corner in range(1 << p.char_count):
            sides = [(corner >> i) & 1 for i in range(p.char_count)]
            chars = np.stack([picks[:, i, side] for i, side in enumerate(sides)], axis=1)
            acc ^= h.eval_chars_many(chars)
        mode = "sampled"
    nonzero = int(np.count_nonzero(acc.any(axis=1)))
    return Verdict(
        check="rectangle",
        params=f"{h.name},mode={mode}",
        passed=nonzero == 0,
        counts=(("boxes", boxes), ("nonzero", nonzero)),
    )


# -- suites --------------------------------------------------------------------------------


def _suite_uniqueness(settings: Settings, trials: int, seed: int) -> list[Verdict]:
    f = ExplicitFunction.identity_coordinate(16, out_char_count=2, out_char_bits=4)
    return [
        is_k_unique(f, 4, settings.subset_budget),
        has_expansion(f, 4, Fraction(1, 2), settings.subset_budget),
    ]


def _suite_oddness(settings: Settings, trials: int, seed: int) -> list[Verdict]:
    f = ExplicitFunction.identity_coordinate(16, out_char_count=2, out_char_bits=4)
    g = ExplicitFunction.identity_coordinate(16, out_char_count=2, out_char_bits=4)
    report = odd_composition_check(f, [g, g], 4, settings.subset_budget)
    composition = Verdict(
        check="odd-composition",
        params=f"{f.describe()},k=4",
        passed=report.holds and report.hypothesis_holds,
    )
    return [is_k_odd(f, 4, settings.subset_budget), composition]


def _expect_failure(verdict: Verdict) -> Verdict:
    """A check that must fail, recorded as passing iff it did (the witness is kept)."""
    return replace(verdict, check=f"{verdict.check}-expected-fail", passed=not verdict.passed)


def _suite_lemma1(settings: Settings, trials: int, seed: int) -> list[Verdict]:
    unique = ExplicitFunction.identity_coordinate(4, out_char_count=2, out_char_bits=2)
    simple = ExplicitFunction.key_characters(KeyCodec(char_bits=1, char_count=2))
    fillings, subsets = settings.filling_budget, settings.subset_budget
    return [
        exact_independence(unique, 4, 1, fillings, subsets),
        exact_independence(simple, 3, 1, fillings, subsets),
        # Simple tabulation is not 4-independent: the four keys of a rectangle cancel.
        _expect_failure(exact_independence(simple, 4, 1, fillings, subsets)),
    ]


def _suite_rectangle(settings: Settings, trials: int, seed: int) -> list[Verdict]:
    seeds = trial_seeds(seed, 100)
    square = TabulationParams(2, 2, 8, 1)
    verdicts = [
        rectangle_zero_check(SimpleTabulation.generate(square, int(s), settings))
        for s in seeds
    ]
    nonzero = sum(int(dict(v.counts)["nonzero"]) for v in verdicts)
    boxes = sum(int(dict(v.counts)["boxes"]) for v in verdicts)
    cube = SimpleTabulation.generate(TabulationParams(4, 3, 16, 1), seed, settings)
    return [
        Verdict(
            check="rectangle",
            params=f"{square.char_bits}x{square.char_count},seeds=100,mode=exhaustive",
            passed=nonzero == 0,
            counts=(("boxes", boxes), ("nonzero", nonzero)),
        ),
        rectangle_zero_check(cube, samples=1000, seed=seed),
    ]


def _suite_chisq(settings: Settings, trials: int, seed: int) -> list[Verdict]:
    keys = (0x00000000, 0x00010001, 0xDEADBEEF)
    honest = DoubleTabulationFamily.from_preset("32-2")
    broken = DoubleTabulationFamily.from_preset("32-2", second_level_zero=True)
    return [
        chi_square_independence(honest, keys, trials, 4, seed).to_verdict(),
        chi_square_independence(UniformFamily(), keys, trials, 4, seed).to_verdict(),
        chi_square_independence(broken, keys, trials, 4, seed).to_verdict(expect_uniform=False),
    ]


Suite = Callable[[Settings, int, int], list[Verdict]]

SUITES: Final[dict[str, Suite]] = {
    "uniqueness": _suite_uniqueness,
    "oddness": _suite_oddness,
    "lemma1": _suite_lemma1,
    "rectangle": _suite_rectangle,
    "chisq": _suite_chisq,
}

# Older name of the lemma1 suite; "all" runs it once.
SUITE_ALIASES: Final[dict[str, str]] = {"independence": "lemma1"}


def run_suite(
    name: str,
    settings: Optional[Settings] = None,
    trials: int = 100_000,
    seed: int = 0,
) -> list[Verdict]:
    """
    Run one named suite, or every suite for ``"all"``.

    Raises:
        DomainError: For an unknown suite name
        ResourceError: If a check exceeds its budget
    """
    settings = settings or get_settings()
    if name == "all":
        return [v for suite in SUITES.values() for v in suite(settings, trials, seed)]
    try:
        suite = SUITES[SUITE_ALIASES.get(name, name)]
    except KeyError:
        raise DomainError(
            f"unknown suite {name!r}; choose one of {', '.join([*SUITES, 'all'])}"
        ) from None
    return suite(settings, trials, seed)
