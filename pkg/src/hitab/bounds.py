"""
Failure certificates for k-uniqueness of a random simple tabulation ``h: Φ^c -> Ψ^d``.

For a list of ``ℓ`` input position characters with ``c'`` active positions, two closed-form
bounds are available:

* the code-counting bound
  ``P(ℓ, c') = (e c'|Φ|/ℓ)^ℓ (e (ℓ/c')^(2c'-1) / (ε 2^(c'-1) |Ψ|))^m``
* the key-coding bound
  ``Q(ℓ, c') = (e c'|Φ|/ℓ)^ℓ (e (ℓ/c')^c' / k)^k (e k² c' / (ε ℓ |Ψ|))^m``

with ``m = ceil(qℓ)`` equations and ``q = ε d / (2c)``. The certificate is

    sum over c' = 1..c of  C(c, c') * sum over ℓ = 2c'..kc' of  min(P(ℓ, c'), Q(ℓ, c'))

Everything is evaluated in natural-log space, once in binary floating point (accumulated
with ``scipy.special.logsumexp``) and once with 50-digit decimals; the two must agree to a
relative 1e-6 or the report is flagged. The decimal value is the one reported, rounded up
at two significant digits so an upper bound is never under-reported.

The asymptotic estimate ``|Φ|² / |Ψ|^(εd/(2c))`` is advisory only; the sum above is the
certified bound.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Union

from rich.table import Table
from scipy.special import logsumexp

from .errors import DomainError

logger = logging.getLogger(__name__)

DECIMAL_PRECISION = 50
GUARD_TOLERANCE = 1e-6
SIGNIFICANT_DIGITS = 2

NEG_INF = Decimal("-Infinity")

Real = Union[float, Decimal]


class ActivePositionConvention(Enum):
    """Which ``c`` enters ``q = εd/(2c)`` when only ``c'`` positions are active."""

    GLOBAL_Q = "global-q"  # q keeps the full c; c' everywhere else
    ACTIVE_Q = "active-q"  # c' everywhere, q included


class ExponentForm(Enum):
    CEILING = "ceiling"  # m = ceil(qℓ)
    RELAXED = "relaxed"  # m = qℓ


class BoundMode(Enum):
    TOTAL = "total"  # min(P, Q), ℓ up to kc'
    P_ONLY = "p-only"  # P alone, ℓ up to an explicit ℓ*


class TermChoice(Enum):
    P = "P"
    Q = "Q"


def integer_root(n: int, r: int) -> int:
    """
    ``floor(n^(1/r))`` computed exactly.

    Examples:
        >>> integer_root(1 << 32, 20), integer_root(1 << 10, 5), integer_root(80, 4)
        (3, 4, 2)
    """
    if n < 0 or r < 1:
        raise DomainError(f"integer_root needs n >= 0 and r >= 1, got {n}, {r}")
    if n < 2 or r == 1:
        return n
    x = 1 << -(-n.bit_length() // r)
    while True:
        y = ((r - 1) * x + n // x ** (r - 1)) // r
        if y >= x:
            return x
        x = y


@dataclass(frozen=True)
class BoundParams:
    """
    Inputs of the certificate.

    Attributes:
        c: Input characters per key
        d: Output characters
        phi_size: Input alphabet size ``|Φ|``
        psi_size: Output alphabet size ``|Ψ|``
        k: Uniqueness target
        epsilon: Fraction in (0, 1]; 1 for plain uniqueness
    """

    c: int
    d: int
    phi_size: int
    psi_size: int
    k: int
    epsilon: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        for name in ("c", "d", "phi_size", "psi_size", "k"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        eps = Fraction(self.epsilon)
        if not 0 < eps <= 1:
            raise DomainError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        object.__setattr__(self, "epsilon", eps)

    def q(self, c_q: Optional[int] = None) -> Fraction:
        """``εd / (2 c_q)``; ``c_q`` defaults to ``c``."""
        return self.epsilon * self.d / (2 * (c_q or self.c))

    def describe(self) -> str:
        return (
            f"c={self.c},d={self.d},phi={self.phi_size},psi={self.psi_size},k={self.k},"
            f"epsilon={self.epsilon}"
        )


# -- closed forms ------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _dec_ln(n: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION + 10
        return Decimal(n).ln()


def _ln_fraction_dec(x: Fraction) -> Decimal:
    return _dec_ln(x.numerator) - _dec_ln(x.denominator)


def _ln_fraction_float(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def _to_dec(x: Fraction) -> Decimal:
    return Decimal(x.numerator) / Decimal(x.denominator)


@dataclass(frozen=True)
class _Backend:
    ln: Callable[[Fraction], Real]
    num: Callable[[Fraction], Real]


_FLOAT = _Backend(ln=_ln_fraction_float, num=float)
_DECIMAL = _Backend(ln=_ln_fraction_dec, num=_to_dec)


def _equations(
    ell: int,
    c_active: int,
    params: BoundParams,
    convention: ActivePositionConvention,
    exponent: ExponentForm,
) -> Fraction:
    c_q = c_active if convention is ActivePositionConvention.ACTIVE_Q else params.c
    m = params.q(c_q) * ell
    return Fraction(math.ceil(m)) if exponent is ExponentForm.CEILING else m


def _list_term(ell: int, c_active: int, params: BoundParams, be: _Backend) -> Real:
    ln = be.ln
    return be.num(Fraction(ell)) * (
        1 + ln(Fraction(c_active)) + ln(Fraction(params.phi_size)) - ln(Fraction(ell))
    )


def _log_p(
    ell: int, c_active: int, params: BoundParams, m: Fraction, be: _Backend
) -> Real:
    ln = be.ln
    per_equation = (
        1
        + (2 * c_active - 1) * (ln(Fraction(ell)) - ln(Fraction(c_active)))
        - ln(params.epsilon)
        - (c_active - 1) * ln(Fraction(2))
        - ln(Fraction(params.psi_size))
    )
    return _list_term(ell, c_active, params, be) + be.num(m) * per_equation


def _log_q(
    ell: int, c_active: int, params: BoundParams, m: Fraction, be: _Backend
) -> Real:
    ln, k = be.ln, params.k
    key_term = k * (
        1 + c_active * (ln(Fraction(ell)) - ln(Fraction(c_active))) - ln(Fraction(k))
    )
    per_equation = (
        1
        + 2 * ln(Fraction(k))
        + ln(Fraction(c_active))
        - ln(params.epsilon)
        - ln(Fraction(ell))
        - ln(Fraction(params.psi_size))
    )
    return _list_term(ell, c_active, params, be) + key_term + be.num(m) * per_equation


def _clamp_dec(value: Real, clamp: bool = True) -> Decimal:
    value = Decimal(value)
    return min(value, Decimal(0)) if clamp else value


def _clamp_float(value: Real) -> float:
    return min(float(value), 0.0)


def p_bound(
    ell: int,
    c_active: int,
    params: BoundParams,
    *,
    convention: ActivePositionConvention = ActivePositionConvention.GLOBAL_Q,
    exponent: ExponentForm = ExponentForm.CEILING,
    clamp: bool = True,
) -> Decimal:
    """
    Natural log of the code-counting bound for lists of ``ell`` characters.

    Raises:
        DomainError: If ``ell < 2 * c_active`` or ``c_active`` is outside ``[1, c]``
    """
    _check_active(c_active, params)
    if ell < 2 * c_active:
        raise DomainError(f"ℓ={ell} is below 2c'={2 * c_active}")
    m = _equations(ell, c_active, params, convention, exponent)
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        return _clamp_dec(_log_p(ell, c_active, params, m, _DECIMAL), clamp)


def q_bound(
    ell: int,
    c_active: int,
    params: BoundParams,
    *,
    convention: ActivePositionConvention = ActivePositionConvention.GLOBAL_Q,
    exponent: ExponentForm = ExponentForm.CEILING,
    clamp: bool = True,
) -> Decimal:
    """
    Natural log of the key-coding bound for lists of ``ell`` characters.

    Raises:
        DomainError: If ``ell`` lies outside ``[2c', k c']``
    """
    _check_active(c_active, params)
    if not 2 * c_active <= ell <= params.k * c_active:
        raise DomainError(f"ℓ={ell} outside [{2 * c_active}, {params.k * c_active}]")
    m = _equations(ell, c_active, params, convention, exponent)
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        return _clamp_dec(_log_q(ell, c_active, params, m, _DECIMAL), clamp)


def _check_active(c_active: int, params: BoundParams) -> None:
    if not 1 <= c_active <= params.c:
        raise DomainError(f"active positions {c_active} outside [1, {params.c}]")


# -- the total -----------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    """One ``ℓ`` of an inner sum: both logs (``log_q`` is None in P-only mode) and the winner."""

    ell: int
    log_p: Decimal
    log_q: Optional[Decimal]
    choice: TermChoice

    @property
    def log_value(self) -> Decimal:
        return self.log_q if self.choice is TermChoice.Q and self.log_q is not None else self.log_p


@dataclass(frozen=True)
class Subtotal:
    """Inner sum for ``c'`` active positions, weighted by ``C(c, c')``."""

    active: int
    binomial: int
    terms: tuple[Term, ...]
    log_subtotal: Decimal

    @property
    def p_wins(self) -> int:
        return sum(1 for t in self.terms if t.choice is TermChoice.P)

    @property
    def q_wins(self) -> int:
        return len(self.terms) - self.p_wins


@dataclass(frozen=True)
class BoundReport:
    """
    The evaluated certificate with its breakdown and the conventions used.

    ``total_log`` is the 50-digit natural log of the sum; ``total_log_float`` the binary
    floating-point evaluation used by the precision guard. ``vacuous`` is set when the sum
    reaches 1 and certifies nothing.
    """

    params: BoundParams
    mode: BoundMode
    convention: ActivePositionConvention
    exponent: ExponentForm
    lstar: Optional[int]
    subtotals: tuple[Subtotal, ...]
    total_log: Decimal
    total_log_float: float
    precision_ok: bool
    vacuous: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vacuous", self.total_log >= 0)

    @property
    def total(self) -> Decimal:
        """The bound as a probability (may exceed 1 when vacuous)."""
        if self.total_log == NEG_INF:
            return Decimal(0)
        with localcontext() as ctx:
            ctx.prec = DECIMAL_PRECISION
            return self.total_log.exp()

    @property
    def term_count(self) -> int:
        return sum(len(s.terms) for s in self.subtotals)

    def recomputed_log(self) -> Decimal:
        """Log of the sum recomputed from the per-``ℓ`` breakdown, before the ``c 2^c`` cap."""
        with localcontext() as ctx:
            ctx.prec = DECIMAL_PRECISION
            weighted = [
                _dec_ln(s.binomial) + t.log_value for s in self.subtotals for t in s.terms
            ]
            return _dec_logsumexp(weighted)

    def render_total(self) -> str:
        return render_upper(self.total_log)

    def to_record(self) -> str:
        """Line-oriented ``key=value`` rendering."""
        lines = [
            "check=bound",
            f"params={self.params.describe()}",
            f"mode={self.mode.value}",
            f"convention={self.convention.value}",
            f"exponent={self.exponent.value}",
        ]
        if self.lstar is not None:
            lines.append(f"lstar={self.lstar}")
        lines += [
            f"total_log_e={_format_log(self.total_log)}",
            f"total_decimal={self.render_total()}",
        ]
        for s in self.subtotals:
            lines.append(f"subtotal_c{s.active}={render_upper(s.log_subtotal)}")
        lines += [
            f"terms={self.term_count}",
            f"precision_ok={str(self.precision_ok).lower()}",
            f"vacuous={str(self.vacuous).lower()}",
        ]
        return "\n".join(lines)

    def to_table(self) -> Table:
        """A rich table of the per-``c'`` subtotals."""
        table = Table(title=f"failure bound ({self.mode.value}, {self.convention.value})")
        table.add_column("c'", justify="right")
        table.add_column("C(c, c')", justify="right")
        table.add_column("terms", justify="right")
        table.add_column("P wins", justify="right")
        table.add_column("Q wins", justify="right")
        table.add_column("subtotal", justify="right")
        for s in self.subtotals:
            table.add_row(
                str(s.active),
                str(s.binomial),
                str(len(s.terms)),
                str(s.p_wins),
                str(s.q_wins),
                render_upper(s.log_subtotal),
            )
        table.add_section()
        table.add_row("total", "", str(self.term_count), "", "", self.render_total())
        return table


def _dec_logsumexp(values: Sequence[Decimal]) -> Decimal:
    finite = [v for v in values if v != NEG_INF]
    if not finite:
        return NEG_INF
    top = max(finite)
    return top + sum(((v - top).exp() for v in finite), Decimal(0)).ln()


def total_bound(
    params: BoundParams,
    *,
    mode: BoundMode = BoundMode.TOTAL,
    lstar: Optional[int] = None,
    convention: ActivePositionConvention = ActivePositionConvention.GLOBAL_Q,
    exponent: ExponentForm = ExponentForm.CEILING,
) -> BoundReport:
    """
    Evaluate the certificate.

    In ``TOTAL`` mode each inner sum runs over ``ℓ = 2c' .. kc'`` taking ``min(P, Q)``; in
    ``P_ONLY`` mode it runs over ``ℓ = 2c' .. lstar`` with ``P`` alone. Summation order is
    fixed: ``c'`` ascending, then ``ℓ`` ascending.

    Raises:
        DomainError: If ``P_ONLY`` mode is requested without ``lstar``
    """
    if mode is BoundMode.P_ONLY and (lstar is None or lstar < 2):
        raise DomainError("p-only mode needs lstar >= 2")
    if mode is BoundMode.TOTAL and lstar is not None:
        logger.debug("lstar=%d ignored in total mode", lstar)
        lstar = None

    subtotals: list[Subtotal] = []
    float_logs: list[float] = []
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        for active in range(1, params.c + 1):
            binomial = math.comb(params.c, active)
            upper = params.k * active if mode is BoundMode.TOTAL else lstar
            assert upper is not None
            terms: list[Term] = []
            inner_float: list[float] = []
            for ell in range(2 * active, upper + 1):
                m = _equations(ell, active, params, convention, exponent)
                log_p = _clamp_dec(_log_p(ell, active, params, m, _DECIMAL))
                fp = _clamp_float(_log_p(ell, active, params, m, _FLOAT))
                log_q: Optional[Decimal] = None
                choice = TermChoice.P
                if mode is BoundMode.TOTAL:
                    log_q = _clamp_dec(_log_q(ell, active, params, m, _DECIMAL))
                    fq = _clamp_float(_log_q(ell, active, params, m, _FLOAT))
                    if log_q < log_p:
                        choice, fp = TermChoice.Q, fq
                terms.append(Term(ell, log_p, log_q, choice))
                inner_float.append(fp)
            log_inner = _dec_logsumexp([t.log_value for t in terms])
            subtotal_log = log_inner + _dec_ln(binomial) if terms else NEG_INF
            subtotals.append(Subtotal(active, binomial, tuple(terms), subtotal_log))
            if inner_float:
                float_logs.append(float(logsumexp(inner_float)) + math.log(binomial))
        total_log = _dec_logsumexp([s.log_subtotal for s in subtotals])
        # Never report more than the c 2^c union-bound ceiling.
        ceiling_log = _dec_ln(params.c << params.c)
        if total_log > ceiling_log:
            logger.debug("total %s capped at ln(c 2^c) = %s", total_log, ceiling_log)
            total_log = ceiling_log

    total_float = float(logsumexp(float_logs)) if float_logs else -math.inf
    total_float = min(total_float, math.log(params.c << params.c))
    precision_ok = _agree(total_log, total_float)
    if not precision_ok:
        logger.warning(
            "float and decimal evaluations disagree: %r vs %s", total_float, total_log
        )
    report = BoundReport(
        params=params,
        mode=mode,
        convention=convention,
        exponent=exponent,
        lstar=lstar,
        subtotals=tuple(subtotals),
        total_log=total_log,
        total_log_float=total_float,
        precision_ok=precision_ok,
    )
    logger.info("bound %s: %s", params.describe(), report.render_total())
    return report


def _agree(exact: Decimal, approx: float) -> bool:
    if exact == NEG_INF:
        return approx == -math.inf
    scale = max(abs(float(exact)), 1.0)
    return abs(float(exact) - approx) / scale < GUARD_TOLERANCE


# -- rendering -------------------------------------------------------------------------------


def render_upper(log_value: Decimal, digits: int = SIGNIFICANT_DIGITS) -> str:
    """
    ``exp(log_value)`` in scientific notation, rounded *up* at ``digits`` significant digits.

    Examples:
        >>> render_upper(Decimal(-96))
        '2.1e-42'
        >>> render_upper(Decimal(0))
        '1.0e+0'
    """
    if log_value == NEG_INF:
        return "0"
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        log10 = log_value / _dec_ln(10)
        exp10 = int(log10.to_integral_value(rounding=ROUND_FLOOR))
        mantissa = (log_value - exp10 * _dec_ln(10)).exp()
        scale = 10 ** (digits - 1)
        scaled = (mantissa * scale).to_integral_value(rounding=ROUND_CEILING)
        if scaled >= 10 * scale:
            scaled, exp10 = scaled / 10, exp10 + 1
        text = f"{scaled / scale:.{digits - 1}f}"
    sign = "-" if exp10 < 0 else "+"
    return f"{text}e{sign}{abs(exp10)}"


def _format_log(value: Decimal) -> str:
    if value == NEG_INF:
        return "-inf"
    return f"{value:.12f}"


# -- advisory quantities -------------------------------------------------------------------


def uniqueness_target(params: BoundParams) -> int:
    """``floor(|Ψ|^(1/(5c)))``, the uniqueness the asymptotic analysis promises."""
    return integer_root(params.psi_size, 5 * params.c)


@dataclass(frozen=True)
class AdvisoryEstimate:
    """
    ``log(|Φ|² / |Ψ|^(εd/(2c)))``, the leading term of the asymptotic failure probability.

    This drops the little-o and is NOT a certificate; :func:`total_bound` is.
    """

    log_value: Decimal
    advisory: bool = True

    @property
    def log2(self) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = DECIMAL_PRECISION
            return self.log_value / _dec_ln(2)


def asymptotic_failure_estimate(params: BoundParams) -> AdvisoryEstimate:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        value = 2 * _dec_ln(params.phi_size) - _to_dec(params.q()) * _dec_ln(params.psi_size)
    return AdvisoryEstimate(value)


# -- union over several functions ------------------------------------------------------------


@dataclass(frozen=True)
class UnionReport:
    """Union bound over independent first-level functions (e.g. the levels of a recursion)."""

    reports: tuple[BoundReport, ...]
    total_log: Decimal

    def render_total(self) -> str:
        return render_upper(self.total_log)

    def to_record(self) -> str:
        lines = ["check=union-bound", f"parts={len(self.reports)}"]
        for i, r in enumerate(self.reports):
            lines.append(f"part{i}_params={r.params.describe()}")
            lines.append(f"part{i}_total_decimal={r.render_total()}")
        lines.append(f"total_log_e={_format_log(self.total_log)}")
        lines.append(f"total_decimal={self.render_total()}")
        return "\n".join(lines)


def union_bound(params_list: Iterable[BoundParams], **options: object) -> UnionReport:
    """Sum the certificates of several functions; ``options`` go to :func:`total_bound`."""
    reports = tuple(total_bound(p, **options) for p in params_list)  # type: ignore[arg-type]
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        total = _dec_logsumexp([r.total_log for r in reports])
    return UnionReport(reports, total)
