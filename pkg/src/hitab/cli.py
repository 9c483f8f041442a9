"""
The ``hitab`` command line.

Commands print machine-readable ``key=value`` records on stdout; diagnostics go through
the rich log handler on stderr. Exit codes are stable:

==== ==============================================
0    success
1    a verification suite reported a failing check
2    usage or parameter error, unreadable scheme file
3    malformed key input
4    memory or enumeration budget exceeded
==== ==============================================
"""

from __future__ import annotations

import logging
import re
import time
from collections.abc import Iterable, Sequence
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import IO, Any, Final, NoReturn, Optional, Union

import click
import numpy as np
import numpy.typing as npt
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .bounds import (
    ActivePositionConvention,
    BoundMode,
    BoundParams,
    ExponentForm,
    asymptotic_failure_estimate,
    total_bound,
    union_bound,
    uniqueness_target,
)
from .config import override_settings
from .errors import HitabError, KeyInputError, ResourceError
from .keyspace import KeyCodec
from .rng import MASK64, counter_word
from .schemes import (
    PRESETS,
    PRIME,
    ComposedTabulation,
    DoubleTabulation,
    HashScheme,
    PolynomialHash,
    RecursiveTabulation,
    get_preset,
    load_any,
    recursive_plan,
)
from .tabulation import SimpleTabulation, TabulationParams
from .verify import SUITE_ALIASES, SUITES, run_suite

logger = logging.getLogger(__name__)

EXIT_VERIFY_FAILED: Final = 1
EXIT_USAGE: Final = 2
EXIT_INPUT: Final = 3
EXIT_RESOURCE: Final = 4

DEFAULT_K: Final = 100
DEFAULT_BENCH_SCHEMES: Final = "simple-32,double-32-2,poly-2"
WARMUP_KEYS: Final = 1 << 12
KEY_STREAM_ROLE: Final = 0x6B657973  # "keys"

_HEX_KEY: Final = re.compile(r"^(?:0[xX])?([0-9a-fA-F]+)$")


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _fail(exc: BaseException, code: int) -> NoReturn:
    click.echo(f"error: {exc}", err=True)
    raise click.exceptions.Exit(code)


class HitabGroup(click.Group):
    """Maps the package's exceptions onto the exit-code contract."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except KeyInputError as exc:
            _fail(exc, EXIT_INPUT)
        except ResourceError as exc:
            _fail(exc, EXIT_RESOURCE)
        except (HitabError, OSError) as exc:
            _fail(exc, EXIT_USAGE)


class U64Param(click.ParamType):
    """A 64-bit unsigned integer, decimal or ``0x`` hex."""

    name = "u64"

    def convert(
        self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]
    ) -> int:
        if isinstance(value, int):
            number = value
        else:
            try:
                number = int(str(value), 0)
            except ValueError:
                self.fail(f"{value!r} is not an integer", param, ctx)
        if not 0 <= number <= MASK64:
            self.fail(f"{value!r} does not fit in 64 bits", param, ctx)
        return number


class FractionParam(click.ParamType):
    """A rational in ``(0, 1]`` such as ``1``, ``0.5`` or ``1/3``."""

    name = "fraction"

    def convert(
        self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]
    ) -> Fraction:
        if isinstance(value, Fraction):
            return value
        try:
            number = Fraction(str(value))
        except (ValueError, ZeroDivisionError):
            self.fail(f"{value!r} is not a rational number", param, ctx)
        if not 0 < number <= 1:
            self.fail(f"{value!r} is outside (0, 1]", param, ctx)
        return number


U64 = U64Param()
EPSILON = FractionParam()


def _echo_records(records: Iterable[str], sink: Optional[IO[str]] = None) -> None:
    click.echo("\n\n".join(records), file=sink)


@click.group(cls=HitabGroup)
@click.option("-v", "--verbose", is_flag=True, help="Log debug detail to stderr.")
@click.version_option(package_name="hitab")
def cli(verbose: bool) -> None:
    """High-independence tabulation hashing: generate, hash, certify, verify, benchmark."""
    configure_logging(verbose)


# -- gen -----------------------------------------------------------------------------------


@cli.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), help="A named 100-unique scheme.")
@click.option("--c", "c", type=click.IntRange(min=1), help="Input characters per key.")
@click.option("--in-bits", type=click.IntRange(1, 32), help="Bits per input character.")
@click.option("--d", "d", type=click.IntRange(min=1), help="Intermediate characters.")
@click.option("--out-bits", type=click.IntRange(1, 32), help="Bits per intermediate character.")
@click.option("--recursive", "recursive_c", type=click.IntRange(min=1), help="Recursive c.")
@click.option("--key-bits", type=click.IntRange(1, 64), help="Key width of --recursive.")
@click.option("--seed", type=U64, default=0, show_default=True)
@click.option("--range-bits", type=click.IntRange(1, 64), default=64, show_default=True)
@click.option("--k", "k", type=click.IntRange(min=1), help="Uniqueness to certify.")
@click.option("--epsilon", type=EPSILON, default="1", show_default=True)
@click.option(
    "--out",
    "out_path",
    type=click.Path(dir_okay=False, writable=True, path_type=Path),
    required=True,
)
def gen(
    preset: Optional[str],
    c: Optional[int],
    in_bits: Optional[int],
    d: Optional[int],
    out_bits: Optional[int],
    recursive_c: Optional[int],
    key_bits: Optional[int],
    seed: int,
    range_bits: int,
    k: Optional[int],
    epsilon: Fraction,
    out_path: Path,
) -> None:
    """Generate a scheme, write its HSCH container and print its failure certificate."""
    explicit = (c, in_bits, d, out_bits)
    chosen = [preset is not None, any(v is not None for v in explicit), recursive_c is not None]
    if sum(chosen) != 1:
        raise click.UsageError(
            "give exactly one of --preset, --c/--in-bits/--d/--out-bits or --recursive"
        )

    scheme: ComposedTabulation
    if preset is not None:
        chosen_preset = get_preset(preset)
        params = chosen_preset.bound_params(epsilon)
        if k is not None:
            params = replace(params, k=k)
        certificate = total_bound(params).to_record()
        scheme = chosen_preset.build(seed, range_bits)
    elif recursive_c is not None:
        if key_bits is None:
            raise click.UsageError("--recursive needs --key-bits")
        plan = recursive_plan(recursive_c, key_bits)
        certificate = union_bound(plan.bound_params(k, epsilon)).to_record()
        scheme = RecursiveTabulation.new(plan, seed, range_bits)
    else:
        if c is None or in_bits is None or d is None or out_bits is None:
            raise click.UsageError(
                "explicit parameters need all of --c, --in-bits, --d and --out-bits"
            )
        params = BoundParams(c, d, 1 << in_bits, 1 << out_bits, k or DEFAULT_K, epsilon)
        certificate = total_bound(params).to_record()
        scheme = DoubleTabulation.new(KeyCodec(in_bits, c), d, out_bits, seed, range_bits)

    data = scheme.to_bytes()
    out_path.write_bytes(data)
    logger.info("wrote %d bytes to %s", len(data), out_path)
    click.echo(f"scheme={scheme.name}\nseed={seed:#x}\nbytes={len(data)}")
    click.echo(certificate)


# -- hash ----------------------------------------------------------------------------------


def _key_limit(scheme: HashScheme) -> int:
    if isinstance(scheme, PolynomialHash):
        return PRIME
    return 1 << scheme.key_bits


def parse_keys(lines: Iterable[str], limit: int) -> list[int]:
    """
    Parse hexadecimal keys, one per line, each below ``limit``.

    Raises:
        KeyInputError: Naming the first malformed or out-of-range line
    """
    keys = []
    for number, line in enumerate(lines, start=1):
        match = _HEX_KEY.match(line.strip())
        if match is None:
            raise KeyInputError(f"{line.strip()!r} is not a hexadecimal key", line_number=number)
        key = int(match.group(1), 16)
        if key >= limit:
            raise KeyInputError(f"key {key:#x} is too wide for the scheme", line_number=number)
        keys.append(key)
    return keys


def hash_keys(scheme: HashScheme, keys: Sequence[int]) -> list[int]:
    """Evaluate ``keys`` in order, vectorised when the values fit a machine word."""
    if not keys:
        return []
    if scheme.range_bits <= 64 and scheme.key_bits <= 64:
        return [int(v) for v in scheme.eval_many(np.array(keys, dtype=np.uint64))]
    return [scheme.eval(key) for key in keys]


@cli.command("hash")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--input", "source", type=click.File("r"), default="-", show_default=True)
@click.option("--output", "sink", type=click.File("w"), default="-", show_default=True)
def hash_command(scheme_path: Path, source: IO[str], sink: IO[str]) -> None:
    """Hash hexadecimal keys, one per line, with a stored HTAB or HSCH scheme."""
    scheme: HashScheme = load_any(scheme_path.read_bytes())
    keys = parse_keys(source, _key_limit(scheme))
    digits = -(-scheme.range_bits // 4)
    for value in hash_keys(scheme, keys):
        sink.write(f"{value:0{digits}x}\n")
    logger.debug("hashed %d keys with %s", len(keys), scheme.name)


# -- bound ---------------------------------------------------------------------------------


@cli.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)))
@click.option("--c", "c", type=click.IntRange(min=1))
@click.option("--d", "d", type=click.IntRange(min=1))
@click.option("--phi-bits", type=click.IntRange(min=1))
@click.option("--psi-bits", type=click.IntRange(min=1))
@click.option("--k", "k", type=click.IntRange(min=1))
@click.option("--epsilon", type=EPSILON, default="1", show_default=True)
@click.option(
    "--mode",
    type=click.Choice([m.value for m in BoundMode]),
    default=BoundMode.TOTAL.value,
    show_default=True,
)
@click.option("--lstar", type=click.IntRange(min=2), help="Largest ℓ in p-only mode.")
@click.option(
    "--convention",
    type=click.Choice([c.value for c in ActivePositionConvention]),
    default=ActivePositionConvention.GLOBAL_Q.value,
    show_default=True,
)
@click.option(
    "--exponent",
    type=click.Choice([e.value for e in ExponentForm]),
    default=ExponentForm.CEILING.value,
    show_default=True,
)
@click.option("--recursive", "recursive_c", type=click.IntRange(min=1))
@click.option("--key-bits", type=click.IntRange(1, 64))
@click.option("--table", "show_table", is_flag=True, help="Also print a breakdown table.")
def bound(
    preset: Optional[str],
    c: Optional[int],
    d: Optional[int],
    phi_bits: Optional[int],
    psi_bits: Optional[int],
    k: Optional[int],
    epsilon: Fraction,
    mode: str,
    lstar: Optional[int],
    convention: str,
    exponent: str,
    recursive_c: Optional[int],
    key_bits: Optional[int],
    show_table: bool,
) -> None:
    """Print the failure certificate for a first-level shape."""
    options: dict[str, Any] = dict(
        mode=BoundMode(mode),
        lstar=lstar,
        convention=ActivePositionConvention(convention),
        exponent=ExponentForm(exponent),
    )
    if recursive_c is not None:
        if key_bits is None:
            raise click.UsageError("--recursive needs --key-bits")
        plan = recursive_plan(recursive_c, key_bits)
        click.echo(union_bound(plan.bound_params(k, epsilon), **options).to_record())
        return

    if preset is not None:
        params = get_preset(preset).bound_params(epsilon)
        if k is not None:
            params = replace(params, k=k)
    else:
        if c is None or d is None or phi_bits is None or psi_bits is None:
            raise click.UsageError("give --preset, or all of --c, --d, --phi-bits, --psi-bits")
        params = BoundParams(c, d, 1 << phi_bits, 1 << psi_bits, k or DEFAULT_K, epsilon)

    report = total_bound(params, **options)
    estimate = asymptotic_failure_estimate(params)
    click.echo(report.to_record())
    click.echo(f"advisory_uniqueness_target={uniqueness_target(params)}")
    click.echo(f"advisory_log2_estimate={estimate.log2:.6f}")
    if show_table:
        Console().print(report.to_table())


# -- verify --------------------------------------------------------------------------------


@cli.command()
@click.argument("suite", type=click.Choice([*SUITES, *SUITE_ALIASES, "all"]))
@click.option("--trials", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--seed", type=U64, default=0, show_default=True)
@click.option("--subset-budget", type=click.IntRange(min=1))
@click.option("--filling-budget", type=click.IntRange(min=1))
def verify(
    suite: str,
    trials: int,
    seed: int,
    subset_budget: Optional[int],
    filling_budget: Optional[int],
) -> None:
    """Run a desk-scale verification suite; exit 1 if any check fails."""
    changes = {
        name: value
        for name, value in (("subset_budget", subset_budget), ("filling_budget", filling_budget))
        if value is not None
    }
    with override_settings(**changes) as settings:
        verdicts = run_suite(suite, settings, trials, seed)
    _echo_records(v.to_record() for v in verdicts)
    failed = [v.check for v in verdicts if not v]
    if failed:
        click.echo(f"error: failing checks: {', '.join(failed)}", err=True)
        raise click.exceptions.Exit(EXIT_VERIFY_FAILED)


# -- bench ---------------------------------------------------------------------------------


def build_bench_scheme(name: str, seed: int) -> HashScheme:
    """
    Build a benchmark scheme by name.

    Names: ``simple-32`` and ``simple-64`` (8-bit characters), ``double-32-2`` and
    ``double-64-3`` (the presets), ``triple-64``, ``poly-<k>``, ``recursive-<c>-<bits>``.

    Raises:
        click.BadParameter: For an unknown name
    """
    if name in ("simple-32", "simple-64"):
        bits = int(name.split("-")[1])
        return SimpleTabulation.generate(TabulationParams(8, bits // 8, 64, 1), seed)
    if name in ("double-32-2", "double-64-3"):
        return get_preset(name.removeprefix("double-")).build(seed)
    if name == "triple-64":
        return get_preset("64-4-triple").build(seed)
    poly = re.fullmatch(r"poly-(\d+)", name)
    if poly:
        return PolynomialHash.new(int(poly.group(1)), seed)
    recursive = re.fullmatch(r"recursive-(\d+)-(\d+)", name)
    if recursive:
        plan = recursive_plan(int(recursive.group(1)), int(recursive.group(2)))
        return RecursiveTabulation.new(plan, seed)
    raise click.BadParameter(f"unknown scheme {name!r}", param_hint="--schemes")


def bench_keys(
    scheme: HashScheme, count: int, seed: int, deterministic: bool
) -> npt.NDArray[np.uint64]:
    if deterministic:
        words = counter_word(seed ^ KEY_STREAM_ROLE, np.arange(count, dtype=np.uint64))
    else:
        words = np.random.default_rng().integers(
            0, MASK64, size=count, dtype=np.uint64, endpoint=True
        )
    if isinstance(scheme, PolynomialHash):
        return words % np.uint64(PRIME)
    if scheme.key_bits < 64:
        words &= np.uint64((1 << scheme.key_bits) - 1)
    return words


def bench_scheme(
    scheme: HashScheme, keys: npt.NDArray[np.uint64], repeat: int
) -> dict[str, Union[int, float, str]]:
    """Warm up, then time ``repeat`` passes over ``keys`` and keep the best."""
    scheme.eval_many(keys[:WARMUP_KEYS])
    best = float("inf")
    values = keys
    for _ in range(repeat):
        start = time.perf_counter()
        values = scheme.eval_many(keys)
        best = min(best, time.perf_counter() - start)
    checksum = int(np.bitwise_xor.reduce(values)) if len(values) else 0
    best = max(best, 1e-9)
    return {
        "scheme": scheme.name,
        "keys": len(keys),
        "lookups_per_key": scheme.lookups_per_key,
        "checksum": f"{checksum:#018x}",
        "seconds": f"{best:.6f}",
        "keys_per_sec": f"{len(keys) / best:.0f}",
        "ns_per_key": f"{best * 1e9 / max(len(keys), 1):.2f}",
    }


@cli.command()
@click.option("--schemes", default=DEFAULT_BENCH_SCHEMES, show_default=True)
@click.option(
    "--keys", "key_count", type=click.IntRange(min=1), default=1_000_000, show_default=True
)
@click.option("--seed", type=U64, default=0, show_default=True)
@click.option("--repeat", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--deterministic-keys", is_flag=True, help="Draw keys from the seeded stream.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--table", "show_table", is_flag=True, help="Also print a throughput table.")
def bench(
    schemes: str,
    key_count: int,
    seed: int,
    repeat: int,
    deterministic_keys: bool,
    report_path: Optional[Path],
    show_table: bool,
) -> None:
    """Time vectorised hashing of pseudorandom keys for each scheme."""
    rows = []
    for name in (s.strip() for s in schemes.split(",") if s.strip()):
        scheme = build_bench_scheme(name, seed)
        keys = bench_keys(scheme, key_count, seed, deterministic_keys)
        rows.append(bench_scheme(scheme, keys, repeat))
        logger.info("%s: %s ns/key", name, rows[-1]["ns_per_key"])
    records = ["\n".join(f"{k}={v}" for k, v in row.items()) for row in rows]
    _echo_records(records)
    if report_path is not None:
        report_path.write_text("\n\n".join(records) + "\n")
    if show_table:
        table = Table(title="throughput")
        columns = ("scheme", "lookups_per_key", "keys_per_sec", "ns_per_key")
        for column in columns:
            table.add_column(column, justify="left" if column == "scheme" else "right")
        for row in rows:
            table.add_row(*(str(row[column]) for column in columns))
        Console().print(table)


def main() -> None:
    cli(prog_name="hitab")
