"""
Process-wide settings: memory and enumeration budgets.

The table-memory budget defaults to 1 GiB and can be overridden through the
``HITAB_MEM_BUDGET`` environment variable (plain bytes or a ``K``/``M``/``G`` suffix).
"""

from __future__ import annotations

import contextlib
import logging
import os
import re
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, replace
from typing import Any, Final, Optional

from .errors import DomainError, ResourceError

logger = logging.getLogger(__name__)

MEM_BUDGET_ENV: Final = "HITAB_MEM_BUDGET"

DEFAULT_MEMORY_BUDGET: Final = 1 << 30
DEFAULT_SUBSET_BUDGET: Final = 1 << 20
DEFAULT_FILLING_BUDGET: Final = 1 << 24
DEFAULT_BATCH_SIZE: Final = 1 << 16

_SIZE_PATTERN: Final = re.compile(r"^\s*(\d+)\s*([KMG]?)(?:i?B)?\s*$", re.IGNORECASE)
_SUFFIX_SHIFT: Final[dict[str, int]] = {"": 0, "K": 10, "M": 20, "G": 30}


def parse_size(text: str) -> int:
    """
    Parse a byte count such as ``"4096"``, ``"512M"`` or ``"2GiB"``.

    Raises:
        DomainError: If the text is not a non-negative size
    """
    match = _SIZE_PATTERN.match(text)
    if match is None:
        raise DomainError(f"cannot parse size {text!r}; expected e.g. 1073741824 or 512M")
    number, suffix = match.groups()
    return int(number) << _SUFFIX_SHIFT[suffix.upper()]


@dataclass(frozen=True)
class Settings:
    """
    Budgets shared by table generation, the verification oracles and the CLI.

    Attributes:
        memory_budget_bytes: Ceiling on the bytes of character tables one scheme may hold
        subset_budget: Ceiling on key subsets enumerated by the uniqueness/oddness checkers
        filling_budget: Ceiling on table fillings enumerated by the exact independence oracle
        batch_size: Keys per vectorised chunk in ``eval_many``
    """

    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET
    subset_budget: int = DEFAULT_SUBSET_BUDGET
    filling_budget: int = DEFAULT_FILLING_BUDGET
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self) -> None:
        for name in ("memory_budget_bytes", "subset_budget", "filling_budget", "batch_size"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> Settings:
        """Build settings from the environment, falling back to the defaults."""
        env = os.environ if environ is None else environ
        raw = env.get(MEM_BUDGET_ENV)
        if raw is None or not raw.strip():
            return cls()
        budget = parse_size(raw)
        logger.debug("memory budget %d bytes from %s", budget, MEM_BUDGET_ENV)
        return cls(memory_budget_bytes=budget)

    def check_memory(self, required: int, what: str) -> None:
        """Raise ResourceError if ``required`` bytes exceed the memory budget."""
        if required > self.memory_budget_bytes:
            raise ResourceError(
                f"{what} needs more table memory than the budget allows",
                required=required,
                budget=self.memory_budget_bytes,
            )


_current: Optional[Settings] = None


def get_settings() -> Settings:
    """Return the process-wide settings, reading the environment on first use."""
    global _current
    if _current is None:
        _current = Settings.from_env()
    return _current


@contextlib.contextmanager
def override_settings(**changes: Any) -> Iterator[Settings]:
    """
    Temporarily replace fields of the process-wide settings.

    Examples:
        >>> with override_settings(memory_budget_bytes=4096) as s:
        ...     s.memory_budget_bytes
        4096
    """
    global _current
    previous = get_settings()
    _current = replace(previous, **changes)
    try:
        yield _current
    finally:
        _current = previous
