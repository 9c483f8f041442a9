"""
Exception hierarchy for hitab.

Every error raised on purpose by the package derives from HitabError, so callers can
catch the whole family at once. Domain and format errors are also ValueErrors and
budget errors are MemoryErrors, so code written against the builtins keeps working.
"""

from __future__ import annotations


class HitabError(Exception):
    """Base class for all hitab errors."""


class DomainError(HitabError, ValueError):
    """A value lies outside the domain an operation is defined on."""


class ResourceError(HitabError, MemoryError):
    """
    A memory or enumeration budget would be exceeded.

    Attributes:
        required: Amount the operation needs (bytes, subsets or fillings)
        budget: The configured ceiling
    """

    def __init__(self, message: str, *, required: int, budget: int) -> None:
        super().__init__(f"{message} (required {required:,}, budget {budget:,})")
        self.required = required
        self.budget = budget


class FormatError(HitabError, ValueError):
    """A serialized container could not be parsed."""


class BadMagicError(FormatError):
    """The stream does not start with the expected magic bytes."""


class UnsupportedVersionError(FormatError):
    """The container format version is not one this build reads."""


class UnknownGeneratorError(FormatError):
    """The container names a table generator this build does not know."""


class UnknownSchemeError(FormatError):
    """The composed-scheme container carries an unknown scheme tag."""


class TruncatedStreamError(FormatError):
    """The stream ends before the declared contents."""


class ChecksumMismatchError(FormatError):
    """The trailing CRC does not match the contents."""


class KeyInputError(HitabError, ValueError):
    """
    A line of key input could not be used.

    Attributes:
        line_number: 1-based line of the offending input
    """

    def __init__(self, message: str, *, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
