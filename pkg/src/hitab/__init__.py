"""High-independence tabulation hashing."""

from typing import List

from .bounds import BoundParams, BoundReport, total_bound
from .errors import DomainError, FormatError, HitabError, ResourceError
from .keyspace import KeyCodec, PositionChar, PositionCharSet
from .schemes import (
    DoubleTabulation,
    PolynomialHash,
    RecursiveTabulation,
    TripleTabulation,
    get_preset,
    recursive_plan,
)
from .tabulation import SimpleTabulation, TabulationParams

__all__: List[str] = [
    "BoundParams",
    "BoundReport",
    "DomainError",
    "DoubleTabulation",
    "FormatError",
    "HitabError",
    "KeyCodec",
    "PolynomialHash",
    "PositionChar",
    "PositionCharSet",
    "RecursiveTabulation",
    "ResourceError",
    "SimpleTabulation",
    "TabulationParams",
    "TripleTabulation",
    "get_preset",
    "recursive_plan",
    "total_bound",
]
