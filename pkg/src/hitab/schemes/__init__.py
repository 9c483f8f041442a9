"""Composed hash constructions and the polynomial baseline."""

from .base import ComposedTabulation, HashScheme, generate_parts
from .container import SchemeTag, dump_scheme, load_any, load_scheme
from .double import DoublePlan, DoubleTabulation, double_plan
from .polynomial import PRIME, PolynomialHash
from .presets import PRESETS, Preset, get_preset, triple_new
from .recursive import RecursivePlan, RecursiveTabulation, recursive_plan
from .triple import TripleTabulation

__all__ = [
    "PRESETS",
    "PRIME",
    "ComposedTabulation",
    "DoublePlan",
    "DoubleTabulation",
    "HashScheme",
    "PolynomialHash",
    "Preset",
    "RecursivePlan",
    "RecursiveTabulation",
    "SchemeTag",
    "TripleTabulation",
    "double_plan",
    "dump_scheme",
    "generate_parts",
    "get_preset",
    "load_any",
    "load_scheme",
    "recursive_plan",
    "triple_new",
]
