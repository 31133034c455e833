"""MiniC frontend: parsing, printing and CFG lowering."""

from .ast import TranslationUnit
from .cfg import Cfg, lower
from .parser import MiniCSyntaxError, UnsupportedConstruct, parse
from .printer import format_unit

__all__ = [
    "Cfg",
    "MiniCSyntaxError",
    "TranslationUnit",
    "UnsupportedConstruct",
    "format_unit",
    "lower",
    "parse",
]
