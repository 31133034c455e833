"""Bitvector SMT encoding, SMT-LIB2 emission and solver backends."""

from .smtlib import emit_smtlib
from .solvers import (
    BUILTIN, BuiltinBackend, ExternalBackend, SolverBackend, SolverUnavailable, SolverVerdict,
    UnknownReason, VerdictKind, make_backend,
)
from .terms import SmtFormula, Term, UnsupportedExpression, encode_bool, encode_bv

__all__ = [
    "BUILTIN", "BuiltinBackend", "ExternalBackend", "SmtFormula", "SolverBackend",
    "SolverUnavailable", "SolverVerdict", "Term", "UnknownReason", "UnsupportedExpression",
    "VerdictKind", "emit_smtlib", "encode_bool", "encode_bv", "make_backend",
]
