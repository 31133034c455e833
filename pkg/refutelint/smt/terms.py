"""Quantifier-free bitvector terms.

A `Term` tree is sorted: `width` is the bitvector width, or None for Bool.
The same tree is printed as SMT-LIB2 and evaluated by the builtin oracle.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Set, Tuple

from ..ir import BinOp, Cast, Const, Sym, SymExpr, UnOp, mask

BV_OPS = {
    "add": "bvadd", "sub": "bvsub", "mul": "bvmul",
    "udiv": "bvudiv", "sdiv": "bvsdiv", "urem": "bvurem", "srem": "bvsrem",
    "and": "bvand", "or": "bvor", "xor": "bvxor",
    "shl": "bvshl", "lshr": "bvlshr", "ashr": "bvashr",
}
PREDICATES = {
    "eq": "=", "ult": "bvult", "ule": "bvule", "ugt": "bvugt", "uge": "bvuge",
    "slt": "bvslt", "sle": "bvsle", "sgt": "bvsgt", "sge": "bvsge",
}
UNARY_BV_OPS = {"neg": "bvneg", "bitnot": "bvnot"}


class UnsupportedExpression(Exception):
    """Raised for expressions outside the bitvector encoding table."""
    pass


@dataclass(frozen=True)
class Term:
    op: str
    args: Tuple["Term", ...] = ()
    params: Tuple[int, ...] = ()
    width: Optional[int] = None

    @property
    def is_bool(self) -> bool:
        return self.width is None

    def __str__(self) -> str:
        from .smtlib import format_term
        return format_term(self)


TRUE = Term("true")
FALSE = Term("false")


def bv(value: int, width: int) -> Term:
    return Term("bv", params=(value & mask(width),), width=width)


def var(symbol_id: int, width: int) -> Term:
    return Term("var", params=(symbol_id,), width=width)


def eq(lhs: Term, rhs: Term) -> Term:
    return Term("=", (lhs, rhs))


def not_(term: Term) -> Term:
    if term.op == "not":
        return term.args[0]
    if term == TRUE:
        return FALSE
    if term == FALSE:
        return TRUE
    return Term("not", (term,))


def and_(*terms: Term) -> Term:
    terms = tuple(t for t in terms if t != TRUE)
    if not terms:
        return TRUE
    if len(terms) == 1:
        return terms[0]
    return Term("and", terms)


def ite(cond: Term, then: Term, otherwise: Term) -> Term:
    return Term("ite", (cond, then, otherwise), width=then.width)


def extract(high: int, low: int, term: Term) -> Term:
    return Term("extract", (term,), (high, low), high - low + 1)


def as_bool(term: Term) -> Term:
    """Bridge a bitvector to Bool as `term != 0`."""
    if term.is_bool:
        return term
    return not_(eq(term, bv(0, term.width)))


def as_bv(term: Term) -> Term:
    """Bridge a Bool to a 1-bit vector."""
    if not term.is_bool:
        return term
    return ite(term, bv(1, 1), bv(0, 1))


def _is_predicate(expr: SymExpr) -> bool:
    return isinstance(expr, BinOp) and (expr.op in PREDICATES or expr.op == "ne")


def _single_bit(expr: SymExpr) -> Optional[Tuple[SymExpr, int]]:
    """(x, i) when `expr` is `x & 2^i`."""
    if not (isinstance(expr, BinOp) and expr.op == "and"):
        return None
    for value, other in ((expr.rhs, expr.lhs), (expr.lhs, expr.rhs)):
        if isinstance(value, Const):
            bits = value.value.bits
            if bits and bits & (bits - 1) == 0:
                return other, bits.bit_length() - 1
    return None


def _bit_test(expr: BinOp) -> Optional[Term]:
    """`(x & 2^i) == 0` and friends become a test of bit i."""
    if expr.op not in ("eq", "ne"):
        return None
    for lhs, rhs in ((expr.lhs, expr.rhs), (expr.rhs, expr.lhs)):
        if isinstance(rhs, Const) and rhs.value.bits == 0:
            tested = _single_bit(lhs)
            if tested is not None:
                operand, bit = tested
                expected = 0 if expr.op == "eq" else 1
                return eq(extract(bit, bit, encode_bv(operand)), bv(expected, 1))
    return None


def encode_bool(expr: SymExpr) -> Term:
    """Encode a width-1 expression as a Bool term."""
    if _is_predicate(expr):
        peephole = _bit_test(expr)
        if peephole is not None:
            return peephole
        lhs, rhs = encode_bv(expr.lhs), encode_bv(expr.rhs)
        if expr.op == "ne":
            return not_(eq(lhs, rhs))
        return Term(PREDICATES[expr.op], (lhs, rhs))
    if isinstance(expr, UnOp) and expr.op == "lognot":
        return not_(encode_bool(expr.operand))
    if isinstance(expr, Const) and expr.width == 1:
        return TRUE if expr.value.bits else FALSE
    if expr.width != 1:
        raise UnsupportedExpression(f"{expr} is not a width-1 condition")
    return as_bool(encode_bv(expr))


def encode_bv(expr: SymExpr) -> Term:
    """Encode any expression as a bitvector term of its own width."""
    if isinstance(expr, Const):
        return bv(expr.value.bits, expr.width)
    if isinstance(expr, Sym):
        return var(expr.symbol.id, expr.width)
    if isinstance(expr, Cast):
        operand = encode_bv(expr.operand)
        source = operand.width
        if expr.target_width > source:
            op = "sign_extend" if expr.sign_extend else "zero_extend"
            return Term(op, (operand,), (expr.target_width - source,), expr.target_width)
        if expr.target_width < source:
            return extract(expr.target_width - 1, 0, operand)
        return operand
    if isinstance(expr, UnOp):
        if expr.op == "lognot":
            return as_bv(encode_bool(expr))
        if expr.op in UNARY_BV_OPS:
            return Term(UNARY_BV_OPS[expr.op], (encode_bv(expr.operand),), width=expr.width)
    if isinstance(expr, BinOp):
        if _is_predicate(expr):
            return as_bv(encode_bool(expr))
        if expr.op in BV_OPS:
            return Term(BV_OPS[expr.op], (encode_bv(expr.lhs), encode_bv(expr.rhs)), width=expr.width)
    raise UnsupportedExpression(f"Cannot encode {expr!r}")


def walk_terms(term: Term) -> Iterator[Term]:
    stack = [term]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(current.args))


def variables_of(term: Term) -> Dict[int, int]:
    """Symbol id -> width for every variable in `term`."""
    return {t.params[0]: t.width for t in walk_terms(term) if t.op == "var"}


@dataclass
class SmtFormula:
    """Declarations and assertions of one refutation query.

    `constrained` indexes the expressions that already have an interval
    assertion, for the duplicate-constraint skip.
    """

    declarations: Dict[int, int] = field(default_factory=dict)
    assertions: List[Term] = field(default_factory=list)
    constrained: Set[SymExpr] = field(default_factory=set)
    _asserted: Set[Term] = field(default_factory=set, repr=False)

    def has_constraint(self, expr: SymExpr) -> bool:
        return expr in self.constrained

    def declare(self, symbol_id: int, width: int) -> None:
        known = self.declarations.get(symbol_id)
        if known is not None and known != width:
            raise UnsupportedExpression(f"${symbol_id} used at widths {known} and {width}")
        self.declarations[symbol_id] = width

    def assert_term(self, term: Term, constrains: Optional[SymExpr] = None) -> bool:
        """Add `term` unless an identical assertion is already present.

        Returns:
            True if the assertion was added.
        """
        if not term.is_bool:
            raise UnsupportedExpression(f"Assertion {term} is not Bool")
        if constrains is not None:
            self.constrained.add(constrains)
        if term in self._asserted or term == TRUE:
            return False
        for symbol_id, width in variables_of(term).items():
            self.declare(symbol_id, width)
        self.assertions.append(term)
        self._asserted.add(term)
        return True

    @property
    def total_bits(self) -> int:
        return sum(self.declarations.values())
