"""Symbolic value language shared by every analysis stage.

Values are fixed-width two's-complement machine integers. Expressions are
immutable trees over symbols and constants; they hash structurally, so two
expressions are equal exactly when their canonical text forms are equal.
"""

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, Mapping, Optional, Set, Tuple, Union

SUPPORTED_WIDTHS = (1, 8, 32, 64)

ARITHMETIC_OPS = frozenset({
    "add", "sub", "mul", "udiv", "sdiv", "urem", "srem",
    "and", "or", "xor", "shl", "lshr", "ashr",
})
COMPARISON_OPS = frozenset({
    "ult", "ule", "ugt", "uge", "slt", "sle", "sgt", "sge", "eq", "ne",
})
BINARY_OPS = ARITHMETIC_OPS | COMPARISON_OPS
UNARY_OPS = frozenset({"neg", "bitnot", "lognot"})
DIVISION_OPS = frozenset({"udiv", "sdiv", "urem", "srem"})

# Comparison with its operands swapped: (k op x) == (x SWAPPED[op] k).
SWAPPED = {
    "ult": "ugt", "ule": "uge", "ugt": "ult", "uge": "ule",
    "slt": "sgt", "sle": "sge", "sgt": "slt", "sge": "sle",
    "eq": "eq", "ne": "ne",
}
# Logical negation of a comparison.
NEGATED = {
    "ult": "uge", "ule": "ugt", "ugt": "ule", "uge": "ult",
    "slt": "sge", "sle": "sgt", "sgt": "sle", "sge": "slt",
    "eq": "ne", "ne": "eq",
}


class UnsupportedWidth(ValueError):
    """Raised when a value or symbol is built with a width outside 1/8/32/64."""
    pass


class DivisionByZero(ArithmeticError):
    """Raised when constant folding divides by zero."""
    pass


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(bits: int, width: int) -> int:
    """Interpret an unsigned bit pattern as a two's-complement integer."""
    if bits >> (width - 1):
        return bits - (1 << width)
    return bits


def check_width(width: int) -> None:
    if width not in SUPPORTED_WIDTHS:
        raise UnsupportedWidth(f"Unsupported width: {width} (expected one of {SUPPORTED_WIDTHS})")


@dataclass(frozen=True)
class BitVecValue:
    """A fixed-width machine integer stored as its unsigned bit pattern."""

    width: int
    bits: int

    def __post_init__(self):
        check_width(self.width)
        if not 0 <= self.bits <= mask(self.width):
            raise ValueError(f"Bit pattern {self.bits} does not fit in {self.width} bits")

    @classmethod
    def of(cls, value: int, width: int) -> "BitVecValue":
        """Build a value from any Python integer, wrapping modulo 2^width."""
        check_width(width)
        return cls(width, value & mask(width))

    @property
    def signed(self) -> int:
        return to_signed(self.bits, self.width)

    def __str__(self) -> str:
        return f"{self.bits}:{self.width}"


class Signedness(str, Enum):
    SIGNED = "signed"
    UNSIGNED = "unsigned"


@dataclass(frozen=True)
class Origin:
    """Source variable (and location) that introduced a symbol."""

    name: str
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class Symbol:
    id: int
    width: int
    signedness: Signedness = field(default=Signedness.UNSIGNED, compare=False)
    origin: Optional[Origin] = field(default=None, compare=False)

    def __post_init__(self):
        check_width(self.width)

    @property
    def name(self) -> str:
        return f"${self.id}"

    def __str__(self) -> str:
        return self.name


class SymbolFactory:
    """Hands out fresh symbols for one exploded graph.

    Ids start at 0 and strictly increase in creation order. The counter is
    guarded by a lock so a factory can be shared between threads.
    """

    def __init__(self):
        self._next_id = 0
        self._lock = threading.Lock()

    def mk_symbol(self, width: int, signedness: Signedness = Signedness.UNSIGNED,
                  origin: Optional[Origin] = None) -> Symbol:
        check_width(width)
        with self._lock:
            symbol_id = self._next_id
            self._next_id += 1
        return Symbol(symbol_id, width, signedness, origin)

    @property
    def count(self) -> int:
        return self._next_id


@dataclass(frozen=True)
class Const:
    value: BitVecValue

    @property
    def width(self) -> int:
        return self.value.width

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Sym:
    symbol: Symbol

    @property
    def width(self) -> int:
        return self.symbol.width

    def __str__(self) -> str:
        return self.symbol.name


@dataclass(frozen=True)
class Cast:
    """Width change: zero/sign extension when widening, truncation when narrowing."""

    target_width: int
    sign_extend: bool
    operand: "SymExpr"

    @property
    def width(self) -> int:
        return self.target_width

    def __str__(self) -> str:
        if self.target_width < self.operand.width:
            kind = "trunc"
        else:
            kind = "sext" if self.sign_extend else "zext"
        return f"({kind}{self.target_width} {self.operand})"


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "SymExpr"

    @property
    def width(self) -> int:
        return 1 if self.op == "lognot" else self.operand.width

    def __str__(self) -> str:
        return f"({self.op} {self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "SymExpr"
    rhs: "SymExpr"

    @property
    def width(self) -> int:
        return 1 if self.op in COMPARISON_OPS else self.lhs.width

    def __str__(self) -> str:
        return f"({self.op} {self.lhs} {self.rhs})"


SymExpr = Union[Const, Sym, Cast, UnOp, BinOp]


# ---------------------------------------------------------------------------
# Constant evaluation
# ---------------------------------------------------------------------------

def eval_const(op: str, lhs: BitVecValue, rhs: BitVecValue) -> BitVecValue:
    """Fold a binary operator over two constants of equal width.

    Raises:
        DivisionByZero: For udiv/sdiv/urem/srem with a zero right operand.
    """
    if lhs.width != rhs.width:
        raise ValueError(f"Width mismatch in {op}: {lhs.width} vs {rhs.width}")
    width = lhs.width
    a, b = lhs.bits, rhs.bits

    if op in COMPARISON_OPS:
        sa, sb = lhs.signed, rhs.signed
        result = {
            "ult": a < b, "ule": a <= b, "ugt": a > b, "uge": a >= b,
            "slt": sa < sb, "sle": sa <= sb, "sgt": sa > sb, "sge": sa >= sb,
            "eq": a == b, "ne": a != b,
        }[op]
        return BitVecValue(1, int(result))

    if op in DIVISION_OPS and b == 0:
        raise DivisionByZero(f"{op} by zero")

    if op == "add":
        value = a + b
    elif op == "sub":
        value = a - b
    elif op == "mul":
        value = a * b
    elif op == "udiv":
        value = a // b
    elif op == "urem":
        value = a % b
    elif op in ("sdiv", "srem"):
        sa, sb = lhs.signed, rhs.signed
        quotient = abs(sa) // abs(sb)
        if (sa < 0) != (sb < 0):
            quotient = -quotient
        value = quotient if op == "sdiv" else sa - sb * quotient
    elif op == "and":
        value = a & b
    elif op == "or":
        value = a | b
    elif op == "xor":
        value = a ^ b
    elif op == "shl":
        value = 0 if b >= width else a << b
    elif op == "lshr":
        value = 0 if b >= width else a >> b
    elif op == "ashr":
        value = lhs.signed >> min(b, width - 1)
    else:
        raise ValueError(f"Unknown binary operator: {op}")
    return BitVecValue.of(value, width)


def eval_unary(op: str, operand: BitVecValue) -> BitVecValue:
    if op == "neg":
        return BitVecValue.of(-operand.bits, operand.width)
    if op == "bitnot":
        return BitVecValue.of(~operand.bits, operand.width)
    if op == "lognot":
        return BitVecValue(1, int(operand.bits == 0))
    raise ValueError(f"Unknown unary operator: {op}")


def eval_cast(target_width: int, sign_extend: bool, operand: BitVecValue) -> BitVecValue:
    if target_width > operand.width and sign_extend:
        return BitVecValue.of(operand.signed, target_width)
    return BitVecValue.of(operand.bits, target_width)


# ---------------------------------------------------------------------------
# Smart constructors (fold constants, keep widths consistent)
# ---------------------------------------------------------------------------

def const(value: int, width: int) -> Const:
    return Const(BitVecValue.of(value, width))


def sym(symbol: Symbol) -> Sym:
    return Sym(symbol)


def true_() -> Const:
    return const(1, 1)


def false_() -> Const:
    return const(0, 1)


def binop(op: str, lhs: SymExpr, rhs: SymExpr) -> SymExpr:
    if op not in BINARY_OPS:
        raise ValueError(f"Unknown binary operator: {op}")
    if lhs.width != rhs.width:
        raise ValueError(f"Operands of {op} differ in width: {lhs} ({lhs.width}) vs {rhs} ({rhs.width})")
    if isinstance(lhs, Const) and isinstance(rhs, Const):
        if not (op in DIVISION_OPS and rhs.value.bits == 0):
            return Const(eval_const(op, lhs.value, rhs.value))
    if lhs == rhs:
        if op in ("sub", "xor"):
            return const(0, lhs.width)
        if op in ("eq", "ule", "uge", "sle", "sge"):
            return true_()
        if op in ("ne", "ult", "ugt", "slt", "sgt"):
            return false_()
    return BinOp(op, lhs, rhs)


def unop(op: str, operand: SymExpr) -> SymExpr:
    if op not in UNARY_OPS:
        raise ValueError(f"Unknown unary operator: {op}")
    if op == "lognot" and operand.width != 1:
        raise ValueError("lognot expects a width-1 operand")
    if isinstance(operand, Const):
        return Const(eval_unary(op, operand.value))
    if isinstance(operand, UnOp) and operand.op == op and op in ("neg", "bitnot", "lognot"):
        return operand.operand
    return UnOp(op, operand)


def cast(target_width: int, sign_extend: bool, operand: SymExpr) -> SymExpr:
    check_width(target_width)
    if target_width == operand.width:
        return operand
    if isinstance(operand, Const):
        return Const(eval_cast(target_width, sign_extend, operand.value))
    return Cast(target_width, sign_extend, operand)


def negate(cond: SymExpr) -> SymExpr:
    """Logical negation of a width-1 condition, pushed into comparisons."""
    if isinstance(cond, BinOp) and cond.op in COMPARISON_OPS:
        return binop(NEGATED[cond.op], cond.lhs, cond.rhs)
    return unop("lognot", cond)


# ---------------------------------------------------------------------------
# Traversal and concrete evaluation
# ---------------------------------------------------------------------------

def children(expr: SymExpr) -> Tuple[SymExpr, ...]:
    if isinstance(expr, (Cast, UnOp)):
        return (expr.operand,)
    if isinstance(expr, BinOp):
        return (expr.lhs, expr.rhs)
    return ()


def walk(expr: SymExpr) -> Iterator[SymExpr]:
    """Pre-order traversal."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def symbols_of(expr: SymExpr) -> Set[Symbol]:
    return {node.symbol for node in walk(expr) if isinstance(node, Sym)}


def evaluate(expr: SymExpr, assignment: Mapping[int, int],
             _cache: Optional[Dict[SymExpr, BitVecValue]] = None) -> BitVecValue:
    """Evaluate an expression under a symbol-id -> integer assignment.

    Raises:
        KeyError: If a symbol has no value in the assignment.
        DivisionByZero: If a division by zero is evaluated.
    """
    cache = {} if _cache is None else _cache
    if expr in cache:
        return cache[expr]
    if isinstance(expr, Const):
        result = expr.value
    elif isinstance(expr, Sym):
        result = BitVecValue.of(assignment[expr.symbol.id], expr.width)
    elif isinstance(expr, Cast):
        result = eval_cast(expr.target_width, expr.sign_extend, evaluate(expr.operand, assignment, cache))
    elif isinstance(expr, UnOp):
        result = eval_unary(expr.op, evaluate(expr.operand, assignment, cache))
    else:
        result = eval_const(expr.op, evaluate(expr.lhs, assignment, cache),
                            evaluate(expr.rhs, assignment, cache))
    cache[expr] = result
    return result
