"""MiniC abstract syntax tree and type rules.

Nodes are immutable. Source locations are carried on every node but do not
take part in equality, so a printed-and-reparsed tree compares equal to the
original.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class Location:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


NOWHERE = Location(0, 0)


def _loc() -> Location:
    return field(default=NOWHERE, compare=False, repr=False)


@dataclass(frozen=True)
class CType:
    """Fixed-width integer or pointer type."""

    name: str
    width: int
    signed: bool
    pointee: Optional["CType"] = None

    @property
    def is_pointer(self) -> bool:
        return self.pointee is not None

    @property
    def is_void(self) -> bool:
        return self.width == 0

    @property
    def is_bool(self) -> bool:
        return self.width == 1 and not self.is_pointer

    def pointer_to(self) -> "CType":
        return CType(f"{self.name} *", 64, False, self)

    def __str__(self) -> str:
        return self.name


VOID = CType("void", 0, False)
BOOL = CType("_Bool", 1, False)
CHAR = CType("char", 8, True)
SIGNED_CHAR = CType("signed char", 8, True)
UNSIGNED_CHAR = CType("unsigned char", 8, False)
INT = CType("int", 32, True)
UNSIGNED_INT = CType("unsigned int", 32, False)
LONG = CType("long", 64, True)
UNSIGNED_LONG = CType("unsigned long", 64, False)

# Spelling (sorted specifier words) -> type. `short` is deliberately absent.
TYPE_SPELLINGS = {
    ("void",): VOID,
    ("_Bool",): BOOL,
    ("char",): CHAR,
    ("char", "signed"): SIGNED_CHAR,
    ("char", "unsigned"): UNSIGNED_CHAR,
    ("int",): INT,
    ("signed",): INT,
    ("int", "signed"): INT,
    ("unsigned",): UNSIGNED_INT,
    ("int", "unsigned"): UNSIGNED_INT,
    ("long",): LONG,
    ("int", "long"): LONG,
    ("long", "signed"): LONG,
    ("int", "long", "signed"): LONG,
    ("long", "long"): LONG,
    ("int", "long", "long"): LONG,
    ("long", "long", "signed"): LONG,
    ("int", "long", "long", "signed"): LONG,
    ("long", "unsigned"): UNSIGNED_LONG,
    ("int", "long", "unsigned"): UNSIGNED_LONG,
    ("long", "long", "unsigned"): UNSIGNED_LONG,
    ("int", "long", "long", "unsigned"): UNSIGNED_LONG,
}


def promote(ctype: CType) -> CType:
    """Integer promotion: everything narrower than int becomes int."""
    if not ctype.is_pointer and ctype.width < 32:
        return INT
    return ctype


def common_type(lhs: CType, rhs: CType) -> CType:
    """Usual arithmetic conversions over promoted integer operands."""
    lhs, rhs = promote(lhs), promote(rhs)
    if lhs.width != rhs.width:
        return lhs if lhs.width > rhs.width else rhs
    if lhs.signed and rhs.signed:
        return lhs
    return UNSIGNED_INT if lhs.width == 32 else UNSIGNED_LONG


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

ARITHMETIC_OPERATORS = frozenset({"+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"})
COMPARISON_OPERATORS = frozenset({"<", "<=", ">", ">=", "==", "!="})
LOGICAL_OPERATORS = frozenset({"&&", "||"})
BINARY_OPERATORS = ARITHMETIC_OPERATORS | COMPARISON_OPERATORS | LOGICAL_OPERATORS
UNARY_OPERATORS = frozenset({"-", "!", "~", "*", "&"})


@dataclass(frozen=True)
class IntLiteral:
    value: int
    type: CType = INT
    loc: Location = _loc()


@dataclass(frozen=True)
class Var:
    name: str
    loc: Location = _loc()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    loc: Location = _loc()


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    loc: Location = _loc()


@dataclass(frozen=True)
class CastExpr:
    type: CType
    operand: "Expr"
    loc: Location = _loc()


@dataclass(frozen=True)
class Call:
    callee: str
    args: Tuple["Expr", ...] = ()
    loc: Location = _loc()


Expr = Union[IntLiteral, Var, Unary, Binary, CastExpr, Call]


def is_null_literal(expr: Expr) -> bool:
    return isinstance(expr, IntLiteral) and expr.value == 0


def contains_call(expr: Expr) -> bool:
    if isinstance(expr, Call):
        return True
    if isinstance(expr, (Unary, CastExpr)):
        return contains_call(expr.operand)
    if isinstance(expr, Binary):
        return contains_call(expr.lhs) or contains_call(expr.rhs)
    return False


# ---------------------------------------------------------------------------
# Statements and declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Declaration:
    name: str
    type: CType
    init: Optional[Expr] = None
    loc: Location = _loc()


@dataclass(frozen=True)
class Assignment:
    """`target = value`; target is a Var or a `*` Unary."""

    target: Expr
    value: Expr
    loc: Location = _loc()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    loc: Location = _loc()


@dataclass(frozen=True)
class Block:
    statements: Tuple["Stmt", ...] = ()
    loc: Location = _loc()


@dataclass(frozen=True)
class IfStmt:
    cond: Expr
    then: Block
    otherwise: Optional[Block] = None
    loc: Location = _loc()


@dataclass(frozen=True)
class WhileStmt:
    cond: Expr
    body: Block
    loc: Location = _loc()


@dataclass(frozen=True)
class ReturnStmt:
    value: Optional[Expr] = None
    loc: Location = _loc()


Stmt = Union[Declaration, Assignment, ExprStmt, Block, IfStmt, WhileStmt, ReturnStmt]


@dataclass(frozen=True)
class Param:
    name: str
    type: CType
    loc: Location = _loc()


@dataclass(frozen=True)
class FunctionDecl:
    """Prototype of a function without a body in this translation unit."""

    name: str
    return_type: CType
    params: Tuple[Param, ...] = ()
    loc: Location = _loc()


@dataclass(frozen=True)
class FunctionDef:
    name: str
    return_type: CType
    params: Tuple[Param, ...]
    body: Block
    loc: Location = _loc()


@dataclass(frozen=True)
class TranslationUnit:
    functions: Tuple[FunctionDef, ...] = ()
    externals: Tuple[FunctionDecl, ...] = ()
    filename: str = field(default="<input>", compare=False)

    def function(self, name: str) -> Optional[FunctionDef]:
        for function in self.functions:
            if function.name == name:
                return function
        return None

    def signature(self, name: str) -> Optional[Union[FunctionDef, FunctionDecl]]:
        return self.function(name) or next((d for d in self.externals if d.name == name), None)
