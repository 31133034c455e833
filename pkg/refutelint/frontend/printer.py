"""Pretty-printer for the MiniC AST.

Output re-parses to a structurally identical tree: binary operations are
fully parenthesized, every if/while body is braced, and literals carry the
suffix that reproduces their type.
"""

from typing import List

from .ast import (
    INT, LONG, UNSIGNED_INT, UNSIGNED_LONG, Assignment, Binary, Block, Call, CastExpr, CType,
    Declaration, Expr, ExprStmt, FunctionDecl, FunctionDef, IfStmt, IntLiteral,
    ReturnStmt, Stmt, TranslationUnit, Unary, Var, WhileStmt,
)

INDENT = "  "
_SUFFIXES = {INT: "", UNSIGNED_INT: "u", LONG: "l", UNSIGNED_LONG: "ul"}


def declarator(ctype: CType, name: str) -> str:
    """`int *p`-style declarator for `name` of type `ctype`."""
    stars = ""
    while ctype.is_pointer:
        stars += "*"
        ctype = ctype.pointee
    if not name:
        return f"{ctype.name} {stars}".rstrip()
    return f"{ctype.name} {stars}{name}"


def format_expr(expr: Expr) -> str:
    if isinstance(expr, IntLiteral):
        return f"{expr.value}{_SUFFIXES.get(expr.type, '')}"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        operand = format_expr(expr.operand)
        if isinstance(expr.operand, Unary):
            operand = f"({operand})"
        return f"{expr.op}{operand}"
    if isinstance(expr, Binary):
        return f"({format_expr(expr.lhs)} {expr.op} {format_expr(expr.rhs)})"
    if isinstance(expr, CastExpr):
        return f"(({declarator(expr.type, '')}) {format_expr(expr.operand)})"
    if isinstance(expr, Call):
        return f"{expr.callee}({', '.join(format_expr(arg) for arg in expr.args)})"
    raise TypeError(f"Cannot print {expr!r}")


def _params(params) -> str:
    if not params:
        return "void"
    return ", ".join(declarator(p.type, p.name) for p in params)


def _block(block: Block, depth: int, out: List[str]) -> None:
    for statement in block.statements:
        _statement(statement, depth, out)


def _statement(stmt: Stmt, depth: int, out: List[str]) -> None:
    pad = INDENT * depth
    if isinstance(stmt, Declaration):
        text = declarator(stmt.type, stmt.name)
        if stmt.init is not None:
            text += f" = {format_expr(stmt.init)}"
        out.append(f"{pad}{text};")
    elif isinstance(stmt, Assignment):
        out.append(f"{pad}{format_expr(stmt.target)} = {format_expr(stmt.value)};")
    elif isinstance(stmt, ExprStmt):
        out.append(f"{pad}{format_expr(stmt.expr)};")
    elif isinstance(stmt, ReturnStmt):
        out.append(f"{pad}return;" if stmt.value is None else f"{pad}return {format_expr(stmt.value)};")
    elif isinstance(stmt, Block):
        out.append(f"{pad}{{")
        _block(stmt, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(stmt, IfStmt):
        out.append(f"{pad}if ({format_expr(stmt.cond)}) {{")
        _block(stmt.then, depth + 1, out)
        if stmt.otherwise is not None:
            out.append(f"{pad}}} else {{")
            _block(stmt.otherwise, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(stmt, WhileStmt):
        out.append(f"{pad}while ({format_expr(stmt.cond)}) {{")
        _block(stmt.body, depth + 1, out)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"Cannot print {stmt!r}")


def format_function(function: FunctionDef) -> str:
    out = [f"{declarator(function.return_type, function.name)}({_params(function.params)}) {{"]
    _block(function.body, 1, out)
    out.append("}")
    return "\n".join(out)


def format_prototype(decl: FunctionDecl) -> str:
    return f"{declarator(decl.return_type, decl.name)}({_params(decl.params)});"


def format_unit(unit: TranslationUnit) -> str:
    """Render a whole translation unit; prototypes come first."""
    chunks = [format_prototype(decl) for decl in unit.externals]
    chunks += [format_function(function) for function in unit.functions]
    return "\n\n".join(chunks) + ("\n" if chunks else "")
