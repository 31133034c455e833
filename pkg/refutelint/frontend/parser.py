"""MiniC parser.

pycparser produces the concrete C syntax tree; this module converts it into
the package's own MiniC AST, rejecting every C feature outside MiniC.
"""

import logging
import re
from typing import Dict, List, Optional, Tuple, Union

from pycparser import c_ast
from pycparser.c_parser import CParser, ParseError

from .ast import (
    ARITHMETIC_OPERATORS, BINARY_OPERATORS, COMPARISON_OPERATORS, INT, LONG, NOWHERE,
    TYPE_SPELLINGS, UNSIGNED_INT, UNSIGNED_LONG, VOID, Assignment, Binary, Block, Call,
    CastExpr, CType, Declaration, Expr, ExprStmt, FunctionDecl, FunctionDef, IfStmt,
    IntLiteral, Location, Param, ReturnStmt, Stmt, TranslationUnit, Unary, Var, WhileStmt,
    common_type, is_null_literal, promote,
)

logger = logging.getLogger(__name__)

_COMMENT_RE = re.compile(r"//[^\n]*|/\*.*?\*/", re.DOTALL)
_INTEGER_RE = re.compile(r"^(0[xX][0-9a-fA-F]+|0[bB][01]+|[0-9]+)([uUlL]*)$")
_CHAR_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34, "a": 7, "b": 8, "f": 12, "v": 11}
_COMPOUND_ASSIGNMENTS = {f"{op}=": op for op in ARITHMETIC_OPERATORS}

INT_MAX = (1 << 31) - 1
UINT_MAX = (1 << 32) - 1
LONG_MAX = (1 << 63) - 1
ULONG_MAX = (1 << 64) - 1


class MiniCSyntaxError(Exception):
    """Malformed MiniC source, or a well-formed C program that is not a valid MiniC program."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.line = line
        self.column = column


class UnsupportedConstruct(Exception):
    """C feature outside the MiniC subset (structs, arrays, loops other than while, ...)."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.line = line
        self.column = column


def _blank_comments(source: str) -> str:
    """Replace comments with spaces, keeping every line and column in place."""
    return _COMMENT_RE.sub(lambda m: re.sub(r"[^\n]", " ", m.group(0)), source)


def _syntax_error_from(error: ParseError, filename: str) -> MiniCSyntaxError:
    text = str(error)
    match = re.match(re.escape(filename) + r":(\d+)(?::(\d+))?:\s*(.*)$", text, re.DOTALL)
    if match:
        line, column, message = int(match.group(1)), int(match.group(2) or 0), match.group(3)
        return MiniCSyntaxError(f"{filename}:{line}:{column}: {message}", line, column)
    return MiniCSyntaxError(text)


def parse(source: str, filename: str = "<input>") -> TranslationUnit:
    """Parse MiniC source text into a TranslationUnit.

    Args:
        source: Program text.
        filename: Name used in diagnostics.

    Raises:
        MiniCSyntaxError: Malformed input, undeclared identifiers, redeclarations.
        UnsupportedConstruct: C features outside MiniC.
    """
    try:
        file_ast = CParser().parse(_blank_comments(source), filename)
    except ParseError as e:
        raise _syntax_error_from(e, filename) from e
    except ValueError as e:
        # pycparser reports malformed literal suffixes this way
        raise MiniCSyntaxError(f"{filename}: {e}") from e
    return _Converter(source, filename).translation_unit(file_ast)


Signature = Tuple[CType, Tuple[Param, ...]]


class _Converter:
    """Walks a pycparser tree and builds the MiniC AST."""

    def __init__(self, source: str, filename: str):
        self.lines = source.splitlines()
        self.filename = filename
        self.signatures: Dict[str, Signature] = {}
        self.scope: Dict[str, CType] = {}
        self.function_name = ""
        self.return_type = VOID

    # -- locations and errors ------------------------------------------------

    def _loc(self, node: c_ast.Node) -> Location:
        coord = getattr(node, "coord", None)
        if coord is None:
            return NOWHERE
        return Location(coord.line, coord.column or 1)

    def _operator_loc(self, node: c_ast.UnaryOp) -> Location:
        """Location of a prefix operator token.

        pycparser stamps unary nodes with the operand's position; the operator
        sits to its left, possibly behind whitespace and opening parentheses.
        """
        operand = self._loc(node)
        if operand.line < 1 or operand.line > len(self.lines):
            return operand
        text = self.lines[operand.line - 1]
        index = min(operand.column - 2, len(text) - 1)
        symbol = node.op[-1] if node.op in ("p++", "p--") else node.op[0]
        while index >= 0 and text[index] in " \t(":
            index -= 1
        if index >= 0 and text[index] == symbol:
            return Location(operand.line, index + 1)
        return operand

    def _unsupported(self, what: str, node: c_ast.Node) -> UnsupportedConstruct:
        loc = self._loc(node)
        return UnsupportedConstruct(f"{self.filename}:{loc}: {what} is not supported in MiniC",
                                    loc.line, loc.column)

    def _error(self, message: str, node: c_ast.Node) -> MiniCSyntaxError:
        loc = self._loc(node)
        return MiniCSyntaxError(f"{self.filename}:{loc}: {message}", loc.line, loc.column)

    # -- types ----------------------------------------------------------------

    def _type(self, node: c_ast.Node) -> CType:
        if isinstance(node, c_ast.Typename):
            return self._type(node.type)
        if isinstance(node, c_ast.PtrDecl):
            pointee = self._type(node.type)
            return pointee.pointer_to()
        if isinstance(node, c_ast.TypeDecl):
            if not isinstance(node.type, c_ast.IdentifierType):
                raise self._unsupported(type(node.type).__name__.lower(), node)
            names = tuple(sorted(node.type.names))
            if "short" in names:
                raise self._unsupported("16-bit type 'short'", node)
            ctype = TYPE_SPELLINGS.get(names)
            if ctype is None:
                raise self._unsupported(f"type '{' '.join(node.type.names)}'", node)
            return ctype
        if isinstance(node, c_ast.ArrayDecl):
            raise self._unsupported("array", node)
        if isinstance(node, c_ast.FuncDecl):
            raise self._unsupported("function pointer", node)
        raise self._unsupported(type(node).__name__, node)

    def _params(self, func_decl: c_ast.FuncDecl, require_names: bool) -> Tuple[Param, ...]:
        if func_decl.args is None:
            return ()
        params: List[Param] = []
        raw = func_decl.args.params
        for index, param in enumerate(raw):
            if isinstance(param, c_ast.EllipsisParam):
                raise self._unsupported("variadic function", param)
            ctype = self._type(param.type)
            if ctype.is_void:
                if len(raw) == 1 and not getattr(param, "name", None):
                    return ()
                raise self._error("parameter has void type", param)
            name = getattr(param, "name", None)
            if not name:
                if require_names:
                    raise self._error("parameter name omitted", param)
                name = f"arg{index}"
            params.append(Param(name, ctype, self._loc(param)))
        return tuple(params)

    # -- top level ------------------------------------------------------------

    def translation_unit(self, file_ast: c_ast.FileAST) -> TranslationUnit:
        prototypes: Dict[str, FunctionDecl] = {}
        definitions: List[c_ast.FuncDef] = []

        for ext in file_ast.ext:
            if isinstance(ext, c_ast.FuncDef):
                decl = ext.decl
                signature = (self._type(decl.type.type), self._params(decl.type, require_names=True))
                if decl.name in {d.decl.name for d in definitions}:
                    raise self._error(f"redefinition of '{decl.name}'", decl)
                self._register(decl, signature)
                definitions.append(ext)
            elif isinstance(ext, c_ast.Decl) and isinstance(ext.type, c_ast.FuncDecl):
                signature = (self._type(ext.type.type), self._params(ext.type, require_names=False))
                self._register(ext, signature)
                prototypes.setdefault(ext.name, FunctionDecl(ext.name, signature[0], signature[1], self._loc(ext)))
            elif isinstance(ext, c_ast.Decl):
                raise self._unsupported("global variable", ext)
            elif isinstance(ext, c_ast.Pragma):
                continue
            else:
                raise self._unsupported(type(ext).__name__.lower(), ext)

        functions = tuple(self._function(definition) for definition in definitions)
        defined = {function.name for function in functions}
        externals = tuple(decl for name, decl in prototypes.items() if name not in defined)
        return TranslationUnit(functions, externals, self.filename)

    def _register(self, decl: c_ast.Decl, signature: Signature) -> None:
        previous = self.signatures.get(decl.name)
        if previous is not None:
            same = previous[0] == signature[0] and [p.type for p in previous[1]] == [p.type for p in signature[1]]
            if not same:
                raise self._error(f"conflicting types for '{decl.name}'", decl)
        self.signatures[decl.name] = signature

    def _function(self, node: c_ast.FuncDef) -> FunctionDef:
        decl = node.decl
        if node.param_decls:
            raise self._unsupported("K&R-style parameter declaration", node)
        return_type, params = self._type(decl.type.type), self._params(decl.type, require_names=True)
        self.function_name = decl.name
        self.return_type = return_type
        self.scope = {}
        for param in params:
            self._declare(param.name, param.type, decl)
        body = self._block(node.body)
        return FunctionDef(decl.name, return_type, params, body, self._loc(decl))

    def _declare(self, name: str, ctype: CType, node: c_ast.Node) -> None:
        if name in self.scope:
            raise self._error(f"redeclaration of '{name}'", node)
        if name in self.signatures:
            raise self._error(f"'{name}' redeclared as a different kind of symbol", node)
        self.scope[name] = ctype

    # -- statements -------------------------------------------------------------

    def _block(self, node: Optional[c_ast.Node]) -> Block:
        if node is None:
            return Block()
        if isinstance(node, c_ast.Compound):
            statements: List[Stmt] = []
            for item in node.block_items or []:
                statements.extend(self._statement(item))
            return Block(tuple(statements), self._loc(node))
        return Block(tuple(self._statement(node)), self._loc(node))

    def _statement(self, node: c_ast.Node) -> List[Stmt]:
        loc = self._loc(node)
        if isinstance(node, c_ast.Compound):
            return [self._block(node)]
        if isinstance(node, c_ast.Decl):
            if node.storage:
                raise self._unsupported(f"storage class '{' '.join(node.storage)}'", node)
            if isinstance(node.type, c_ast.FuncDecl):
                raise self._unsupported("local function declaration", node)
            ctype = self._type(node.type)
            if ctype.is_void:
                raise self._error(f"variable '{node.name}' has void type", node)
            init = None
            if node.init is not None:
                if isinstance(node.init, c_ast.InitList):
                    raise self._unsupported("initializer list", node.init)
                init = self._expression(node.init)
                self._check_assignable(ctype, init, node)
            self._declare(node.name, ctype, node)
            return [Declaration(node.name, ctype, init, loc)]
        if isinstance(node, c_ast.Assignment):
            return [self._assignment(node)]
        if isinstance(node, c_ast.UnaryOp) and node.op in ("++", "--", "p++", "p--"):
            target = self._lvalue(node.expr)
            op = "+" if "+" in node.op else "-"
            value = Binary(op, target, IntLiteral(1, INT, loc), target.loc)
            self._type_of(value, node)
            return [Assignment(target, value, target.loc)]
        if isinstance(node, c_ast.If):
            cond = self._condition(node.cond)
            then = self._block(node.iftrue)
            otherwise = self._block(node.iffalse) if node.iffalse is not None else None
            return [IfStmt(cond, then, otherwise, loc)]
        if isinstance(node, c_ast.While):
            return [WhileStmt(self._condition(node.cond), self._block(node.stmt), loc)]
        if isinstance(node, c_ast.Return):
            if node.expr is None:
                return [ReturnStmt(None, loc)]
            if self.return_type.is_void:
                raise self._error(f"void function '{self.function_name}' should not return a value", node)
            value = self._expression(node.expr)
            self._check_assignable(self.return_type, value, node)
            return [ReturnStmt(value, loc)]
        if isinstance(node, c_ast.EmptyStatement):
            return []
        if isinstance(node, (c_ast.For, c_ast.DoWhile, c_ast.Switch, c_ast.Break, c_ast.Continue,
                             c_ast.Goto, c_ast.Label, c_ast.Case, c_ast.Default)):
            raise self._unsupported(f"'{type(node).__name__.lower()}' statement", node)
        if isinstance(node, c_ast.Cast) and self._type(node.to_type).is_void:
            raise self._unsupported("cast to void", node)
        expr = self._expression(node)
        return [ExprStmt(expr, self._expr_loc(expr, loc))]

    def _expr_loc(self, expr: Expr, fallback: Location) -> Location:
        return expr.loc if expr.loc != NOWHERE else fallback

    def _assignment(self, node: c_ast.Assignment) -> Assignment:
        target = self._lvalue(node.lvalue)
        value = self._expression(node.rvalue)
        if node.op != "=":
            op = _COMPOUND_ASSIGNMENTS.get(node.op)
            if op is None:
                raise self._unsupported(f"assignment operator '{node.op}'", node)
            value = Binary(op, target, value, target.loc)
            self._type_of(value, node)
        self._check_assignable(self._type_of(target, node), value, node)
        return Assignment(target, value, target.loc)

    def _lvalue(self, node: c_ast.Node) -> Expr:
        if isinstance(node, c_ast.ID):
            target = self._expression(node)
            return target
        if isinstance(node, c_ast.UnaryOp) and node.op == "*":
            return self._expression(node)
        raise self._unsupported(f"assignment to {type(node).__name__}", node)

    def _check_assignable(self, target: CType, value: Expr, node: c_ast.Node) -> None:
        source = self._type_of(value, node)
        if source.is_void:
            raise self._error("void value not ignored as it ought to be", node)
        if target.is_pointer and not source.is_pointer and not is_null_literal(value):
            raise self._unsupported("integer to pointer conversion without a cast", node)
        if source.is_pointer and not target.is_pointer:
            raise self._unsupported("pointer to integer conversion without a cast", node)

    def _condition(self, node: c_ast.Node) -> Expr:
        expr = self._expression(node)
        if self._type_of(expr, node).is_void:
            raise self._error("void value used as a condition", node)
        return expr

    # -- expressions ------------------------------------------------------------

    def _expression(self, node: c_ast.Node) -> Expr:
        expr = self._convert(node)
        self._type_of(expr, node)
        return expr

    def _convert(self, node: c_ast.Node) -> Expr:
        loc = self._loc(node)
        if isinstance(node, c_ast.Constant):
            return self._constant(node)
        if isinstance(node, c_ast.ID):
            if node.name not in self.scope:
                if node.name in self.signatures:
                    raise self._unsupported("function designator used as a value", node)
                raise self._error(f"use of undeclared identifier '{node.name}'", node)
            return Var(node.name, loc)
        if isinstance(node, c_ast.UnaryOp):
            if node.op == "+":
                return self._convert(node.expr)
            if node.op in ("-", "!", "~", "*"):
                return Unary(node.op, self._convert(node.expr), self._operator_loc(node))
            if node.op == "&":
                if not isinstance(node.expr, c_ast.ID):
                    raise self._unsupported("address of a non-variable", node)
                return Unary("&", self._convert(node.expr), self._operator_loc(node))
            if node.op in ("++", "--", "p++", "p--"):
                raise self._unsupported("increment or decrement inside an expression", node)
            raise self._unsupported(f"operator '{node.op}'", node)
        if isinstance(node, c_ast.BinaryOp):
            if node.op not in BINARY_OPERATORS:
                raise self._unsupported(f"operator '{node.op}'", node)
            return Binary(node.op, self._convert(node.left), self._convert(node.right), loc)
        if isinstance(node, c_ast.Cast):
            ctype = self._type(node.to_type)
            if ctype.is_void:
                raise self._unsupported("cast to void", node)
            return CastExpr(ctype, self._convert(node.expr), loc)
        if isinstance(node, c_ast.FuncCall):
            return self._call(node)
        if isinstance(node, c_ast.Assignment):
            raise self._unsupported("assignment inside an expression", node)
        if isinstance(node, c_ast.TernaryOp):
            raise self._unsupported("conditional operator", node)
        if isinstance(node, c_ast.ArrayRef):
            raise self._unsupported("array subscript", node)
        if isinstance(node, c_ast.StructRef):
            raise self._unsupported("member access", node)
        if isinstance(node, c_ast.ExprList):
            raise self._unsupported("comma operator", node)
        raise self._unsupported(type(node).__name__, node)

    def _call(self, node: c_ast.FuncCall) -> Call:
        if not isinstance(node.name, c_ast.ID):
            raise self._unsupported("indirect call", node)
        name = node.name.name
        signature = self.signatures.get(name)
        if signature is None:
            raise self._error(f"call to undeclared function '{name}'", node)
        args = tuple(self._convert(arg) for arg in (node.args.exprs if node.args else []))
        params = signature[1]
        if len(args) != len(params):
            raise self._error(f"'{name}' expects {len(params)} argument(s), got {len(args)}", node)
        for arg, param in zip(args, params):
            self._check_assignable(param.type, arg, node)
        return Call(name, args, self._loc(node))

    def _constant(self, node: c_ast.Constant) -> IntLiteral:
        loc = self._loc(node)
        if node.type == "char":
            return IntLiteral(self._char_value(node), INT, loc)
        if node.type not in ("int", "unsigned int", "long int", "unsigned long int",
                             "long long int", "unsigned long long int"):
            raise self._unsupported(f"{node.type} literal", node)
        match = _INTEGER_RE.match(node.value)
        if match is None:
            raise self._error(f"invalid integer literal '{node.value}'", node)
        digits, suffix = match.group(1), match.group(2).lower()
        if digits[:2].lower() == "0x":
            value, decimal = int(digits, 16), False
        elif digits[:2].lower() == "0b":
            value, decimal = int(digits[2:], 2), False
        elif len(digits) > 1 and digits.startswith("0"):
            value, decimal = int(digits, 8), False
        else:
            value, decimal = int(digits), True
        ctype = self._literal_type(value, decimal, "u" in suffix, "l" in suffix)
        if ctype is None:
            raise self._unsupported(f"integer literal '{node.value}' wider than 64 bits", node)
        return IntLiteral(value, ctype, loc)

    @staticmethod
    def _literal_type(value: int, decimal: bool, unsigned: bool, long: bool) -> Optional[CType]:
        candidates: List[CType] = []
        if not long:
            candidates += [UNSIGNED_INT] if unsigned else ([INT] if decimal else [INT, UNSIGNED_INT])
        if unsigned:
            candidates.append(UNSIGNED_LONG)
        else:
            candidates += [LONG] if decimal else [LONG, UNSIGNED_LONG]
        limits = {INT: INT_MAX, UNSIGNED_INT: UINT_MAX, LONG: LONG_MAX, UNSIGNED_LONG: ULONG_MAX}
        for candidate in candidates:
            if value <= limits[candidate]:
                return candidate
        return None

    def _char_value(self, node: c_ast.Constant) -> int:
        body = node.value[1:-1]
        if len(body) == 1 and body != "\\":
            return ord(body)
        if len(body) == 2 and body[0] == "\\" and body[1] in _CHAR_ESCAPES:
            return _CHAR_ESCAPES[body[1]]
        raise self._unsupported(f"character literal {node.value}", node)

    # -- typing -------------------------------------------------------------------

    def _type_of(self, expr: Expr, node: c_ast.Node) -> CType:
        try:
            return expression_type(expr, self.scope, self.signatures)
        except TypeError as e:
            raise UnsupportedConstruct(f"{self.filename}:{self._expr_loc(expr, self._loc(node))}: {e}",
                                       self._loc(node).line, self._loc(node).column) from e


def unary_result_type(op: str, operand: CType) -> CType:
    """Result type of a unary operator.

    Raises:
        TypeError: The operator does not apply to the operand type.
    """
    if operand.is_void:
        raise TypeError("void value used in an expression")
    if op == "!":
        return INT
    if op == "*":
        if not operand.is_pointer:
            raise TypeError(f"indirection requires a pointer operand ('{operand}' invalid)")
        if operand.pointee.is_void:
            raise TypeError("dereference of a void pointer")
        return operand.pointee
    if op == "&":
        return operand.pointer_to()
    if operand.is_pointer:
        raise TypeError(f"invalid operand of type '{operand}' to unary '{op}'")
    return promote(operand)


def comparison_operand_type(lhs: CType, rhs: CType) -> CType:
    """Type both sides of a comparison are converted to."""
    if lhs.is_pointer:
        return lhs
    if rhs.is_pointer:
        return rhs
    return common_type(lhs, rhs)


def binary_result_type(op: str, lhs: CType, rhs: CType) -> CType:
    """Result type of a binary operator.

    Raises:
        TypeError: Pointer arithmetic or void operands.
    """
    if lhs.is_void or rhs.is_void:
        raise TypeError("void value used in an expression")
    if op in COMPARISON_OPERATORS or op in ("&&", "||"):
        return INT
    if lhs.is_pointer or rhs.is_pointer:
        raise TypeError(f"pointer arithmetic ('{op}') is not supported")
    if op in ("<<", ">>"):
        return promote(lhs)
    return common_type(lhs, rhs)


def expression_type(expr: Expr, variables: Dict[str, CType],
                    functions: Dict[str, Union[Signature, FunctionDecl, FunctionDef]]) -> CType:
    """Static type of a MiniC expression.

    Raises:
        TypeError: The expression is ill-typed in MiniC.
    """
    if isinstance(expr, IntLiteral):
        return expr.type
    if isinstance(expr, Var):
        return variables[expr.name]
    if isinstance(expr, Unary):
        return unary_result_type(expr.op, expression_type(expr.operand, variables, functions))
    if isinstance(expr, Binary):
        lhs = expression_type(expr.lhs, variables, functions)
        rhs = expression_type(expr.rhs, variables, functions)
        if expr.op in COMPARISON_OPERATORS and lhs.is_pointer != rhs.is_pointer:
            integer = expr.rhs if lhs.is_pointer else expr.lhs
            if not is_null_literal(integer):
                raise TypeError("comparison between pointer and integer")
        return binary_result_type(expr.op, lhs, rhs)
    if isinstance(expr, CastExpr):
        expression_type(expr.operand, variables, functions)
        return expr.type
    if isinstance(expr, Call):
        signature = functions[expr.callee]
        if isinstance(signature, tuple):
            return signature[0]
        return signature.return_type
    raise TypeError(f"unknown expression {expr!r}")
