"""Lowering of MiniC functions into control-flow graphs.

Every branch edge of the result carries one atomic condition: `&&`, `||`
and logical values are turned into nested branches, and calls nested in
expressions are hoisted into `$t<n>` temporaries in evaluation order.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple, Union

from .ast import (
    INT, NOWHERE, Assignment, Binary, Block, Call, CastExpr, CType, Declaration, Expr,
    ExprStmt, FunctionDef, IfStmt, IntLiteral, Location, Param, ReturnStmt, Stmt,
    TranslationUnit, Unary, Var, WhileStmt,
)

logger = logging.getLogger(__name__)

TEMP_PREFIX = "$t"


@dataclass(frozen=True)
class DeclInstr:
    """Declaration without initializer: the variable gets a fresh unknown value."""

    name: str
    type: CType
    loc: Location = NOWHERE


@dataclass(frozen=True)
class AssignInstr:
    target: Expr
    value: Expr
    loc: Location = NOWHERE


@dataclass(frozen=True)
class CallInstr:
    target: Optional[str]
    callee: str
    args: Tuple[Expr, ...]
    return_type: CType
    param_types: Tuple[CType, ...]
    loc: Location = NOWHERE


@dataclass(frozen=True)
class EvalInstr:
    """Expression evaluated for its checks only (`*p;`, `x / y;`)."""

    expr: Expr
    loc: Location = NOWHERE


Instr = Union[DeclInstr, AssignInstr, CallInstr, EvalInstr]


@dataclass(frozen=True)
class Jump:
    target: int


@dataclass(frozen=True)
class Branch:
    cond: Expr
    on_true: int
    on_false: int
    loc: Location = NOWHERE


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    loc: Location = NOWHERE


Terminator = Union[Jump, Branch, Return]


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    cond: Optional[Expr] = None
    truth: Optional[bool] = None


@dataclass
class BasicBlock:
    id: int
    instrs: List[Instr] = field(default_factory=list)
    terminator: Optional[Terminator] = None


@dataclass
class Cfg:
    function: str
    return_type: CType
    params: Tuple[Param, ...]
    var_types: Dict[str, CType]
    blocks: Dict[int, BasicBlock]
    entry: int
    loop_headers: Set[int] = field(default_factory=set)

    @property
    def edges(self) -> List[Edge]:
        edges: List[Edge] = []
        for block in self.blocks.values():
            term = block.terminator
            if isinstance(term, Jump):
                edges.append(Edge(block.id, term.target))
            elif isinstance(term, Branch):
                edges.append(Edge(block.id, term.on_true, term.cond, True))
                edges.append(Edge(block.id, term.on_false, term.cond, False))
        return edges

    @property
    def exits(self) -> List[int]:
        return [b.id for b in self.blocks.values() if isinstance(b.terminator, Return)]

    def slot_of(self, name: str) -> int:
        return list(self.var_types).index(name)


def _has_logical(expr: Expr) -> bool:
    if isinstance(expr, Binary):
        return expr.op in ("&&", "||") or _has_logical(expr.lhs) or _has_logical(expr.rhs)
    if isinstance(expr, (Unary, CastExpr)):
        return _has_logical(expr.operand)
    if isinstance(expr, Call):
        return any(_has_logical(arg) for arg in expr.args)
    return False


def _has_call(expr: Expr) -> bool:
    if isinstance(expr, Call):
        return True
    if isinstance(expr, Binary):
        return _has_call(expr.lhs) or _has_call(expr.rhs)
    if isinstance(expr, (Unary, CastExpr)):
        return _has_call(expr.operand)
    return False


class _Lowering:
    """Builds the CFG of one function."""

    def __init__(self, unit: TranslationUnit, function: FunctionDef):
        self.unit = unit
        self.function = function
        self.blocks: Dict[int, BasicBlock] = {}
        self.loop_headers: Set[int] = set()
        self.var_types: Dict[str, CType] = {p.name: p.type for p in function.params}
        self.temps = 0
        self.entry = self._new_block()
        self.current = self.entry
        self.loc = function.loc

    def _new_block(self) -> int:
        block_id = len(self.blocks)
        self.blocks[block_id] = BasicBlock(block_id)
        return block_id

    def _emit(self, instr: Instr) -> None:
        self.blocks[self.current].instrs.append(instr)

    def _terminate(self, terminator: Terminator) -> None:
        block = self.blocks[self.current]
        if block.terminator is None:
            block.terminator = terminator

    def _new_temp(self, ctype: CType) -> str:
        self.temps += 1
        name = f"{TEMP_PREFIX}{self.temps}"
        self.var_types[name] = ctype
        return name

    def lower(self) -> Cfg:
        self._block(self.function.body)
        self._terminate(Return(None, self.loc))
        self._prune()
        return Cfg(self.function.name, self.function.return_type, self.function.params,
                   self.var_types, self.blocks, self.entry, self.loop_headers)

    def _prune(self) -> None:
        """Drop blocks unreachable from the entry (code after `return`)."""
        reachable: Set[int] = set()
        stack = [self.entry]
        while stack:
            block_id = stack.pop()
            if block_id in reachable:
                continue
            reachable.add(block_id)
            term = self.blocks[block_id].terminator
            if isinstance(term, Jump):
                stack.append(term.target)
            elif isinstance(term, Branch):
                stack.extend((term.on_true, term.on_false))
        self.blocks = {k: v for k, v in self.blocks.items() if k in reachable}
        self.loop_headers &= reachable

    # -- statements -------------------------------------------------------------

    def _block(self, block: Block) -> None:
        for statement in block.statements:
            self._statement(statement)

    def _statement(self, stmt: Stmt) -> None:
        self.loc = stmt.loc
        if isinstance(stmt, Declaration):
            self.var_types[stmt.name] = stmt.type
            if stmt.init is None:
                self._emit(DeclInstr(stmt.name, stmt.type, stmt.loc))
            else:
                self._assign(Var(stmt.name, stmt.loc), stmt.init)
        elif isinstance(stmt, Assignment):
            self._assign(stmt.target, stmt.value)
        elif isinstance(stmt, ExprStmt):
            if isinstance(stmt.expr, Call):
                self._call(None, stmt.expr)
            else:
                self._emit(EvalInstr(self._pure(stmt.expr), self.loc))
        elif isinstance(stmt, Block):
            self._block(stmt)
        elif isinstance(stmt, IfStmt):
            then_block = self._new_block()
            join = self._new_block()
            else_block = self._new_block() if stmt.otherwise is not None else join
            self._condition(stmt.cond, then_block, else_block)
            self.current = then_block
            self._block(stmt.then)
            self._terminate(Jump(join))
            if stmt.otherwise is not None:
                self.current = else_block
                self._block(stmt.otherwise)
                self._terminate(Jump(join))
            self.current = join
        elif isinstance(stmt, WhileStmt):
            header = self._new_block()
            self._terminate(Jump(header))
            self.loop_headers.add(header)
            body = self._new_block()
            exit_block = self._new_block()
            self.current = header
            self.loc = stmt.loc
            self._condition(stmt.cond, body, exit_block)
            self.current = body
            self._block(stmt.body)
            self._terminate(Jump(header))
            self.current = exit_block
        elif isinstance(stmt, ReturnStmt):
            value = None if stmt.value is None else self._pure(stmt.value)
            self._terminate(Return(value, stmt.loc))
            # Anything after a return lands in an unreachable block that _prune drops.
            self.current = self._new_block()
        else:
            raise TypeError(f"Unknown statement {stmt!r}")

    def _assign(self, target: Expr, value: Expr) -> None:
        if isinstance(target, Unary):
            target = Unary("*", self._pure(target.operand), target.loc)
        if isinstance(value, Call) and isinstance(target, Var):
            self._call(target.name, value)
            return
        self._emit(AssignInstr(target, self._pure(value), self.loc))

    def _call(self, target: Optional[str], call: Call) -> None:
        args = tuple(self._pure(arg) for arg in call.args)
        signature = self.unit.signature(call.callee)
        self._emit(CallInstr(target, call.callee, args, signature.return_type,
                             tuple(p.type for p in signature.params), self.loc))

    # -- conditions and expressions -----------------------------------------------

    def _condition(self, cond: Expr, on_true: int, on_false: int) -> None:
        """Branch to `on_true`/`on_false` on `cond`, splitting `&&`/`||` into nested branches."""
        if isinstance(cond, Binary) and cond.op == "&&":
            middle = self._new_block()
            self._condition(cond.lhs, middle, on_false)
            self.current = middle
            self._condition(cond.rhs, on_true, on_false)
        elif isinstance(cond, Binary) and cond.op == "||":
            middle = self._new_block()
            self._condition(cond.lhs, on_true, middle)
            self.current = middle
            self._condition(cond.rhs, on_true, on_false)
        elif isinstance(cond, Unary) and cond.op == "!" and _has_logical(cond.operand):
            self._condition(cond.operand, on_false, on_true)
        else:
            self._terminate(Branch(self._pure(cond), on_true, on_false, self.loc))

    def _pure(self, expr: Expr) -> Expr:
        """Rewrite `expr` without calls or short-circuit operators, emitting the hoisted parts."""
        if not _has_call(expr) and not _has_logical(expr):
            return expr
        if isinstance(expr, Call):
            signature = self.unit.signature(expr.callee)
            temp = self._new_temp(signature.return_type)
            self._call(temp, expr)
            return Var(temp, expr.loc)
        if isinstance(expr, Binary) and expr.op in ("&&", "||") or (
                isinstance(expr, Unary) and expr.op == "!" and _has_logical(expr.operand)):
            return self._logical_value(expr)
        if isinstance(expr, Binary):
            lhs = self._pure(expr.lhs)
            return Binary(expr.op, lhs, self._pure(expr.rhs), expr.loc)
        if isinstance(expr, Unary):
            return Unary(expr.op, self._pure(expr.operand), expr.loc)
        if isinstance(expr, CastExpr):
            return CastExpr(expr.type, self._pure(expr.operand), expr.loc)
        return expr

    def _logical_value(self, expr: Expr) -> Var:
        temp = self._new_temp(INT)
        on_true, on_false, join = self._new_block(), self._new_block(), self._new_block()
        self._condition(expr, on_true, on_false)
        for block, value in ((on_true, 1), (on_false, 0)):
            self.current = block
            self._emit(AssignInstr(Var(temp, expr.loc), IntLiteral(value, INT, expr.loc), self.loc))
            self._terminate(Jump(join))
        self.current = join
        return Var(temp, expr.loc)


def lower_function(unit: TranslationUnit, function: FunctionDef) -> Cfg:
    return _Lowering(unit, function).lower()


def lower(unit: TranslationUnit) -> Dict[str, Cfg]:
    """Build one CFG per function defined in `unit`."""
    cfgs = {function.name: lower_function(unit, function) for function in unit.functions}
    logger.debug(f"Lowered {len(cfgs)} function(s) from {unit.filename}")
    return cfgs
