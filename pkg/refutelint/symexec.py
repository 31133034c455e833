"""Path-sensitive symbolic execution over MiniC control-flow graphs.

Exploration is a depth-first walk that never merges states: the exploded
graph is a tree and every node has one parent chain back to the root.
Calls to functions defined in the same translation unit are inlined up to
the call-depth budget; anything else is skipped and its effects are modeled
as unknown values.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .checkers import CheckerEvent, EventKind, enabled_checkers
from .config import ExplorationBudget
from .frontend.ast import (
    COMPARISON_OPERATORS, INT, CastExpr, Binary, Call, CType, Expr, IntLiteral, Location,
    Unary, Var, promote,
)
from .frontend.cfg import (
    AssignInstr, Branch, CallInstr, Cfg, DeclInstr, EvalInstr, Instr, Jump, Return,
)
from .frontend.parser import binary_result_type, comparison_operand_type, unary_result_type
from .intervals import assume
from .ir import (
    Const, Origin, Signedness, Sym, SymbolFactory, SymExpr, binop, cast, const, negate, unop,
)
from .state import Frame, ProgramPoint, ProgramState

logger = logging.getLogger(__name__)

_SIGNED_COMPARISONS = {"<": "slt", "<=": "sle", ">": "sgt", ">=": "sge", "==": "eq", "!=": "ne"}
_UNSIGNED_COMPARISONS = {"<": "ult", "<=": "ule", ">": "ugt", ">=": "uge", "==": "eq", "!=": "ne"}
_ARITHMETIC = {"+": "add", "-": "sub", "*": "mul", "&": "and", "|": "or", "^": "xor", "<<": "shl"}


class NotAnErrorNode(Exception):
    """Raised when a path is requested for a node that is not a property violation."""
    pass


class OpKind(str, Enum):
    ENTRY = "entry"
    ASSIGN = "assign"
    ASSUME = "assume"
    CALL = "call"
    RETURN = "return"
    DEREF = "deref"
    EVAL = "eval"
    EPSILON = "epsilon"


@dataclass(frozen=True)
class EdgeOp:
    """Label of the edge leading into a node."""

    kind: OpKind
    text: str = ""
    cond: Optional[SymExpr] = None
    truth: Optional[bool] = None

    def __str__(self) -> str:
        if self.kind is OpKind.ASSUME:
            return f"assume {self.cond} {'T' if self.truth else 'F'}"
        return f"{self.kind.value} {self.text}".rstrip()


@dataclass(eq=False)
class ExplodedNode:
    id: int
    state: ProgramState
    op: EdgeOp
    parent: Optional["ExplodedNode"] = None
    event: Optional[CheckerEvent] = None
    # Set on the return out of the entry function; such nodes are never expanded.
    terminal: bool = False

    @property
    def is_error(self) -> bool:
        return self.event is not None

    def __repr__(self) -> str:
        return f"ExplodedNode(#{self.id}, {self.op})"


@dataclass(frozen=True)
class BudgetExhausted:
    """Graph annotation: exploration stopped early somewhere."""

    reason: str
    point: ProgramPoint
    node_id: int


@dataclass
class ExplodedGraph:
    entry: str
    root: Optional[ExplodedNode] = None
    nodes: List[ExplodedNode] = field(default_factory=list)
    error_nodes: List[ExplodedNode] = field(default_factory=list)
    annotations: List[BudgetExhausted] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return bool(self.annotations)


class _PathEnd(Exception):
    """The current path cannot continue past a violation."""
    pass


def extract_path(node: ExplodedNode) -> List[ExplodedNode]:
    """Root-to-node sequence ending in the error node `node`.

    Raises:
        NotAnErrorNode: If `node` carries no violation.
    """
    if not node.is_error:
        raise NotAnErrorNode(f"Node #{node.id} ({node.op}) is not an error node")
    path = []
    current: Optional[ExplodedNode] = node
    while current is not None:
        path.append(current)
        current = current.parent
    path.reverse()
    return path


class _Evaluation:
    """Evaluates expressions of one instruction against a state.

    Checker events raised while evaluating are collected in `events`; the
    state is narrowed to the non-violating values so evaluation can go on.
    """

    def __init__(self, executor: "Executor", state: ProgramState):
        self.executor = executor
        self.state = state
        self.events: List[CheckerEvent] = []

    @property
    def cfg(self) -> Cfg:
        return self.executor.cfgs[self.state.frame.function]

    def var_type(self, name: str, depth: Optional[int] = None) -> CType:
        frame = self.state.frames[(depth or self.state.depth) - 1]
        return self.executor.cfgs[frame.function].var_types[name]

    def convert(self, value: SymExpr, source: CType, target: CType) -> SymExpr:
        if target.is_bool and not source.is_bool:
            return binop("ne", value, const(0, value.width))
        if target.width == source.width:
            return value
        return cast(target.width, source.signed, value)

    def dispatch(self, kind: EventKind, value: SymExpr, loc: Location, name: Optional[str] = None) -> None:
        fired = []
        for checker in self.executor.checkers:
            if checker.subscribes is kind:
                event = checker.check(self.state, value, loc, name)
                if event is not None:
                    fired.append(event)
        if not fired:
            return
        self.events.extend(fired)
        safe = assume(self.state, fired[0].violation, False)
        if safe is None:
            raise _PathEnd()
        self.state = safe

    # -- values ---------------------------------------------------------------

    def value(self, expr: Expr) -> Tuple[SymExpr, CType]:
        if isinstance(expr, IntLiteral):
            return const(expr.value, expr.type.width), expr.type
        if isinstance(expr, Var):
            value = self.state.lookup(expr.name)
            ctype = self.var_type(expr.name)
            if value is None:
                value = self.executor.fresh(ctype, expr.name, expr.loc)
                self.state = self.state.bind(expr.name, value)
            return value, ctype
        if isinstance(expr, Unary):
            return self._unary(expr)
        if isinstance(expr, Binary):
            return self._binary(expr)
        if isinstance(expr, CastExpr):
            value, ctype = self.value(expr.operand)
            return self.convert(value, ctype, expr.type), expr.type
        if isinstance(expr, Call):
            raise ValueError(f"Call to '{expr.callee}' was not hoisted by lowering")
        raise TypeError(f"Unknown expression {expr!r}")

    def _unary(self, expr: Unary) -> Tuple[SymExpr, CType]:
        if expr.op == "!":
            return cast(32, False, self.condition(expr)), INT
        if expr.op == "&":
            name = expr.operand.name
            address, self.state = self.state.address_of(name, self.cfg.slot_of(name))
            return address, self.var_type(name).pointer_to()
        value, ctype = self.value(expr.operand)
        if expr.op == "*":
            return self.load(value, ctype, expr)
        result_type = unary_result_type(expr.op, ctype)
        value = self.convert(value, ctype, result_type)
        return unop("neg" if expr.op == "-" else "bitnot", value), result_type

    def _binary(self, expr: Binary) -> Tuple[SymExpr, CType]:
        if expr.op in COMPARISON_OPERATORS:
            return cast(32, False, self.condition(expr)), INT
        if expr.op in ("&&", "||"):
            raise ValueError(f"Short-circuit '{expr.op}' was not lowered")
        lhs, lhs_type = self.value(expr.lhs)
        rhs, rhs_type = self.value(expr.rhs)
        result_type = binary_result_type(expr.op, lhs_type, rhs_type)
        lhs = self.convert(lhs, lhs_type, result_type)
        if expr.op in ("<<", ">>"):
            amount_type = promote(rhs_type)
            rhs = cast(result_type.width, False, self.convert(rhs, rhs_type, amount_type))
            if expr.op == ">>":
                op = "ashr" if result_type.signed else "lshr"
            else:
                op = "shl"
            return binop(op, lhs, rhs), result_type
        rhs = self.convert(rhs, rhs_type, result_type)
        if expr.op in ("/", "%"):
            self.dispatch(EventKind.DIVISION, rhs, expr.loc)
            rhs = self._narrowed(rhs)
            if expr.op == "/":
                op = "sdiv" if result_type.signed else "udiv"
            else:
                op = "srem" if result_type.signed else "urem"
            return binop(op, lhs, rhs), result_type
        return binop(_ARITHMETIC[expr.op], lhs, rhs), result_type

    def _narrowed(self, value: SymExpr) -> SymExpr:
        """Collapse `value` to a constant when the range solver pins it to one point."""
        interval = self.state.constraints.get(value)
        if interval is not None and interval.is_point:
            return Const(interval.lower)
        return value

    def load(self, pointer: SymExpr, pointer_type: CType, expr: Unary) -> Tuple[SymExpr, CType]:
        name = expr.operand.name if isinstance(expr.operand, Var) else None
        self.dispatch(EventKind.DEREFERENCE, pointer, expr.loc, name)
        pointee = pointer_type.pointee
        target = self.state.resolve_address(pointer)
        if target is not None:
            depth, variable = target
            value = self.state.frames[depth - 1].lookup(variable)
            if value is not None:
                return self.convert(value, self.var_type(variable, depth), pointee), pointee
        return self.executor.fresh(pointee, f"*{name or 'ptr'}", expr.loc), pointee

    def store(self, target: Unary, value: SymExpr, value_type: CType) -> str:
        pointer, pointer_type = self.value(target.operand)
        name = target.operand.name if isinstance(target.operand, Var) else None
        self.dispatch(EventKind.DEREFERENCE, pointer, target.loc, name)
        resolved = self.state.resolve_address(pointer)
        if resolved is None:
            # Writes through pointers we cannot resolve are not modeled.
            return f"*{pointer} = {value} (dropped)"
        depth, variable = resolved
        stored = self.convert(value, value_type, self.var_type(variable, depth))
        self.state = self.state.bind(variable, stored, depth)
        return f"*{pointer} = {stored}"

    # -- conditions -----------------------------------------------------------

    def condition(self, expr: Expr) -> SymExpr:
        """Evaluate `expr` as a width-1 branch condition."""
        if isinstance(expr, Binary) and expr.op in COMPARISON_OPERATORS:
            lhs, lhs_type = self.value(expr.lhs)
            rhs, rhs_type = self.value(expr.rhs)
            operand_type = comparison_operand_type(lhs_type, rhs_type)
            lhs = self.convert(lhs, lhs_type, operand_type)
            rhs = self.convert(rhs, rhs_type, operand_type)
            table = _SIGNED_COMPARISONS if operand_type.signed else _UNSIGNED_COMPARISONS
            return binop(table[expr.op], lhs, rhs)
        if isinstance(expr, Unary) and expr.op == "!":
            return negate(self.condition(expr.operand))
        if isinstance(expr, Binary) and expr.op in ("&&", "||"):
            raise ValueError(f"Short-circuit '{expr.op}' was not lowered")
        value, _ = self.value(expr)
        return binop("ne", value, const(0, value.width))


class Executor:
    """Builds the exploded graph of one entry function."""

    def __init__(self, cfgs: Mapping[str, Cfg], budget: Optional[ExplorationBudget] = None,
                 checkers: Optional[Sequence[str]] = None):
        self.cfgs = dict(cfgs)
        self.budget = budget or ExplorationBudget()
        self.checkers = enabled_checkers(checkers)
        self.symbols = SymbolFactory()
        self.graph: Optional[ExplodedGraph] = None
        self._halted = False

    def fresh(self, ctype: CType, name: str, loc: Location) -> Sym:
        signedness = Signedness.SIGNED if ctype.signed else Signedness.UNSIGNED
        symbol = self.symbols.mk_symbol(ctype.width, signedness, Origin(name, loc.line, loc.column))
        return Sym(symbol)

    # -- graph construction -------------------------------------------------------

    def _node(self, parent: Optional[ExplodedNode], state: ProgramState, op: EdgeOp,
              event: Optional[CheckerEvent] = None) -> Optional[ExplodedNode]:
        graph = self.graph
        if len(graph.nodes) >= self.budget.max_nodes:
            if not self._halted:
                self._halted = True
                graph.annotations.append(BudgetExhausted("max-nodes", state.program_point,
                                                         parent.id if parent else -1))
                logger.warning(f"Node budget of {self.budget.max_nodes} exhausted in '{graph.entry}'")
            return None
        node = ExplodedNode(len(graph.nodes), state, op, parent, event)
        graph.nodes.append(node)
        if event is not None:
            graph.error_nodes.append(node)
        return node

    def execute(self, entry: str, inputs: Optional[Mapping[str, int]] = None) -> ExplodedGraph:
        """Explore every path of `entry`.

        Args:
            entry: Name of a function defined in the translation unit.
            inputs: Concrete values for some or all parameters; the rest stay symbolic.
        """
        if entry not in self.cfgs:
            raise KeyError(f"No function named '{entry}'")
        cfg = self.cfgs[entry]
        self.graph = ExplodedGraph(entry)
        self._halted = False
        inputs = inputs or {}

        frame = Frame(entry, ProgramPoint(entry, cfg.entry, 0))
        state = ProgramState((frame,))
        root = self._node(None, state, EdgeOp(OpKind.ENTRY, entry))
        self.graph.root = root

        start = root
        if cfg.params:
            bindings = []
            for param in cfg.params:
                if param.name in inputs:
                    value: SymExpr = const(inputs[param.name], param.type.width)
                else:
                    value = self.fresh(param.type, param.name, param.loc)
                state = state.bind(param.name, value)
                bindings.append(f"{param.name} = {value}")
            start = self._node(root, state, EdgeOp(OpKind.ASSIGN, ", ".join(bindings)))

        settled = self._settle(start.state, start)
        if settled is not start.state and settled is not None:
            start.state = settled
        stack = [start] if settled is not None else []
        while stack and not self._halted:
            node = stack.pop()
            children = self._expand(node)
            for child in reversed(children):
                if not child.is_error and not child.terminal:
                    stack.append(child)

        logger.debug(f"Explored '{entry}': {len(self.graph.nodes)} nodes, "
                     f"{len(self.graph.error_nodes)} error node(s), {self.symbols.count} symbol(s)")
        return self.graph

    # -- control flow ----------------------------------------------------------------

    def _enter(self, state: ProgramState, block_id: int, parent: ExplodedNode) -> Optional[ProgramState]:
        frame = state.frame
        cfg = self.cfgs[frame.function]
        if block_id in cfg.loop_headers:
            if frame.visit_count(block_id) >= self.budget.max_loop_unrollings:
                point = ProgramPoint(frame.function, block_id, 0)
                self.graph.annotations.append(BudgetExhausted("loop-unrolling", point, parent.id))
                return None
            frame = frame.visit(block_id)
        frame = replace(frame, point=ProgramPoint(frame.function, block_id, 0))
        return state.with_frame(frame)

    def _settle(self, state: Optional[ProgramState], parent: ExplodedNode) -> Optional[ProgramState]:
        """Follow unconditional jumps so nodes only sit at instructions, branches and returns."""
        while state is not None:
            point = state.program_point
            block = self.cfgs[point.function].blocks[point.block]
            if point.index < len(block.instrs) or not isinstance(block.terminator, Jump):
                return state
            state = self._enter(state, block.terminator.target, parent)
        return None

    def _goto(self, state: ProgramState, block_id: int, parent: ExplodedNode) -> Optional[ProgramState]:
        return self._settle(self._enter(state, block_id, parent), parent)

    def _advance(self, state: ProgramState, parent: ExplodedNode) -> Optional[ProgramState]:
        point = state.program_point
        return self._settle(state.at(replace(point, index=point.index + 1)), parent)

    def _expand(self, node: ExplodedNode) -> List[ExplodedNode]:
        point = node.state.program_point
        block = self.cfgs[point.function].blocks[point.block]
        if point.index < len(block.instrs):
            return self._instruction(node, block.instrs[point.index])
        return self._terminator(node, block.terminator)

    def _errors(self, node: ExplodedNode, evaluation: _Evaluation) -> List[ExplodedNode]:
        children = []
        for event in evaluation.events:
            child = self._node(node, event.state, EdgeOp(OpKind.EPSILON, event.checker.value), event)
            if child is not None:
                children.append(child)
        return children

    def _instruction(self, node: ExplodedNode, instr: Instr) -> List[ExplodedNode]:
        evaluation = _Evaluation(self, node.state)
        try:
            op, inlined = self._execute_instr(evaluation, instr, node)
        except _PathEnd:
            return self._errors(node, evaluation)
        children = self._errors(node, evaluation)
        if inlined:
            successor = self._settle(evaluation.state, node)
        else:
            successor = self._advance(evaluation.state, node)
        if successor is not None:
            child = self._node(node, successor, op)
            if child is not None:
                children.append(child)
        return children

    def _execute_instr(self, evaluation: _Evaluation, instr: Instr,
                       node: ExplodedNode) -> Tuple[EdgeOp, bool]:
        if isinstance(instr, DeclInstr):
            value = self.fresh(instr.type, instr.name, instr.loc)
            evaluation.state = evaluation.state.bind(instr.name, value)
            return EdgeOp(OpKind.ASSIGN, f"{instr.name} = {value}"), False
        if isinstance(instr, AssignInstr):
            value, value_type = evaluation.value(instr.value)
            if isinstance(instr.target, Var):
                name = instr.target.name
                value = evaluation.convert(value, value_type, evaluation.var_type(name))
                evaluation.state = evaluation.state.bind(name, value)
                return EdgeOp(OpKind.ASSIGN, f"{name} = {value}"), False
            text = evaluation.store(instr.target, value, value_type)
            return EdgeOp(OpKind.DEREF, text), False
        if isinstance(instr, EvalInstr):
            value, _ = evaluation.value(instr.expr)
            kind = OpKind.DEREF if isinstance(instr.expr, Unary) and instr.expr.op == "*" else OpKind.EVAL
            return EdgeOp(kind, str(value)), False
        if isinstance(instr, CallInstr):
            args = []
            for arg, param_type in zip(instr.args, instr.param_types):
                value, value_type = evaluation.value(arg)
                args.append(evaluation.convert(value, value_type, param_type))
            point = evaluation.state.program_point
            state = evaluation.state.at(replace(point, index=point.index + 1))
            before = state.depth
            state = self.eval_call(state, instr.callee, args, instr.target,
                                   instr.return_type, instr.param_types)
            inlined = state.depth > before
            evaluation.state = state
            label = f"{instr.callee}({', '.join(str(a) for a in args)})"
            if not inlined:
                label += " skipped"
            return EdgeOp(OpKind.CALL, label), inlined
        raise TypeError(f"Unknown instruction {instr!r}")

    def eval_call(self, state: ProgramState, callee: str, args: Sequence[SymExpr],
                  target: Optional[str] = None, return_type: Optional[CType] = None,
                  param_types: Sequence[CType] = ()) -> ProgramState:
        """Inline `callee` or model it as an unknown external call.

        The caller's frame must already point past the call. When inlined,
        the returned state has the callee frame on top, positioned at its entry.
        """
        cfg = self.cfgs.get(callee)
        if cfg is not None and state.depth - 1 < self.budget.max_call_depth:
            env = tuple((param.name, arg) for param, arg in zip(cfg.params, args))
            frame = Frame(callee, ProgramPoint(callee, cfg.entry, 0), env, target)
            return state.push(frame)

        loc = Location(0, 0)
        for arg, param_type in zip(args, param_types):
            if not param_type.is_pointer:
                continue
            resolved = state.resolve_address(arg)
            if resolved is not None:
                depth, variable = resolved
                frame_function = state.frames[depth - 1].function
                var_type = self.cfgs[frame_function].var_types[variable]
                state = state.bind(variable, self.fresh(var_type, variable, loc), depth)
        if target is not None and return_type is not None and not return_type.is_void:
            state = state.bind(target, self.fresh(return_type, f"{callee}()", loc))
        return state

    def _terminator(self, node: ExplodedNode, terminator) -> List[ExplodedNode]:
        evaluation = _Evaluation(self, node.state)
        if isinstance(terminator, Branch):
            try:
                cond = evaluation.condition(terminator.cond)
            except _PathEnd:
                return self._errors(node, evaluation)
            children = self._errors(node, evaluation)
            for truth, target in ((True, terminator.on_true), (False, terminator.on_false)):
                feasible = assume(evaluation.state, cond, truth)
                if feasible is None:
                    continue
                successor = self._goto(feasible, target, node)
                if successor is None:
                    continue
                child = self._node(node, successor, EdgeOp(OpKind.ASSUME, cond=cond, truth=truth))
                if child is not None:
                    children.append(child)
            return children

        if isinstance(terminator, Return):
            cfg = evaluation.cfg
            value: Optional[SymExpr] = None
            try:
                if terminator.value is not None:
                    raw, raw_type = evaluation.value(terminator.value)
                    value = evaluation.convert(raw, raw_type, cfg.return_type)
            except _PathEnd:
                return self._errors(node, evaluation)
            children = self._errors(node, evaluation)
            frame, rest = evaluation.state.pop()
            label = f"{frame.function} -> {value}" if value is not None else frame.function
            if not rest.frames:
                child = self._node(node, evaluation.state, EdgeOp(OpKind.RETURN, label))
                if child is not None:
                    child.terminal = True
            else:
                if frame.return_to is not None:
                    if value is None:
                        value = self.fresh(cfg.return_type, f"{frame.function}()", terminator.loc)
                    rest = rest.bind(frame.return_to, value)
                successor = self._settle(rest, node)
                child = self._node(node, successor, EdgeOp(OpKind.RETURN, label)) if successor else None
            if child is not None:
                children.append(child)
            return children

        if isinstance(terminator, Jump):
            successor = self._goto(evaluation.state, terminator.target, node)
            child = self._node(node, successor, EdgeOp(OpKind.ASSIGN, "goto")) if successor else None
            return [child] if child is not None else []
        raise TypeError(f"Unknown terminator {terminator!r}")


def execute(cfgs: Mapping[str, Cfg], entry: str, budget: Optional[ExplorationBudget] = None,
            inputs: Optional[Mapping[str, int]] = None,
            checkers: Optional[Sequence[str]] = None) -> ExplodedGraph:
    """Build the exploded graph of `entry` with a fresh symbol counter."""
    return Executor(cfgs, budget, checkers).execute(entry, inputs)


def dump_graph(graph: ExplodedGraph) -> str:
    """Deterministic text dump of an exploded graph, one line per node in creation order."""
    lines = []
    for node in graph.nodes:
        parent = f"#{node.parent.id}" if node.parent is not None else "-"
        state = node.state
        opaque = ", ".join(str(c) for c in state.opaque)
        line = f"#{node.id} <- {parent} {node.op} | C: {state.constraints} | O: [{opaque}]"
        if node.event is not None:
            event = node.event
            line += f" !! {event.checker.value} at {event.location}: {event.message}"
        lines.append(line)
    for note in graph.annotations:
        lines.append(f"budget exhausted ({note.reason}) at {note.point} after #{note.node_id}")
    return "\n".join(lines) + "\n"
