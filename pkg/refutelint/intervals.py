"""Built-in range solver.

Fast and deliberately imprecise: only a comparison of one simple operand
against a constant narrows an interval. Conditions it cannot model are kept
on the state as opaque conditions so the refutation pass still sees them.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from .ir import (
    COMPARISON_OPS, NEGATED, SWAPPED, BinOp, BitVecValue, Const, SymExpr, UnOp,
    const, mask, walk,
)
from .state import Interval, ProgramState

logger = logging.getLogger(__name__)

UNSUPPORTED_OPS = frozenset({"urem", "srem", "and", "or", "xor", "shl", "lshr", "ashr", "bitnot"})
MAX_OPERATORS = 1


class SupportReason(str, Enum):
    NONE = "none"
    UNSUPPORTED_OPERATOR = "unsupported-operator"
    TOO_COMPLEX = "too-complex"


@dataclass(frozen=True)
class SupportVerdict:
    supported: bool
    reason: SupportReason = SupportReason.NONE

    def __post_init__(self):
        if self.supported != (self.reason is SupportReason.NONE):
            raise ValueError("reason must be 'none' exactly when supported")


SUPPORTED = SupportVerdict(True)


def is_supported(expr: SymExpr) -> SupportVerdict:
    """Decide whether the range solver can reason about `expr`.

    A comparison at the root does not count toward the operator budget.
    """
    if isinstance(expr, BinOp) and expr.op in COMPARISON_OPS:
        roots: Tuple[SymExpr, ...] = (expr.lhs, expr.rhs)
    else:
        roots = (expr,)

    operators = 0
    for root in roots:
        for node in walk(root):
            if isinstance(node, (BinOp, UnOp)):
                if node.op in UNSUPPORTED_OPS:
                    return SupportVerdict(False, SupportReason.UNSUPPORTED_OPERATOR)
                operators += 1
    if operators > MAX_OPERATORS:
        return SupportVerdict(False, SupportReason.TOO_COMPLEX)
    return SUPPORTED


def _signed_segments(lower: int, upper: int, width: int) -> List[Tuple[int, int]]:
    """Unsigned segments covering the signed range [lower, upper]."""
    if lower > upper:
        return []
    modulus = 1 << width
    if lower >= 0:
        return [(lower, upper)]
    if upper < 0:
        return [(lower + modulus, upper + modulus)]
    return [(0, upper), (lower + modulus, modulus - 1)]


def comparison_segments(op: str, k: BitVecValue, truth: bool) -> List[Tuple[int, int]]:
    """Exact set of operand values satisfying `operand op k == truth`.

    Returns:
        Zero, one or two disjoint unsigned segments, lowest first.
    """
    if not truth:
        op = NEGATED[op]
    width = k.width
    top = mask(width)
    kb = k.bits
    half = 1 << (width - 1)
    sk = k.signed

    if op == "ult":
        return [(0, kb - 1)] if kb > 0 else []
    if op == "ule":
        return [(0, kb)]
    if op == "ugt":
        return [(kb + 1, top)] if kb < top else []
    if op == "uge":
        return [(kb, top)]
    if op == "eq":
        return [(kb, kb)]
    if op == "ne":
        return [seg for seg in ((0, kb - 1), (kb + 1, top)) if seg[0] <= seg[1]]
    if op == "slt":
        return _signed_segments(-half, sk - 1, width)
    if op == "sle":
        return _signed_segments(-half, sk, width)
    if op == "sgt":
        return _signed_segments(sk + 1, half - 1, width)
    if op == "sge":
        return _signed_segments(sk, half - 1, width)
    raise ValueError(f"Not a comparison: {op}")


def interval_for_comparison(op: str, operand: SymExpr, k: BitVecValue,
                            truth: bool) -> Optional[Interval]:
    """Smallest single interval enclosing the values of `operand` that satisfy the comparison.

    Returns None when no value satisfies it.
    """
    if operand.width != k.width:
        raise ValueError(f"Operand width {operand.width} does not match constant width {k.width}")
    segments = comparison_segments(op, k, truth)
    if not segments:
        return None
    return Interval.of(segments[0][0], segments[-1][1], k.width)


def _record_opaque(state: ProgramState, cond: SymExpr, truth: bool,
                   constrained: SymExpr) -> ProgramState:
    state = state.with_constraints(state.constraints.admit(constrained))
    return state.add_opaque(cond, truth)


def assume(state: ProgramState, cond: SymExpr, truth: bool) -> Optional[ProgramState]:
    """Add the branch condition `cond == truth` to `state`.

    Returns:
        The refined state, or None if the range solver proves the branch
        infeasible. Conditions it cannot model are recorded as opaque and
        never make a branch infeasible.
    """
    if cond.width != 1:
        raise ValueError(f"Branch condition must have width 1, got {cond} ({cond.width})")

    if isinstance(cond, Const):
        return state if bool(cond.value.bits) == truth else None
    if isinstance(cond, UnOp) and cond.op == "lognot":
        return assume(state, cond.operand, not truth)

    if isinstance(cond, BinOp) and cond.op in COMPARISON_OPS:
        op, lhs, rhs = cond.op, cond.lhs, cond.rhs
    else:
        # A bare width-1 value used as a boolean.
        op, lhs, rhs = "ne", cond, const(0, 1)

    if isinstance(lhs, Const) and not isinstance(rhs, Const):
        op, lhs, rhs = SWAPPED[op], rhs, lhs
    if not isinstance(rhs, Const):
        logger.debug(f"Symbolic comparison kept opaque: {cond}")
        return _record_opaque(state, cond, truth, lhs)

    verdict = is_supported(cond)
    if not verdict.supported:
        logger.debug(f"Range solver skips {cond} ({verdict.reason.value})")
        return _record_opaque(state, cond, truth, lhs)

    segments = comparison_segments(op, rhs.value, truth)
    if not segments:
        return None
    current = state.constraints.interval_of(lhs)
    pieces = [piece for piece in (current.intersect(Interval.of(lo, hi, lhs.width)) for lo, hi in segments)
              if piece is not None]
    if not pieces:
        return None
    enclosing = Interval(pieces[0].lower, pieces[-1].upper)
    constraints = state.constraints.constrain(lhs, enclosing)
    if constraints is None:
        return None
    state = state.with_constraints(constraints)
    if len(pieces) > 1:
        # The enclosing interval over-approximates; keep the exact condition too.
        state = state.add_opaque(cond, truth)
    return state
