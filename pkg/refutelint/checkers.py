"""Property checkers.

Checkers subscribe to evaluation events (pointer dereference, integer
division) and decide, using only the range solver, whether the bad value is
possible. When it is, they return an event describing the violation; the
explorer turns it into an error node.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence

from .frontend.ast import Location
from .intervals import assume
from .ir import Const, SymExpr, binop, const
from .state import ProgramState


class CheckerId(str, Enum):
    NULL_DEREFERENCE = "core.NullDereference"
    DIVIDE_ZERO = "core.DivideZero"


class EventKind(str, Enum):
    DEREFERENCE = "dereference"
    DIVISION = "division"


@dataclass(frozen=True)
class CheckerEvent:
    """A possible property violation.

    Attributes:
        state: State at the violation, already assuming `violation`.
        violation: Width-1 condition that makes the operation go wrong.
        span: Number of source columns the diagnostic caret covers.
    """

    checker: CheckerId
    message: str
    location: Location
    violation: SymExpr
    state: ProgramState
    span: int = 1


def _may_be_zero(state: ProgramState, value: SymExpr) -> Optional[tuple]:
    """Return (violation, state assuming it) if `value == 0` is feasible, else None."""
    violation = binop("eq", value, const(0, value.width))
    if isinstance(violation, Const):
        return (violation, state) if violation.value.bits else None
    bad_state = assume(state, violation, True)
    if bad_state is None:
        return None
    return violation, bad_state


def check_null_deref(state: ProgramState, ptr: SymExpr, loc: Location,
                     name: Optional[str] = None) -> Optional[CheckerEvent]:
    """Null dereference check for `*ptr` at `loc`.

    Args:
        name: Variable the pointer was loaded from, when the operand is a plain variable.
    """
    outcome = _may_be_zero(state, ptr)
    if outcome is None:
        return None
    violation, bad_state = outcome
    if name:
        message = f"Dereference of null pointer (loaded from variable '{name}')"
        span = 1 + len(name)
    else:
        message = "Dereference of null pointer"
        span = 1
    return CheckerEvent(CheckerId.NULL_DEREFERENCE, message, loc, violation, bad_state, span)


def check_div_zero(state: ProgramState, divisor: SymExpr, loc: Location) -> Optional[CheckerEvent]:
    outcome = _may_be_zero(state, divisor)
    if outcome is None:
        return None
    violation, bad_state = outcome
    return CheckerEvent(CheckerId.DIVIDE_ZERO, "Division by zero", loc, violation, bad_state)


class NullDereferenceChecker:
    checker_id = CheckerId.NULL_DEREFERENCE
    subscribes = EventKind.DEREFERENCE

    def check(self, state: ProgramState, value: SymExpr, loc: Location,
              name: Optional[str] = None) -> Optional[CheckerEvent]:
        return check_null_deref(state, value, loc, name)


class DivideZeroChecker:
    checker_id = CheckerId.DIVIDE_ZERO
    subscribes = EventKind.DIVISION

    def check(self, state: ProgramState, value: SymExpr, loc: Location,
              name: Optional[str] = None) -> Optional[CheckerEvent]:
        return check_div_zero(state, value, loc)


CHECKERS: Dict[CheckerId, object] = {
    CheckerId.NULL_DEREFERENCE: NullDereferenceChecker(),
    CheckerId.DIVIDE_ZERO: DivideZeroChecker(),
}


def enabled_checkers(names: Optional[Sequence[str]] = None) -> list:
    """Checker instances for the given ids (all of them by default).

    Raises:
        ValueError: An unknown checker name.
    """
    if names is None:
        return list(CHECKERS.values())
    return [CHECKERS[CheckerId(name)] for name in names]
