from refutelint.checkers import (
    CHECKERS, CheckerId, DivideZeroChecker, EventKind, NullDereferenceChecker, check_div_zero,
    check_null_deref, enabled_checkers,
)
from refutelint.frontend.ast import Location
from refutelint.intervals import assume
from refutelint.ir import SymbolFactory, binop, const, sym
from refutelint.state import Frame, Interval, ProgramPoint, ProgramState

LOC = Location(3, 7)


def _state():
    return ProgramState((Frame("f", ProgramPoint("f", 0)),))


def test_null_literal_is_always_reported():
    event = check_null_deref(_state(), const(0, 64), LOC, "p")
    assert event.checker is CheckerId.NULL_DEREFERENCE
    assert event.message == "Dereference of null pointer (loaded from variable 'p')"
    assert event.span == 2
    assert event.violation == const(1, 1)


def test_unknown_pointer_may_be_null():
    pointer = sym(SymbolFactory().mk_symbol(64))
    event = check_null_deref(_state(), pointer, LOC)
    assert event.message == "Dereference of null pointer"
    assert event.state.constraints[pointer] == Interval.of(0, 0, 64)
    assert event.violation == binop("eq", pointer, const(0, 64))


def test_pointer_known_nonnull_is_silent():
    pointer = sym(SymbolFactory().mk_symbol(64))
    state = assume(_state(), binop("ne", pointer, const(0, 64)), True)
    assert check_null_deref(state, pointer, LOC) is None
    assert check_null_deref(_state(), const(0x1000, 64), LOC) is None


def test_divide_zero():
    divisor = sym(SymbolFactory().mk_symbol(32))
    event = check_div_zero(_state(), divisor, LOC)
    assert event.checker is CheckerId.DIVIDE_ZERO
    assert event.message == "Division by zero"
    assert check_div_zero(_state(), const(7, 32), LOC) is None


def test_registry():
    assert isinstance(CHECKERS[CheckerId.NULL_DEREFERENCE], NullDereferenceChecker)
    assert isinstance(CHECKERS[CheckerId.DIVIDE_ZERO], DivideZeroChecker)
    assert CHECKERS[CheckerId.DIVIDE_ZERO].subscribes is EventKind.DIVISION
    assert len(enabled_checkers()) == 2
    assert [c.checker_id for c in enabled_checkers(["core.DivideZero"])] == [CheckerId.DIVIDE_ZERO]
