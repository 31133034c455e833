import shlex
import sys

import pytest

from refutelint.ir import SymbolFactory, binop, cast, const, sym, unop
from refutelint.smt import (
    BuiltinBackend, ExternalBackend, SmtFormula, SolverUnavailable, UnknownReason,
    UnsupportedExpression, VerdictKind, emit_smtlib, encode_bool, encode_bv, make_backend,
)
from refutelint.smt.smtlib import format_literal
from refutelint.smt.solvers import SolverVerdict, demanded_bits, parse_answer, pinned_values
from refutelint.smt.terms import TRUE, Term, bv, eq, not_, var


@pytest.fixture
def factory():
    return SymbolFactory()


def _formula(*conditions) -> SmtFormula:
    formula = SmtFormula()
    for condition in conditions:
        formula.assert_term(encode_bool(condition))
    return formula


def _fake_solver(code: str) -> str:
    return shlex.join([sys.executable, "-c", code])


def test_literals():
    assert format_literal(1, 32) == "#x00000001"
    assert format_literal(255, 8) == "#xff"
    assert format_literal(1, 1) == "#b1"


def test_encoding_text(factory):
    x = sym(factory.mk_symbol(8))
    wide = cast(32, False, x)
    assert str(encode_bv(wide)) == "((_ zero_extend 24) $0)"
    assert str(encode_bv(cast(32, True, x))) == "((_ sign_extend 24) $0)"
    assert str(encode_bv(cast(1, False, x))) == "((_ extract 0 0) $0)"
    assert str(encode_bool(binop("slt", wide, const(10, 32)))) == \
        "(bvslt ((_ zero_extend 24) $0) #x0000000a)"
    assert str(encode_bool(binop("ne", x, const(3, 8)))) == "(not (= $0 #x03))"
    assert str(encode_bv(binop("sdiv", x, const(3, 8)))) == "(bvsdiv $0 #x03)"


def test_bit_test_peephole(factory):
    x = sym(factory.mk_symbol(32))
    clear = binop("eq", binop("and", x, const(4, 32)), const(0, 32))
    set_ = binop("ne", binop("and", const(4, 32), x), const(0, 32))
    assert str(encode_bool(clear)) == "(= ((_ extract 2 2) $0) #b0)"
    assert str(encode_bool(set_)) == "(= ((_ extract 2 2) $0) #b1)"
    # A mask with more than one bit is encoded as is.
    both = binop("eq", binop("and", x, const(6, 32)), const(0, 32))
    assert str(encode_bool(both)) == "(= (bvand $0 #x00000006) #x00000000)"


def test_bool_bridges(factory):
    flag = sym(factory.mk_symbol(1))
    assert str(encode_bool(flag)) == "(not (= $0 #b0))"
    negated = unop("lognot", flag)
    assert encode_bool(negated) == eq(var(0, 1), bv(0, 1))
    assert not_(not_(encode_bool(flag))) == encode_bool(flag)
    assert encode_bv(binop("ult", flag, const(1, 1))).width == 1


def test_wide_value_is_not_a_condition(factory):
    with pytest.raises(UnsupportedExpression):
        encode_bool(sym(factory.mk_symbol(8)))


def test_formula_declares_and_deduplicates(factory):
    x = sym(factory.mk_symbol(8))
    formula = SmtFormula()
    term = encode_bool(binop("ult", x, const(4, 8)))
    assert formula.assert_term(term) is True
    assert formula.assert_term(term) is False
    assert formula.assert_term(TRUE) is False
    assert formula.declarations == {0: 8}
    assert formula.total_bits == 8
    with pytest.raises(UnsupportedExpression):
        formula.assert_term(encode_bv(x))
    with pytest.raises(UnsupportedExpression):
        formula.declare(0, 32)


def test_emit_smtlib(factory):
    x, y = sym(factory.mk_symbol(8)), sym(factory.mk_symbol(1))
    formula = _formula(binop("ult", x, const(4, 8)), binop("ne", y, const(0, 1)))
    assert emit_smtlib(formula) == (
        "(set-logic QF_BV)\n"
        "(declare-fun $0 () (_ BitVec 8))\n"
        "(declare-fun $1 () (_ BitVec 1))\n"
        "(assert (bvult $0 #x04))\n"
        "(assert (not (= $1 #b0)))\n"
        "(check-sat)\n"
    )


def test_pinned_values():
    assertions = [eq(var(0, 8), bv(3, 8)), eq(bv(5, 32), var(1, 32))]
    assert pinned_values(assertions) == {0: 3, 1: 5}
    assert pinned_values(assertions + [eq(var(0, 8), bv(4, 8))]) is None


def test_demanded_bits(factory):
    x = sym(factory.mk_symbol(32))
    y = sym(factory.mk_symbol(8))
    bit = encode_bool(binop("ne", binop("and", x, const(1, 32)), const(0, 32)))
    low_byte = encode_bool(binop("ult", binop("and", x, const(0xFF, 32)), const(10, 32)))
    widened = encode_bool(binop("slt", cast(32, False, y), const(10, 32)))
    assert demanded_bits([bit]) == {0: 1}
    assert demanded_bits([low_byte]) == {0: 0xFF}
    assert demanded_bits([widened]) == {1: 0xFF}
    assert demanded_bits([bit], pinned={0}) == {}
    everything = Term("and", (Term("bvuge", (var(0, 32), bv(0, 32))),
                              Term("bvule", (var(0, 32), bv(2 ** 32 - 1, 32)))))
    assert demanded_bits([everything]) == {}


def test_builtin_decides_small_formulas(factory):
    backend = BuiltinBackend()
    x = sym(factory.mk_symbol(8))
    parity = binop("urem", cast(32, False, x), const(2, 32))
    even = binop("eq", parity, const(0, 32))
    odd = binop("eq", parity, const(1, 32))
    assert backend.check(_formula(even, odd)).kind is VerdictKind.UNSAT
    assert backend.check(_formula(even)).kind is VerdictKind.SAT
    assert backend.check(SmtFormula()).kind is VerdictKind.SAT


def test_builtin_signed_arithmetic(factory):
    backend = BuiltinBackend()
    x = sym(factory.mk_symbol(8))
    negative = binop("slt", x, const(0, 8))
    half = binop("eq", binop("sdiv", x, const(2, 8)), const(-64, 8))
    assert backend.check(_formula(negative, half)).kind is VerdictKind.SAT
    too_small = binop("eq", binop("sdiv", x, const(2, 8)), const(-65, 8))
    assert backend.check(_formula(too_small)).kind is VerdictKind.UNSAT
    shifted = binop("eq", binop("ashr", x, const(7, 8)), const(-1, 8))
    assert backend.check(_formula(shifted, binop("sge", x, const(0, 8)))).kind is VerdictKind.UNSAT


def test_builtin_division_by_zero_is_total(factory):
    backend = BuiltinBackend()
    x = sym(factory.mk_symbol(8))
    quotient = binop("eq", binop("udiv", x, const(0, 8)), const(255, 8))
    remainder = binop("eq", binop("urem", x, const(0, 8)), x)
    assert backend.check(_formula(quotient)).kind is VerdictKind.SAT
    assert backend.check(_formula(remainder, binop("ne", x, const(0, 8)))).kind is VerdictKind.SAT
    assert backend.check(_formula(binop("ne", binop("udiv", x, const(0, 8)), const(255, 8)))).kind \
        is VerdictKind.UNSAT


def test_builtin_pins_wide_symbols(factory):
    pointer = sym(factory.mk_symbol(64))
    flag = sym(factory.mk_symbol(8))
    formula = _formula(
        binop("eq", pointer, const(0, 64)),
        binop("ne", binop("and", flag, const(4, 8)), const(0, 8)),
        binop("eq", binop("and", flag, const(4, 8)), const(0, 8)),
    )
    assert BuiltinBackend().check(formula).kind is VerdictKind.UNSAT
    conflict = _formula(binop("eq", pointer, const(0, 64)), binop("eq", pointer, const(8, 64)))
    assert BuiltinBackend().check(conflict).kind is VerdictKind.UNSAT


def test_builtin_over_budget(factory):
    a, b, c = (sym(factory.mk_symbol(32)) for _ in range(3))
    formula = _formula(binop("eq", binop("add", a, b), c))
    verdict = BuiltinBackend().check(formula)
    assert verdict.kind is VerdictKind.UNKNOWN
    assert verdict.reason is UnknownReason.OVER_BUDGET
    assert not verdict.is_unsat


def test_builtin_timeout(factory):
    x = sym(factory.mk_symbol(8))
    verdict = BuiltinBackend().check(_formula(binop("ult", x, const(4, 8))), timeout=-1.0)
    assert verdict.reason is UnknownReason.TIMEOUT


def test_builtin_bit_budget_is_bounded():
    with pytest.raises(ValueError):
        BuiltinBackend(max_total_bits=25)
    assert BuiltinBackend(max_total_bits=4).max_total_bits == 4


def test_verdict_reason_consistency():
    with pytest.raises(ValueError):
        SolverVerdict(VerdictKind.UNKNOWN)
    with pytest.raises(ValueError):
        SolverVerdict(VerdictKind.SAT, UnknownReason.TIMEOUT)
    assert str(SolverVerdict(VerdictKind.UNKNOWN, UnknownReason.TIMEOUT)) == "unknown (timeout)"


def test_parse_answer():
    assert parse_answer("unsat\n") is VerdictKind.UNSAT
    assert parse_answer("  sat") is VerdictKind.SAT
    assert parse_answer("(error \"bad\")") is None
    assert parse_answer("") is None


def test_make_backend():
    assert isinstance(make_backend("builtin"), BuiltinBackend)
    external = make_backend("z3 -smt2 {file}")
    assert isinstance(external, ExternalBackend) and external.uses_file
    assert not make_backend("z3 -in").uses_file
    with pytest.raises(ValueError):
        make_backend("   ")


def test_external_backend_reads_stdin(factory):
    backend = ExternalBackend(_fake_solver("import sys; sys.stdin.read(); print('unsat')"))
    formula = _formula(binop("ult", sym(factory.mk_symbol(8)), const(4, 8)))
    assert backend.check(formula, timeout=30).kind is VerdictKind.UNSAT


def test_external_backend_file_placeholder(factory):
    code = "import sys; text = open(sys.argv[1]).read(); print('sat' if '(check-sat)' in text else 'x')"
    backend = ExternalBackend(_fake_solver(code) + " {file}")
    formula = _formula(binop("ult", sym(factory.mk_symbol(8)), const(4, 8)))
    assert backend.check(formula, timeout=30).kind is VerdictKind.SAT


@pytest.mark.parametrize("code, reason", [
    ("import sys; sys.exit(3)", UnknownReason.SOLVER_ERROR),
    ("print('unknown')", UnknownReason.SOLVER_ERROR),
    ("print('garbage')", UnknownReason.SOLVER_ERROR),
])
def test_external_backend_failures(code, reason):
    verdict = ExternalBackend(_fake_solver(code)).check(SmtFormula(), timeout=30)
    assert verdict.kind is VerdictKind.UNKNOWN
    assert verdict.reason is reason


def test_external_backend_timeout():
    backend = ExternalBackend(_fake_solver("import time; time.sleep(30)"))
    verdict = backend.check(SmtFormula(), timeout=0.5)
    assert verdict.reason is UnknownReason.TIMEOUT


def test_external_backend_missing_binary():
    with pytest.raises(SolverUnavailable):
        ExternalBackend("refutelint-no-such-solver -in").check(SmtFormula(), timeout=1)


def test_external_backend_not_executable(tmp_path):
    binary = tmp_path / "solver"
    binary.write_bytes(b"\x00\x01garbage\xff")
    binary.chmod(0o755)
    with pytest.raises(SolverUnavailable, match="Cannot start solver"):
        ExternalBackend(f"{binary} -in").check(SmtFormula(), timeout=1)


def test_make_backend_passes_bit_budget():
    assert make_backend("builtin", 1, 4).max_total_bits == 4
    assert make_backend("builtin").max_total_bits == 24
