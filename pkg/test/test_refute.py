import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cfgs_of
from refutelint.ir import Signedness, SymbolFactory, binop, const, sym
from refutelint.reports import ReportStatus, build_reports, dedup
from refutelint.refute import (
    IntervalConstraint, OpaqueConstraint, collect_constraints, encode_constraint, refute_report,
    refute_reports, report_formula,
)
from refutelint.smt import BuiltinBackend, SmtFormula, SolverUnavailable, VerdictKind, emit_smtlib
from refutelint.smt.solvers import UNSAT, unknown, UnknownReason
from refutelint.state import Interval
from refutelint.symexec import execute

MIXED_SOURCE = """int mixed(unsigned char a, unsigned char b) {
  int *p = 0;
  if ((a ^ b) == 0 && a != b) {
    return *p;
  }
  if (b == 0) {
    return a / b;
  }
  return a + b;
}
"""


def _reports(source, entry, budget, filename="test.c"):
    graph = execute(cfgs_of(source), entry, budget)
    return dedup(build_reports(graph, filename, source))


class _Unavailable:
    name = "broken"

    def check(self, formula, timeout):
        raise SolverUnavailable("no solver")


class _Scripted:
    """Answers UNSAT for the first `unsat_calls` queries and SAT afterwards."""

    name = "scripted"

    def __init__(self, unsat_calls):
        self.unsat_calls = unsat_calls
        self.calls = 0

    def check(self, formula, timeout):
        self.calls += 1
        if self.calls <= self.unsat_calls:
            return UNSAT
        return unknown(UnknownReason.TIMEOUT)


def test_tightest_interval_wins():
    x = sym(SymbolFactory().mk_symbol(8))
    constraints = [
        IntervalConstraint(x, Interval.of(3, 3, 8)),
        IntervalConstraint(x, Interval.of(0, 10, 8)),
    ]
    formula = encode_constraint(constraints)
    assert [str(a) for a in formula.assertions] == ["(= $0 #x03)"]
    assert formula.has_constraint(x)

    everything = encode_constraint(constraints, skip_duplicates=False)
    assert [str(a) for a in everything.assertions] == [
        "(= $0 #x03)",
        "(and (bvuge $0 #x00) (bvule $0 #x0a))",
    ]


def test_opaque_conditions_are_always_added():
    x = sym(SymbolFactory().mk_symbol(8))
    cond = binop("ne", x, const(5, 8))
    constraints = [
        IntervalConstraint(x, Interval.of(0, 10, 8)),
        OpaqueConstraint(cond, True),
        IntervalConstraint(x, Interval.of(0, 20, 8)),
        OpaqueConstraint(cond, False),
    ]
    formula = encode_constraint(constraints)
    assert [str(a) for a in formula.assertions] == [
        "(and (bvuge $0 #x00) (bvule $0 #x0a))",
        "(not (= $0 #x05))",
        "(= $0 #x05)",
    ]
    assert BuiltinBackend().check(formula).kind is VerdictKind.UNSAT


def test_constant_keys_are_skipped():
    constraints = [IntervalConstraint(const(4, 8), Interval.of(4, 4, 8))]
    assert encode_constraint(constraints).assertions == []


def test_encode_into_existing_formula():
    x = sym(SymbolFactory().mk_symbol(8))
    formula = SmtFormula()
    encode_constraint([IntervalConstraint(x, Interval.of(1, 1, 8))], formula)
    encode_constraint([IntervalConstraint(x, Interval.of(2, 2, 8))], formula)
    assert len(formula.assertions) == 1


def test_parity_guard_report_is_refuted(parity_guard_source, budget):
    reports = _reports(parity_guard_source, "func", budget, "parity_guard.c")
    constraints = collect_constraints(reports[0])
    assert isinstance(constraints[0], OpaqueConstraint)
    script = emit_smtlib(report_formula(reports[0]))
    assert "((_ extract 0 0) $0)" in script
    assert refute_report(reports[0], BuiltinBackend(), 5.0) is ReportStatus.REFUTED


def test_feasible_report_is_confirmed(budget):
    source = "int f(unsigned char key) { int *slot = 0; if (key > 200) { return *slot; } return 0; }"
    reports = _reports(source, "f", budget)
    batch = refute_reports(reports, BuiltinBackend(), 5.0)
    assert [r.status for r in batch.reports] == [ReportStatus.CONFIRMED]
    assert batch.refuted == 0
    assert batch.records[0].verdict.kind is VerdictKind.SAT


def test_unknown_keeps_the_report(budget):
    source = """
int scan(int limit) {
  int *cursor = 0;
  int i = 0;
  while (i < limit) {
    if (i == 3) {
      return *cursor;
    }
    i = i + 1;
  }
  return 0;
}
"""
    reports = _reports(source, "scan", budget)
    batch = refute_reports(reports, BuiltinBackend(), 5.0)
    assert batch.reports[0].status is ReportStatus.CONFIRMED
    assert batch.records[0].verdict.reason is UnknownReason.OVER_BUDGET


def test_class_is_refuted_only_when_every_member_is(budget):
    reports = _reports(MIXED_SOURCE, "mixed", budget)
    division = next(r for r in reports if r.duplicates)
    first_member = division
    # First query UNSAT, second SAT-ish: the surviving member represents the class.
    backend = _Scripted(unsat_calls=1)
    batch = refute_reports([division], backend, 5.0)
    representative = batch.reports[0]
    assert representative is not first_member
    assert representative.status is ReportStatus.CONFIRMED
    assert first_member.status is ReportStatus.REFUTED
    assert representative.duplicates == [first_member]
    assert batch.records[0].queries == 2


def test_mixed_file(budget):
    reports = _reports(MIXED_SOURCE, "mixed", budget)
    batch = refute_reports(reports, BuiltinBackend(), 5.0, jobs=2)
    statuses = {r.checker.value: r.status for r in batch.reports}
    assert statuses == {
        "core.NullDereference": ReportStatus.REFUTED,
        "core.DivideZero": ReportStatus.CONFIRMED,
    }
    assert batch.refuted == 1


def test_settled_reports_are_left_alone(parity_guard_source, budget):
    reports = _reports(parity_guard_source, "func", budget)
    reports[0].mark(ReportStatus.CONFIRMED)
    batch = refute_reports(reports, BuiltinBackend(), 5.0)
    assert batch.reports[0].status is ReportStatus.CONFIRMED
    assert batch.records == []


def test_unavailable_solver_changes_nothing(parity_guard_source, budget):
    reports = _reports(parity_guard_source, "func", budget)
    with pytest.raises(SolverUnavailable):
        refute_reports(reports, _Unavailable(), 5.0)
    assert reports[0].status is ReportStatus.CANDIDATE


# Nested interval chains per symbol, tightest first as a backward walk meets them.
@st.composite
def interval_chains(draw):
    factory = SymbolFactory()
    symbols = [sym(factory.mk_symbol(8, Signedness.UNSIGNED)) for _ in range(2)]
    constraints = []
    for x in symbols:
        lower, upper = 0, 255
        chain = []
        for _ in range(draw(st.integers(min_value=0, max_value=4))):
            lower = draw(st.integers(min_value=lower, max_value=upper))
            upper = draw(st.integers(min_value=lower, max_value=upper))
            chain.append(IntervalConstraint(x, Interval.of(lower, upper, 8)))
        constraints.append(list(reversed(chain)))
    opaque = []
    for _ in range(draw(st.integers(min_value=0, max_value=2))):
        op = draw(st.sampled_from(["ult", "ugt", "eq", "ne"]))
        cond = binop(op, binop("add", symbols[0], symbols[1]), const(draw(st.integers(0, 255)), 8))
        opaque.append(OpaqueConstraint(cond, draw(st.booleans())))
    merged = []
    while constraints[0] or constraints[1]:
        pick = draw(st.integers(min_value=0, max_value=1))
        if not constraints[pick]:
            pick = 1 - pick
        merged.append(constraints[pick].pop(0))
    position = draw(st.integers(min_value=0, max_value=len(merged)))
    return merged[:position] + opaque + merged[position:]


@settings(max_examples=500, deadline=None)
@given(interval_chains())
def test_skipping_duplicates_preserves_satisfiability(constraints):
    backend = BuiltinBackend()
    skipped = backend.check(encode_constraint(constraints), 10.0)
    full = backend.check(encode_constraint(constraints, skip_duplicates=False), 10.0)
    assert skipped.kind is full.kind
    assert skipped.kind is not VerdictKind.UNKNOWN
