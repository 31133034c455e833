import pytest

from conftest import cfgs_of
from refutelint.checkers import CheckerId
from refutelint.config import ExplorationBudget, RunConfig
from refutelint.ir import Const, Sym, const
from refutelint.pipeline import analyze_source
from refutelint.state import Interval
from refutelint.symexec import (
    Executor, NotAnErrorNode, OpKind, dump_graph, execute, extract_path,
)
from refutelint.utils import CORPUS_DIR

LOOP_SOURCE = """
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


def test_parity_guard_has_one_error_node(parity_guard_source, budget):
    graph = execute(cfgs_of(parity_guard_source), "func", budget)
    assert len(graph.error_nodes) == 1
    error = graph.error_nodes[0]
    assert error.event.checker is CheckerId.NULL_DEREFERENCE
    assert (error.event.location.line, error.event.location.column) == (4, 12)
    assert error.op.kind is OpKind.EPSILON
    # Both conditions of the guard are beyond the range solver and kept opaque.
    assert len(error.state.opaque) == 2
    assert all(c.truth for c in error.state.opaque)


def test_graph_is_a_tree(parity_guard_source, budget):
    graph = execute(cfgs_of(parity_guard_source), "func", budget)
    assert graph.root.parent is None and graph.root.op.kind is OpKind.ENTRY
    assert [n.id for n in graph.nodes] == list(range(len(graph.nodes)))
    for node in graph.nodes[1:]:
        assert node.parent is not None
        assert node.parent.id < node.id


def test_extract_path(parity_guard_source, budget):
    graph = execute(cfgs_of(parity_guard_source), "func", budget)
    error = graph.error_nodes[0]
    path = extract_path(error)
    assert path[0] is graph.root
    assert path[-1] is error
    for parent, child in zip(path, path[1:]):
        assert child.parent is parent
    with pytest.raises(NotAnErrorNode):
        extract_path(graph.root)


def test_parameters_become_symbols(parity_guard_source, budget):
    graph = execute(cfgs_of(parity_guard_source), "func", budget)
    bind = graph.nodes[1]
    assert bind.op.kind is OpKind.ASSIGN
    value = bind.state.lookup("a")
    assert isinstance(value, Sym) and value.width == 32


def test_concrete_inputs(parity_guard_source, budget):
    # With a concrete input the infeasible guard is decided on the spot.
    for a in (0, 1, 2, 3):
        graph = execute(cfgs_of(parity_guard_source), "func", budget, inputs={"a": a})
        assert graph.error_nodes == []


def test_range_solver_prunes_infeasible_branch(budget):
    source = """
int f(int *p) {
  if (p == 0) {
    return 0;
  }
  return *p;
}
"""
    graph = execute(cfgs_of(source), "f", budget)
    assert graph.error_nodes == []


def test_division_checker(budget):
    source = "unsigned int f(unsigned int t, unsigned char c) { return t / c; }"
    graph = execute(cfgs_of(source), "f", budget)
    assert len(graph.error_nodes) == 1
    event = graph.error_nodes[0].event
    assert event.checker is CheckerId.DIVIDE_ZERO
    assert event.state.constraints[event.violation.lhs] == Interval.of(0, 0, 32)
    # The path goes on with a nonzero divisor.
    returns = [n for n in graph.nodes if n.op.kind is OpKind.RETURN]
    assert len(returns) == 1
    assert returns[0].state.constraints[event.violation.lhs] == Interval.of(1, 2 ** 32 - 1, 32)


def test_division_by_nonzero_constant_is_silent(budget):
    graph = execute(cfgs_of("int f(int x) { return x / 3 + x % 5; }"), "f", budget)
    assert graph.error_nodes == []


def test_checker_selection(budget):
    source = "int f(int *p, int d) { return *p / d; }"
    cfgs = cfgs_of(source)
    assert len(execute(cfgs, "f", budget).error_nodes) == 2
    only_null = execute(cfgs, "f", budget, checkers=["core.NullDereference"])
    assert [n.event.checker for n in only_null.error_nodes] == [CheckerId.NULL_DEREFERENCE]
    with pytest.raises(ValueError):
        execute(cfgs, "f", budget, checkers=["core.Nothing"])


def test_loop_unrolling_budget(budget):
    cfgs = cfgs_of(LOOP_SOURCE)
    graph = execute(cfgs, "scan", budget)
    assert len(graph.error_nodes) == 1
    error = graph.error_nodes[0]
    limit = error.state.lookup("limit")
    assert error.state.constraints[limit] == Interval.of(4, 2 ** 31 - 1, 32)

    short = execute(cfgs, "scan", ExplorationBudget(max_loop_unrollings=2))
    assert short.error_nodes == []
    assert short.exhausted
    assert {note.reason for note in short.annotations} == {"loop-unrolling"}


def test_node_budget(parity_guard_source):
    graph = execute(cfgs_of(parity_guard_source), "func", ExplorationBudget(max_nodes=3))
    assert len(graph.nodes) == 3
    assert [note.reason for note in graph.annotations] == ["max-nodes"]


def test_inlined_call_binds_result(budget):
    source = """
int twice(int v) { return v + v; }
int f(void) {
  int *p = 0;
  if (twice(2) == 4) {
    return *p;
  }
  return 0;
}
"""
    graph = execute(cfgs_of(source), "f", budget)
    assert len(graph.error_nodes) == 1
    kinds = [n.op.kind for n in extract_path(graph.error_nodes[0])]
    assert OpKind.CALL in kinds and OpKind.RETURN in kinds


def test_call_depth_budget_skips_callee(budget):
    source = """
int zero(void) { return 0; }
int f(void) {
  int *p = 0;
  if (zero() == 1) {
    return *p;
  }
  return 0;
}
"""
    cfgs = cfgs_of(source)
    assert execute(cfgs, "f", budget).error_nodes == []
    # Without inlining the result is unknown and the dereference becomes reachable.
    skipped = execute(cfgs, "f", ExplorationBudget(max_call_depth=0))
    assert len(skipped.error_nodes) == 1
    calls = [n for n in skipped.nodes if n.op.kind is OpKind.CALL]
    assert calls and calls[0].op.text.endswith("skipped")


def test_external_call_havocs_address_taken_variable(budget):
    source = """
void fill(int *out);
int f(void) {
  int *p = 0;
  int v = 0;
  fill(&v);
  if (v == 1) {
    return *p;
  }
  return 0;
}
"""
    graph = execute(cfgs_of(source), "f", budget)
    assert len(graph.error_nodes) == 1


def test_store_through_known_address(budget):
    source = """
int f(void) {
  int *p = 0;
  int v = 0;
  int *q = &v;
  *q = 5;
  if (v == 5) {
    return *p;
  }
  return 0;
}
"""
    graph = execute(cfgs_of(source), "f", budget)
    assert len(graph.error_nodes) == 1
    assert graph.error_nodes[0].state.lookup("v") == const(5, 32)


def test_fresh_executor_restarts_symbol_ids(parity_guard_source, budget):
    cfgs = cfgs_of(parity_guard_source)
    first = Executor(cfgs, budget).execute("func")
    second = Executor(cfgs, budget).execute("func")
    assert dump_graph(first) == dump_graph(second)


def test_dump_graph_format(parity_guard_source, budget):
    text = dump_graph(execute(cfgs_of(parity_guard_source), "func", budget))
    lines = text.splitlines()
    assert lines[0].startswith("#0 <- - entry func | C: {} | O: []")
    assert lines[1].startswith("#1 <- #0 assign a = $0")
    errors = [line for line in lines if "!!" in line]
    assert len(errors) == 1
    assert errors[0].endswith("!! core.NullDereference at 4:12: "
                              "Dereference of null pointer (loaded from variable 'z')")


def test_unknown_entry(parity_guard_source, budget):
    with pytest.raises(KeyError):
        execute(cfgs_of(parity_guard_source), "missing", budget)


def test_constant_violation_on_null_literal(parity_guard_source, budget):
    graph = execute(cfgs_of(parity_guard_source), "func", budget)
    violation = graph.error_nodes[0].event.violation
    assert isinstance(violation, Const) and violation.value.bits == 1


def test_entry_return_ends_the_path(budget):
    graph = execute(cfgs_of("int f(void) { return 0; }"), "f", budget)
    assert not graph.exhausted
    assert graph.error_nodes == []
    assert graph.nodes[0].op.kind is OpKind.ENTRY
    # Linear: every node hangs off the one before it.
    for parent, child in zip(graph.nodes, graph.nodes[1:]):
        assert child.parent is parent
    returns = [n for n in graph.nodes if n.op.kind is OpKind.RETURN]
    assert returns == [graph.nodes[-1]]
    assert returns[0].terminal


def test_dereference_after_early_return_is_reached(budget):
    source = "int f(int x) { int *p = 0; if (x > 5) return 0; return *p; }"
    graph = execute(cfgs_of(source), "f", budget)
    assert not graph.exhausted
    assert len(graph.error_nodes) == 1
    assert [n.event.checker for n in graph.error_nodes] == [CheckerId.NULL_DEREFERENCE]

    result = analyze_source(source, "early.c", RunConfig(crosscheck_with_smt=False))
    assert result.reported == 1
    assert result.exhausted == []


@pytest.mark.parametrize("path", sorted(CORPUS_DIR.glob("*.c")), ids=lambda p: p.name)
def test_exploration_is_deterministic(path, budget):
    source = path.read_text()
    for name in cfgs_of(source, path.name):
        first = dump_graph(execute(cfgs_of(source, path.name), name, budget))
        second = dump_graph(execute(cfgs_of(source, path.name), name, budget))
        assert first == second
