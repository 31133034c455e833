import json

import pytest
from click.testing import CliRunner

from refutelint.cli import cli
from refutelint.utils import CORPUS_DIR

PARITY_GUARD = str(CORPUS_DIR / "parity_guard.c")
DIVIDE = str(CORPUS_DIR / "divide.c")
SAFE = str(CORPUS_DIR / "safe.c")

PARITY_GUARD_WARNING = (
    "parity_guard.c:4:12: warning: Dereference of null pointer (loaded from variable 'z')\n"
    "    return *z;\n"
    "           ^~\n"
)


@pytest.fixture
def runner(clean_env):
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(cli, list(args), obj={})


def test_version(runner):
    result = _invoke(runner, "--version")
    assert result.exit_code == 0
    assert "0.1.0" in result.output


def test_parity_guard_is_refuted_by_default(runner):
    result = _invoke(runner, "analyze", PARITY_GUARD)
    assert result.exit_code == 0
    assert result.stdout == "0 warnings generated.\n"


def test_parity_guard_without_refutation(runner):
    result = _invoke(runner, "analyze", "--crosscheck-with-smt=false", PARITY_GUARD)
    assert result.exit_code == 1
    assert result.stdout.endswith("           ^~\n1 warning generated.\n")
    assert PARITY_GUARD_WARNING.splitlines()[0] in result.stdout


def test_show_refuted(runner):
    result = _invoke(runner, "analyze", "--show-refuted", PARITY_GUARD)
    assert result.exit_code == 0
    assert ": note: refuted report: Dereference of null pointer" in result.stdout


def test_json_output(runner):
    result = _invoke(runner, "analyze", "--format", "json", PARITY_GUARD, DIVIDE, SAFE)
    assert result.exit_code == 1
    payload = json.loads(result.stdout)
    assert [(r["checker"], r["status"]) for r in payload] == [
        ("core.NullDereference", "refuted"),
        ("core.DivideZero", "confirmed"),
    ]


def test_stats(runner):
    result = _invoke(runner, "analyze", "--stats", PARITY_GUARD, DIVIDE)
    assert result.exit_code == 1
    assert "reported: 2" in result.output
    assert "refuted: 1" in result.output
    assert "analysis time (with refutation):" in result.output


def test_missing_file(runner):
    result = _invoke(runner, "analyze", "does-not-exist.c")
    assert result.exit_code == 2
    assert "File not found" in result.output


def test_parse_error_exit_code(runner, tmp_path):
    bad = tmp_path / "bad.c"
    bad.write_text("int f(void) { for (;;) { } return 0; }\n")
    result = _invoke(runner, "analyze", str(bad))
    assert result.exit_code == 2
    assert "not supported in MiniC" in result.output


def test_invalid_timeout(runner):
    result = _invoke(runner, "analyze", "--timeout-ms", "0", PARITY_GUARD)
    assert result.exit_code == 2


def test_missing_solver_binary_keeps_reports(runner):
    result = _invoke(runner, "analyze", "--solver", "refutelint-no-such-solver {file}", PARITY_GUARD)
    assert result.exit_code == 2
    assert "solver unavailable" in result.output
    assert "1 warning generated." in result.output


def test_entry_selection(runner, tmp_path):
    source = tmp_path / "two.c"
    source.write_text(
        "int a(int *p) { return *p; }\n"
        "int b(int d) { return 10 / d; }\n"
    )
    result = _invoke(runner, "analyze", "--crosscheck-with-smt=false", "--entry", "b", str(source))
    assert result.exit_code == 1
    assert "Division by zero" in result.stdout
    assert "null pointer" not in result.stdout
    missing = _invoke(runner, "analyze", "--entry", "nope", str(source))
    assert missing.exit_code == 2


def test_dump_graph(runner):
    result = _invoke(runner, "dump-graph", PARITY_GUARD)
    assert result.exit_code == 0
    assert result.stdout.startswith("#0 <- - entry func")
    assert "!! core.NullDereference at 4:12" in result.stdout


def test_emit_smt(runner):
    result = _invoke(runner, "emit-smt", PARITY_GUARD)
    assert result.exit_code == 0
    assert result.stdout.startswith("; ")
    assert "(set-logic QF_BV)" in result.stdout
    assert result.stdout.endswith("(check-sat)\n")


def test_corpus_check(runner):
    result = _invoke(runner, "corpus", "--check")
    assert result.exit_code == 0, result.output
    assert result.stdout.splitlines()[0].split() == ["file", "time-no-ref", "time-with-ref", "reported", "refuted"]
    total = result.stdout.splitlines()[-1].split()
    assert total[0] == "total" and total[-2:] == ["11", "6"]


def test_corpus_json(runner):
    result = _invoke(runner, "corpus", "--format", "json")
    payload = json.loads(result.stdout)
    assert payload["totals"]["reported"] == 11
    assert payload["totals"]["refuted"] == 6
    assert len(payload["rows"]) == 12


def test_env_file_sets_defaults(runner, tmp_path):
    env = tmp_path / "custom.env"
    env.write_text("REFUTELINT_MAX_UNROLL=2\n")
    source = tmp_path / "loop.c"
    source.write_text((CORPUS_DIR / "loop.c").read_text())
    result = _invoke(runner, "-e", str(env), "analyze", "--crosscheck-with-smt=false", str(source))
    assert result.exit_code == 0
    assert result.stdout == "0 warnings generated.\n"


def test_invalid_env_value(runner, tmp_path):
    env = tmp_path / "bad.env"
    env.write_text("REFUTELINT_JOBS=0\n")
    result = _invoke(runner, "-e", str(env), "analyze", PARITY_GUARD)
    assert result.exit_code == 2
    assert "invalid setting jobs" in result.output


def test_solver_that_cannot_execute(runner, tmp_path):
    binary = tmp_path / "solver"
    binary.write_bytes(b"\x00\x01garbage\xff")
    binary.chmod(0o755)
    result = _invoke(runner, "analyze", "--solver", f"{binary} -in", PARITY_GUARD)
    assert result.exit_code == 2
    assert "solver unavailable" in result.output
    assert "1 warning generated." in result.output


def test_internal_error_exit_code(runner, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr("refutelint.pipeline.refute_reports", broken)
    result = _invoke(runner, "analyze", PARITY_GUARD, SAFE)
    assert result.exit_code == 2
    assert "internal error: RuntimeError('boom')" in result.output


def test_stats_report_budget_exhaustion(runner):
    result = _invoke(runner, "analyze", "--stats", PARITY_GUARD)
    assert "budget exhausted: 0" in result.output
    loop = _invoke(runner, "analyze", "--stats", "--max-unroll", "2", str(CORPUS_DIR / "loop.c"))
    assert loop.exit_code == 0
    assert "budget exhausted: " in loop.output
    assert "budget exhausted: 0" not in loop.output


def test_max_total_bits_option(runner):
    over = _invoke(runner, "analyze", "--max-total-bits", "30", PARITY_GUARD)
    assert over.exit_code == 2
    # Too few bits to decide the mixed file's impossible dereference.
    mixed = str(CORPUS_DIR / "mixed.c")
    assert "1 warning generated." in _invoke(runner, "analyze", mixed).stdout
    starved = _invoke(runner, "analyze", "--max-total-bits", "4", mixed)
    assert starved.exit_code == 1
    assert "2 warnings generated." in starved.stdout
