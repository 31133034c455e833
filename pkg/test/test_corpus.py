"""The bundled corpus reproduces its expected report counts."""

import json

import pytest

from refutelint.config import RunConfig
from refutelint.pipeline import (
    CorpusRow, CorpusTable, analyze_file, check_manifest, load_manifest, run_corpus,
)
from refutelint.utils import CORPUS_DIR


@pytest.fixture(scope="module")
def table():
    return run_corpus()


def test_counts_match_manifest(table):
    assert check_manifest(table, load_manifest()) == []


def test_totals(table):
    totals = table.totals
    assert (totals.reported, totals.refuted) == (11, 6)
    assert table.confirmed == 5
    assert all(row.error is None for row in table.rows)


@pytest.mark.parametrize("path", sorted(CORPUS_DIR.glob("*.c")), ids=lambda p: p.name)
def test_default_budgets_explore_every_path(path):
    result = analyze_file(str(path), RunConfig(crosscheck_with_smt=False))
    assert result.error is None
    assert result.exhausted == []


def test_bit_budget_reaches_the_oracle():
    table = run_corpus(config=RunConfig(max_total_bits=4))
    rows = {row.file: row for row in table.rows}
    assert rows["mixed.c"].refuted == 0
    assert table.totals.reported == 11
    assert table.totals.refuted < 6


def test_refutation_overhead_is_modest(table):
    totals = table.totals
    assert totals.time_with_ref >= totals.time_no_ref
    assert totals.time_with_ref <= 2 * totals.time_no_ref + 0.5


def test_every_corpus_file_has_a_manifest_entry(table):
    assert sorted(row.file for row in table.rows) == sorted(load_manifest())
    assert len(table.rows) == len(list(CORPUS_DIR.glob("*.c")))


def test_without_refutation_nothing_is_refuted():
    table = run_corpus(config=RunConfig(crosscheck_with_smt=False))
    assert table.totals.reported == 11
    assert table.totals.refuted == 0
    assert len(check_manifest(table, load_manifest())) == 6


def test_json_table(table):
    payload = json.loads(table.to_json())
    assert list(payload) == ["rows", "totals"]
    assert list(payload["rows"][0]) == ["file", "time_no_ref", "time_with_ref", "reported", "refuted"]
    assert payload["totals"]["file"] == "total"


def test_errors_are_recorded_per_row(tmp_path):
    (tmp_path / "good.c").write_text("int f(int *p) { if (p) { return *p; } return 0; }\n")
    (tmp_path / "bad.c").write_text("int f(void) { return g(; }\n")
    (tmp_path / "manifest.json").write_text(json.dumps({
        "good.c": {"reported": 0, "refuted": 0},
        "bad.c": {"reported": 0, "refuted": 0},
        "gone.c": {"reported": 0, "refuted": 0},
    }))
    table = run_corpus(str(tmp_path))
    rows = {row.file: row for row in table.rows}
    assert rows["good.c"].error is None
    assert rows["bad.c"].error is not None
    assert "error:" in table.render_text()

    problems = check_manifest(table, load_manifest(str(tmp_path)))
    assert problems[0].startswith("bad.c: ")
    assert problems[1] == "gone.c: missing from the corpus run"
    assert len(problems) == 2


def test_manifest_mismatch_is_described():
    table = CorpusTable([CorpusRow("a.c", reported=2, refuted=1)])
    problems = check_manifest(table, {"a.c": {"reported": 2, "refuted": 0}})
    assert problems == ["a.c: refuted 1, expected 0"]


def test_text_table_alignment():
    table = CorpusTable([CorpusRow("a.c", 0.5, 0.75, 2, 1), CorpusRow("long_name.c", 1.0, 1.0, 0, 0)])
    lines = table.render_text().splitlines()
    assert lines[0] == "file         time-no-ref  time-with-ref  reported  refuted"
    assert lines[1] == "a.c               0.500s         0.750s         2        1"
    assert lines[-1].startswith("total ")
    assert lines[-1].endswith("2        1")
