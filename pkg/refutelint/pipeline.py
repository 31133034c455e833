"""Per-file analysis pipeline and batch drivers.

parse -> lower -> explore every entry function -> build reports -> dedup ->
refute (optional) -> render.
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .config import ExplorationBudget, RunConfig
from .frontend import MiniCSyntaxError, UnsupportedConstruct, lower, parse
from .refute import RefutationRecord, refute_reports
from .reports import (
    BugReport, ReportStatus, build_reports, dedup, render_json, render_text_blocks,
    summary_line, visible,
)
from .smt.solvers import SolverBackend, SolverUnavailable, make_backend
from .symexec import BudgetExhausted, Executor
from .utils import CORPUS_DIR, load_json
from .validation import SourceValidationError, validate_and_raise

logger = logging.getLogger(__name__)

EXIT_CLEAN = 0
EXIT_REPORTS = 1
EXIT_ERROR = 2


@dataclass
class FileResult:
    """Everything one source file produced."""

    path: str
    reports: List[BugReport] = field(default_factory=list)
    reported: int = 0
    analysis_seconds: float = 0.0
    refutation_seconds: float = 0.0
    records: List[RefutationRecord] = field(default_factory=list)
    exhausted: List[BudgetExhausted] = field(default_factory=list)
    error: Optional[str] = None
    solver_error: Optional[str] = None

    @property
    def refuted(self) -> int:
        return sum(1 for r in self.reports if r.status is ReportStatus.REFUTED)

    @property
    def confirmed(self) -> List[BugReport]:
        return visible(self.reports)


@dataclass
class RunStats:
    time_no_ref: float = 0.0
    time_with_ref: float = 0.0
    reported: int = 0
    refuted: int = 0
    exhausted: int = 0

    def render(self) -> str:
        return "\n".join((
            f"analysis time (no refutation):   {self.time_no_ref:.3f}s",
            f"analysis time (with refutation): {self.time_with_ref:.3f}s",
            f"reported: {self.reported}",
            f"refuted: {self.refuted}",
            f"budget exhausted: {self.exhausted}",
        )) + "\n"


@dataclass
class RunResult:
    exit_code: int
    output: str
    errors: List[str]
    stats: RunStats
    files: List[FileResult]


def explore_unit(source: str, filename: str, budget: ExplorationBudget,
                 entries: Sequence[str] = ()) -> Tuple[List[BugReport], List[BudgetExhausted]]:
    """Parse `source` and explore each entry function.

    Returns:
        Tuple of (deduplicated candidate reports, budget annotations).

    Raises:
        MiniCSyntaxError: Malformed source or an unknown entry name.
        UnsupportedConstruct: C features outside MiniC.
    """
    unit = parse(source, filename)
    cfgs = lower(unit)
    names = list(entries) or [f.name for f in unit.functions]
    missing = [name for name in names if name not in cfgs]
    if missing:
        raise MiniCSyntaxError(f"{filename}: no function named '{missing[0]}'")

    reports: List[BugReport] = []
    exhausted: List[BudgetExhausted] = []
    for name in names:
        graph = Executor(cfgs, budget).execute(name)
        reports.extend(build_reports(graph, filename, source))
        exhausted.extend(graph.annotations)
        logger.debug(f"{filename}: entry '{name}' explored {len(graph.nodes)} node(s), "
                     f"{len(graph.error_nodes)} error node(s)")
    return dedup(reports), exhausted


def analyze_source(source: str, filename: str, config: RunConfig,
                   backend: Optional[SolverBackend] = None) -> FileResult:
    """Run the whole pipeline on one source text.

    Parse errors end up in `FileResult.error`; a solver that cannot start
    leaves every report as a candidate and sets `solver_error`.
    """
    result = FileResult(filename)
    start = time.monotonic()
    try:
        result.reports, result.exhausted = explore_unit(source, filename, config.budget, config.entries)
    except (MiniCSyntaxError, UnsupportedConstruct) as e:
        result.error = str(e)
        return result
    result.analysis_seconds = time.monotonic() - start
    result.reported = len(result.reports)

    if config.crosscheck_with_smt and result.reports:
        backend = backend or make_backend(config.solver, config.jobs, config.max_total_bits)
        try:
            batch = refute_reports(result.reports, backend, config.timeout_ms / 1000.0, config.jobs)
        except SolverUnavailable as e:
            result.solver_error = str(e)
        else:
            result.reports = batch.reports
            result.records = batch.records
            result.refutation_seconds = batch.seconds
    return result


def analyze_file(path: str, config: RunConfig, backend: Optional[SolverBackend] = None) -> FileResult:
    try:
        validate_and_raise(path)
    except SourceValidationError as e:
        return FileResult(str(path), error=str(e))
    source = Path(path).read_text(encoding="utf-8")
    try:
        return analyze_source(source, str(path), config, backend)
    except Exception as e:
        logger.exception(f"{path}: internal error")
        return FileResult(str(path), error=f"{path}: internal error: {e!r}")


def _stats(files: Sequence[FileResult]) -> RunStats:
    stats = RunStats()
    for f in files:
        stats.time_no_ref += f.analysis_seconds
        stats.time_with_ref += f.analysis_seconds + f.refutation_seconds
        stats.reported += f.reported
        stats.refuted += f.refuted
        stats.exhausted += len(f.exhausted)
    return stats


def run(config: RunConfig) -> RunResult:
    """Analyze `config.paths` and render the combined output.

    Files are analyzed in parallel up to `config.jobs` and printed in input order.
    Exit code is 0 without warnings, 1 with warnings, and 2 on any error.
    """
    backend: Optional[SolverBackend] = None
    errors: List[str] = []
    if config.crosscheck_with_smt:
        try:
            backend = make_backend(config.solver, config.jobs, config.max_total_bits)
        except ValueError as e:
            return RunResult(EXIT_ERROR, "", [f"Invalid solver: {e}"], RunStats(), [])

    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        files = list(pool.map(lambda p: analyze_file(p, config, backend), config.paths))

    all_reports: List[BugReport] = []
    blocks: List[str] = []
    for f in files:
        if f.error:
            errors.append(f.error)
            continue
        if f.solver_error:
            errors.append(f"{f.path}: solver unavailable, reports were not refuted: {f.solver_error}")
        for note in f.exhausted:
            logger.warning(f"{f.path}: exploration budget exhausted ({note.reason}) at {note.point}")
        all_reports.extend(f.reports)
        blocks.extend(render_text_blocks(f.reports, config.show_refuted))

    if config.output_format == "json":
        output = render_json(all_reports)
    else:
        blocks.append(summary_line(len(visible(all_reports))))
        output = "\n".join(blocks) + "\n"

    if errors:
        exit_code = EXIT_ERROR
    elif visible(all_reports):
        exit_code = EXIT_REPORTS
    else:
        exit_code = EXIT_CLEAN
    return RunResult(exit_code, output, errors, _stats(files), files)


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------


@dataclass
class CorpusRow:
    file: str
    time_no_ref: float = 0.0
    time_with_ref: float = 0.0
    reported: int = 0
    refuted: int = 0
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        row: Dict[str, object] = {
            "file": self.file,
            "time_no_ref": round(self.time_no_ref, 6),
            "time_with_ref": round(self.time_with_ref, 6),
            "reported": self.reported,
            "refuted": self.refuted,
        }
        if self.error is not None:
            row["error"] = self.error
        return row


@dataclass
class CorpusTable:
    rows: List[CorpusRow] = field(default_factory=list)

    @property
    def totals(self) -> CorpusRow:
        return CorpusRow(
            "total",
            sum(r.time_no_ref for r in self.rows),
            sum(r.time_with_ref for r in self.rows),
            sum(r.reported for r in self.rows),
            sum(r.refuted for r in self.rows),
        )

    @property
    def confirmed(self) -> int:
        totals = self.totals
        return totals.reported - totals.refuted

    def render_text(self) -> str:
        header = ("file", "time-no-ref", "time-with-ref", "reported", "refuted")
        body = []
        for row in self.rows + [self.totals]:
            if row.error is not None:
                body.append((row.file, "-", "-", "-", "-", f"error: {row.error}"))
            else:
                body.append((row.file, f"{row.time_no_ref:.3f}s", f"{row.time_with_ref:.3f}s",
                             str(row.reported), str(row.refuted)))
        widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
        lines = []
        for line in [header] + body:
            cells = [line[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(line[1:5], widths[1:])]
            lines.append("  ".join(cells + list(line[5:])).rstrip())
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {"rows": [r.to_dict() for r in self.rows], "totals": self.totals.to_dict()}
        return json.dumps(payload, indent=2) + "\n"


def corpus_files(directory: Optional[str] = None) -> List[Path]:
    root = Path(directory) if directory is not None else CORPUS_DIR
    return sorted(root.glob("*.c"))


def run_corpus(directory: Optional[str] = None, config: Optional[RunConfig] = None) -> CorpusTable:
    """Analyze every `*.c` file of `directory` (the bundled corpus by default).

    Errors are recorded on the file's row and the run continues.
    """
    config = config or RunConfig()
    backend = make_backend(config.solver, config.jobs, config.max_total_bits) if config.crosscheck_with_smt else None
    table = CorpusTable()
    for path in corpus_files(directory):
        result = analyze_file(str(path), config, backend)
        row = CorpusRow(path.name, result.analysis_seconds,
                        result.analysis_seconds + result.refutation_seconds,
                        result.reported, result.refuted, result.error or result.solver_error)
        table.rows.append(row)
    return table


def load_manifest(directory: Optional[str] = None) -> Dict[str, Dict[str, int]]:
    root = Path(directory) if directory is not None else CORPUS_DIR
    return load_json(root / "manifest.json", default={})


def check_manifest(table: CorpusTable, manifest: Dict[str, Dict[str, int]]) -> List[str]:
    """Differences between a corpus run and the expected counts."""
    problems = []
    rows = {row.file: row for row in table.rows}
    for name, expected in sorted(manifest.items()):
        row = rows.get(name)
        if row is None:
            problems.append(f"{name}: missing from the corpus run")
            continue
        if row.error is not None:
            problems.append(f"{name}: {row.error}")
            continue
        for column in ("reported", "refuted"):
            if getattr(row, column) != expected[column]:
                problems.append(f"{name}: {column} {getattr(row, column)}, expected {expected[column]}")
    return problems
