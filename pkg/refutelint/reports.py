"""Bug reports: assembly from error nodes, deduplication and rendering."""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from .checkers import CheckerId
from .symexec import ExplodedGraph, ExplodedNode, extract_path

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("text", "json")


class ReportStatus(str, Enum):
    CANDIDATE = "candidate"
    CONFIRMED = "confirmed"
    REFUTED = "refuted"


@dataclass(frozen=True)
class SourceLocation:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(eq=False)
class BugReport:
    """One candidate bug with the straight-line path that reaches it.

    Attributes:
        path: Nodes from the root to the error node, both included.
        duplicates: Other reports with the same checker and location, kept by `dedup`.
    """

    checker: CheckerId
    location: SourceLocation
    message: str
    path: List[ExplodedNode]
    status: ReportStatus = ReportStatus.CANDIDATE
    source_line: str = ""
    span: int = 1
    duplicates: List["BugReport"] = field(default_factory=list)

    def __post_init__(self):
        if not self.path:
            raise ValueError("A bug report needs a non-empty path")
        if self.path[0].parent is not None or not self.path[-1].is_error:
            raise ValueError("A bug report path must run from the root to an error node")

    @property
    def key(self) -> Tuple[str, str, int, int]:
        return (self.checker.value, self.location.file, self.location.line, self.location.col)

    @property
    def error_node(self) -> ExplodedNode:
        return self.path[-1]

    def mark(self, status: ReportStatus) -> None:
        """Move out of `candidate`; a settled report never changes again."""
        if status is self.status:
            return
        if self.status is not ReportStatus.CANDIDATE:
            raise ValueError(f"Cannot move a {self.status.value} report to {status.value}")
        self.status = status

    def to_dict(self) -> Dict[str, object]:
        return {
            "checker": self.checker.value,
            "file": self.location.file,
            "line": self.location.line,
            "col": self.location.col,
            "message": self.message,
            "status": self.status.value,
            "path_length": len(self.path),
        }


def build_reports(graph: ExplodedGraph, filename: str, source: str = "") -> List[BugReport]:
    """One candidate report per error node, in exploration order."""
    lines = source.splitlines()
    reports = []
    for node in graph.error_nodes:
        event = node.event
        line, col = event.location.line, event.location.column
        source_line = lines[line - 1] if 0 < line <= len(lines) else ""
        reports.append(BugReport(
            checker=event.checker,
            location=SourceLocation(filename, line, col),
            message=event.message,
            path=extract_path(node),
            source_line=source_line,
            span=event.span,
        ))
    return reports


def dedup(reports: Sequence[BugReport]) -> List[BugReport]:
    """Keep one report per (checker, location).

    The representative is the report with the shortest path; ties go to the
    earlier one, and refuted reports only represent fully refuted classes.
    The others are kept in the representative's `duplicates`.
    """
    classes: Dict[Tuple[str, str, int, int], List[BugReport]] = {}
    for report in reports:
        members = classes.setdefault(report.key, [])
        members.append(report)
        members.extend(report.duplicates)

    result = []
    for members in classes.values():
        representative = min(members, key=lambda r: (r.status is ReportStatus.REFUTED, len(r.path)))
        others = [m for m in members if m is not representative]
        for member in members:
            member.duplicates = []
        representative.duplicates = others
        result.append(representative)
    if len(result) != len(reports):
        logger.debug(f"Deduplicated {len(reports)} report(s) into {len(result)}")
    return result


def _caret_line(report: BugReport) -> str:
    prefix = report.source_line[:max(report.location.col - 1, 0)]
    padding = "".join(ch if ch == "\t" else " " for ch in prefix)
    return padding + "^" + "~" * max(report.span - 1, 0)


def format_report(report: BugReport, severity: str = "warning") -> str:
    """Compiler-style diagnostic block: header, source line, caret."""
    if severity == "note":
        header = f"{report.location}: note: refuted report: {report.message}"
    else:
        header = f"{report.location}: {severity}: {report.message}"
    if not report.source_line:
        return header
    return "\n".join((header, report.source_line, _caret_line(report)))


def summary_line(count: int) -> str:
    return f"{count} warning{'' if count == 1 else 's'} generated."


def visible(reports: Sequence[BugReport]) -> List[BugReport]:
    """Reports printed as warnings: everything not refuted."""
    return [r for r in reports if r.status is not ReportStatus.REFUTED]


def render_text_blocks(reports: Sequence[BugReport], show_refuted: bool = False) -> List[str]:
    blocks = []
    for report in reports:
        if report.status is ReportStatus.REFUTED:
            if show_refuted:
                blocks.append(format_report(report, "note"))
        else:
            blocks.append(format_report(report))
    return blocks


def render_json(reports: Sequence[BugReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"


def render(reports: Sequence[BugReport], fmt: str = "text", show_refuted: bool = False) -> str:
    """Render reports as compiler-style text or as a JSON array.

    Args:
        fmt: "text" or "json". JSON always lists every report with its status.
        show_refuted: In text mode, also list refuted reports as notes.

    Raises:
        ValueError: An unknown format.
    """
    if fmt == "json":
        return render_json(reports)
    if fmt != "text":
        raise ValueError(f"Unknown output format: {fmt}")
    blocks = render_text_blocks(reports, show_refuted)
    blocks.append(summary_line(len(visible(reports))))
    return "\n".join(blocks) + "\n"


def find_report(reports: Sequence[BugReport], line: int,
                checker: Optional[CheckerId] = None) -> Optional[BugReport]:
    for report in reports:
        if report.location.line == line and (checker is None or report.checker is checker):
            return report
    return None
