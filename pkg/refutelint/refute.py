"""Refutation of bug reports by checking their path constraints with an SMT backend.

A report's path is walked backwards from the error node to the root. Every
interval and opaque condition met on the way is encoded; the report is
dropped only when the conjunction is unsatisfiable.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

from .ir import Const, SymExpr
from .reports import BugReport, ReportStatus
from .smt.solvers import SolverBackend, SolverUnavailable, SolverVerdict, UnknownReason, unknown
from .smt.terms import (
    SmtFormula, Term, UnsupportedExpression, and_, bv, encode_bool, encode_bv, eq, not_,
)
from .state import Interval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntervalConstraint:
    var: SymExpr
    interval: Interval


@dataclass(frozen=True)
class OpaqueConstraint:
    """A condition the interval solver kept verbatim, with the truth value the path took."""

    cond: SymExpr
    truth: bool


PathConstraint = Union[IntervalConstraint, OpaqueConstraint]


@dataclass
class RefutationRecord:
    """Outcome of refuting one deduplicated report."""

    report: BugReport
    status: ReportStatus
    verdict: SolverVerdict
    seconds: float
    queries: int = 1


@dataclass
class RefutationBatch:
    reports: List[BugReport]
    records: List[RefutationRecord] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def refuted(self) -> int:
        return sum(1 for r in self.reports if r.status is ReportStatus.REFUTED)


def collect_constraints(report: BugReport) -> List[PathConstraint]:
    """Constraints of every node on the path, last node first.

    Per node the violation comes first (error node only), then the opaque
    conditions, then the interval entries. Nothing is deduplicated here.
    """
    constraints: List[PathConstraint] = []
    for node in reversed(report.path):
        if node.event is not None:
            constraints.append(OpaqueConstraint(node.event.violation, True))
        for condition in node.state.opaque:
            constraints.append(OpaqueConstraint(condition.cond, condition.truth))
        for expr, interval in node.state.constraints.items():
            constraints.append(IntervalConstraint(expr, interval))
    return constraints


def interval_term(var: SymExpr, interval: Interval) -> Term:
    term = encode_bv(var)
    if interval.is_point:
        return eq(term, bv(interval.lower.bits, interval.width))
    return and_(
        Term("bvuge", (term, bv(interval.lower.bits, interval.width))),
        Term("bvule", (term, bv(interval.upper.bits, interval.width))),
    )


def encode_constraint(constraints: Sequence[PathConstraint], formula: Optional[SmtFormula] = None,
                      skip_duplicates: bool = True) -> SmtFormula:
    """Add `constraints` to `formula` (a new one by default).

    An interval on an expression that already has an interval assertion is
    skipped: walking backwards, the first one found is the tightest. Opaque
    conditions are always added unless the identical assertion exists.

    Args:
        skip_duplicates: Set to False to encode every interval constraint.
    """
    formula = formula if formula is not None else SmtFormula()
    for constraint in constraints:
        if isinstance(constraint, IntervalConstraint):
            if skip_duplicates and formula.has_constraint(constraint.var):
                continue
            if isinstance(constraint.var, Const):
                continue
            formula.assert_term(interval_term(constraint.var, constraint.interval), constraint.var)
        else:
            term = encode_bool(constraint.cond)
            formula.assert_term(term if constraint.truth else not_(term))
    return formula


def report_formula(report: BugReport, skip_duplicates: bool = True) -> SmtFormula:
    return encode_constraint(collect_constraints(report), skip_duplicates=skip_duplicates)


def check_report(report: BugReport, backend: SolverBackend, timeout: float) -> SolverVerdict:
    """Solver verdict on the path constraints of `report`.

    Raises:
        SolverUnavailable: If the backend cannot start.
    """
    try:
        formula = report_formula(report)
    except UnsupportedExpression as e:
        logger.error(f"Cannot encode report at {report.location}: {e}")
        return unknown(UnknownReason.SOLVER_ERROR, str(e))
    return backend.check(formula, timeout)


def refute_report(report: BugReport, backend: SolverBackend, timeout: float) -> ReportStatus:
    """`refuted` iff the path constraints are unsatisfiable, `confirmed` otherwise."""
    verdict = check_report(report, backend, timeout)
    return ReportStatus.REFUTED if verdict.is_unsat else ReportStatus.CONFIRMED


def _refute_class(representative: BugReport, backend: SolverBackend,
                  timeout: float) -> Tuple[Optional[BugReport], SolverVerdict, float, int]:
    """Check a dedup class; return the first satisfiable member, or None if all are refuted."""
    start = time.monotonic()
    queries = 0
    verdict: Optional[SolverVerdict] = None
    for member in [representative] + representative.duplicates:
        verdict = check_report(member, backend, timeout)
        queries += 1
        if not verdict.is_unsat:
            return member, verdict, time.monotonic() - start, queries
    return None, verdict, time.monotonic() - start, queries


def refute_reports(reports: Sequence[BugReport], backend: SolverBackend, timeout: float,
                   jobs: int = 1) -> RefutationBatch:
    """Refute deduplicated reports, one solver session per report.

    A class is refuted only if every member is; otherwise its first surviving
    member becomes the confirmed representative. Reports that are already
    settled are left alone.

    Raises:
        SolverUnavailable: If the backend cannot start. No status is changed.
    """
    start = time.monotonic()
    pending = [(i, r) for i, r in enumerate(reports) if r.status is ReportStatus.CANDIDATE]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [(i, r, pool.submit(_refute_class, r, backend, timeout)) for i, r in pending]
        outcomes = []
        failure: Optional[SolverUnavailable] = None
        for i, report, future in futures:
            try:
                outcomes.append((i, report, future.result()))
            except SolverUnavailable as e:
                failure = failure or e

    if failure is not None:
        logger.warning(f"Solver unavailable, keeping all {len(reports)} report(s): {failure}")
        raise failure

    result = list(reports)
    records = []
    for i, report, (survivor, verdict, seconds, queries) in outcomes:
        members = [report] + report.duplicates
        if survivor is None:
            report.mark(ReportStatus.REFUTED)
        else:
            for member in members[:members.index(survivor)]:
                member.mark(ReportStatus.REFUTED)
            survivor.mark(ReportStatus.CONFIRMED)
            if survivor is not report:
                survivor.duplicates = [m for m in members if m is not survivor]
                report.duplicates = []
                result[i] = survivor
        records.append(RefutationRecord(result[i], result[i].status, verdict, seconds, queries))
        logger.debug(f"{result[i].location}: {verdict} after {queries} quer{'y' if queries == 1 else 'ies'} "
                     f"({seconds:.3f}s)")

    batch = RefutationBatch(result, records, time.monotonic() - start)
    logger.info(f"Refuted {batch.refuted} of {len(reports)} report(s) in {batch.seconds:.2f}s")
    return batch
