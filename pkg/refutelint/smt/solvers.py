"""Satisfiability backends: an external SMT-LIB2 process and a builtin enumeration oracle."""

import logging
import os
import shlex
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Container, Dict, List, Optional, Protocol, Tuple

import numpy as np

from ..ir import mask
from ..retry import RetryError, exponential_backoff_retry
from ..utils import kill_process_tree
from .smtlib import emit_smtlib
from .terms import SmtFormula, Term, UnsupportedExpression

logger = logging.getLogger(__name__)

BUILTIN = "builtin"
MAX_BUILTIN_BITS = 24
BLOCK_SIZE = 4096
FILE_PLACEHOLDER = "{file}"


class SolverUnavailable(Exception):
    """Raised when a solver process cannot be started at all."""
    pass


class VerdictKind(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


class UnknownReason(str, Enum):
    TIMEOUT = "timeout"
    SOLVER_ERROR = "solver-error"
    OVER_BUDGET = "over-budget"


@dataclass(frozen=True)
class SolverVerdict:
    kind: VerdictKind
    reason: Optional[UnknownReason] = None
    detail: str = ""

    def __post_init__(self):
        if (self.kind is VerdictKind.UNKNOWN) != (self.reason is not None):
            raise ValueError("UNKNOWN verdicts, and only those, carry a reason")

    @property
    def is_unsat(self) -> bool:
        return self.kind is VerdictKind.UNSAT

    def __str__(self) -> str:
        if self.reason is not None:
            return f"unknown ({self.reason.value})"
        return self.kind.value


SAT = SolverVerdict(VerdictKind.SAT)
UNSAT = SolverVerdict(VerdictKind.UNSAT)


def unknown(reason: UnknownReason, detail: str = "") -> SolverVerdict:
    return SolverVerdict(VerdictKind.UNKNOWN, reason, detail)


class SolverBackend(Protocol):
    name: str

    def check(self, formula: SmtFormula, timeout: float) -> SolverVerdict:
        ...


# ---------------------------------------------------------------------------
# Builtin oracle
# ---------------------------------------------------------------------------


def _is_constant(term: Term, value: int) -> bool:
    return term.op == "bv" and term.params[0] == value


def _tautology(term: Term) -> bool:
    """`x >= 0` and `x <= max` hold for every x and depend on no bit."""
    if term.op == "bvuge":
        return _is_constant(term.args[1], 0)
    if term.op == "bvule":
        return _is_constant(term.args[1], mask(term.args[0].width))
    return False


def pinned_values(assertions: List[Term]) -> Optional[Dict[int, int]]:
    """Symbols fixed by a top-level `(= $i c)` assertion.

    Returns:
        Symbol id -> value, or None when two assertions pin one symbol to different values.
    """
    pinned: Dict[int, int] = {}
    for assertion in assertions:
        if assertion.op != "=":
            continue
        lhs, rhs = assertion.args
        if rhs.op == "var":
            lhs, rhs = rhs, lhs
        if lhs.op == "var" and rhs.op == "bv":
            symbol_id, value = lhs.params[0], rhs.params[0]
            if pinned.setdefault(symbol_id, value) != value:
                return None
    return pinned


def demanded_bits(assertions: List[Term], pinned: Container[int] = ()) -> Dict[int, int]:
    """Symbol id -> mask of the bits that can change the truth of any assertion.

    Symbols in `pinned` have a known value and are never demanded.
    """
    demanded: Dict[int, int] = {}

    def visit(term: Term, wanted: int) -> None:
        if term.is_bool:
            if _tautology(term):
                return
            for arg in term.args:
                visit(arg, mask(arg.width) if arg.width else 0)
            return
        if wanted == 0:
            return
        op, width = term.op, term.width
        if op == "var":
            if term.params[0] in pinned:
                return
            demanded[term.params[0]] = demanded.get(term.params[0], 0) | wanted
        elif op == "bv":
            return
        elif op == "extract":
            high, low = term.params
            visit(term.args[0], (wanted << low) & mask(term.args[0].width))
        elif op in ("zero_extend", "sign_extend"):
            inner = term.args[0].width
            needed = wanted & mask(inner)
            if op == "sign_extend" and wanted >> inner:
                needed |= 1 << (inner - 1)
            visit(term.args[0], needed)
        elif op == "ite":
            visit(term.args[0], 0)
            visit(term.args[1], wanted)
            visit(term.args[2], wanted)
        elif op in ("bvand", "bvor") and any(a.op == "bv" for a in term.args):
            constant, other = (term.args[0], term.args[1]) if term.args[0].op == "bv" else (term.args[1], term.args[0])
            bits = constant.params[0] if op == "bvand" else ~constant.params[0] & mask(width)
            visit(other, wanted & bits)
        elif op in ("bvand", "bvor", "bvxor", "bvnot"):
            for arg in term.args:
                visit(arg, wanted)
        elif op in ("bvadd", "bvsub", "bvmul", "bvneg"):
            low_bits = mask(wanted.bit_length())
            for arg in term.args:
                visit(arg, low_bits)
        elif op in ("bvshl", "bvlshr", "bvashr") and term.args[1].op == "bv":
            amount = term.args[1].params[0]
            if amount >= width:
                needed = 1 << (width - 1) if op == "bvashr" else 0
            elif op == "bvshl":
                needed = wanted >> amount
            else:
                needed = (wanted << amount) & mask(width)
                if op == "bvashr" and wanted >> (width - amount):
                    needed |= 1 << (width - 1)
            visit(term.args[0], needed)
        else:
            for arg in term.args:
                visit(arg, mask(width))

    for assertion in assertions:
        visit(assertion, 0)
    return {k: v for k, v in demanded.items() if v}


class _Lanes:
    """Vectorized evaluation of a term tree over a block of assignments."""

    def __init__(self, values: Dict[int, np.ndarray], size: int):
        self.values = values
        self.size = size
        self.cache: Dict[int, np.ndarray] = {}

    def full(self, value: int) -> np.ndarray:
        return np.full(self.size, value, dtype=np.uint64)

    def signed(self, array: np.ndarray, width: int) -> np.ndarray:
        if width == 64:
            return array.view(np.int64)
        sign = np.int64(1 << (width - 1))
        return (array.astype(np.int64) ^ sign) - sign

    def eval(self, term: Term) -> np.ndarray:
        key = id(term)
        cached = self.cache.get(key)
        if cached is None:
            with np.errstate(over="ignore"):
                cached = self._eval(term)
            self.cache[key] = cached
        return cached

    def _eval(self, term: Term) -> np.ndarray:
        op = term.op
        if op == "true":
            return np.ones(self.size, dtype=bool)
        if op == "false":
            return np.zeros(self.size, dtype=bool)
        if op == "bv":
            return self.full(term.params[0])
        if op == "var":
            values = self.values.get(term.params[0])
            return values if values is not None else self.full(0)

        args = [self.eval(arg) for arg in term.args]
        if op == "not":
            return ~args[0]
        if op == "and":
            result = args[0]
            for arg in args[1:]:
                result = result & arg
            return result
        if op == "or":
            result = args[0]
            for arg in args[1:]:
                result = result | arg
            return result
        if op == "ite":
            return np.where(args[0], args[1], args[2])
        if op == "=":
            return args[0] == args[1]

        width = term.args[0].width
        if op in ("bvult", "bvule", "bvugt", "bvuge"):
            lhs, rhs = args
        elif op in ("bvslt", "bvsle", "bvsgt", "bvsge"):
            lhs, rhs = self.signed(args[0], width), self.signed(args[1], width)
        else:
            lhs = rhs = None
        if op in ("bvult", "bvslt"):
            return lhs < rhs
        if op in ("bvule", "bvsle"):
            return lhs <= rhs
        if op in ("bvugt", "bvsgt"):
            return lhs > rhs
        if op in ("bvuge", "bvsge"):
            return lhs >= rhs

        return self._bitvector(op, term, args) & np.uint64(mask(term.width))

    def _bitvector(self, op: str, term: Term, args: List[np.ndarray]) -> np.ndarray:
        width = term.width
        ones = np.uint64(mask(width))
        if op == "extract":
            return args[0] >> np.uint64(term.params[1])
        if op == "zero_extend":
            return args[0]
        if op == "sign_extend":
            inner = term.args[0].width
            negative = (args[0] >> np.uint64(inner - 1)) & np.uint64(1)
            return np.where(negative == 1, args[0] | (ones ^ np.uint64(mask(inner))), args[0])
        if op == "bvnot":
            return ~args[0]
        if op == "bvneg":
            return (~args[0] + np.uint64(1)) & ones
        lhs, rhs = args
        if op == "bvadd":
            return lhs + rhs
        if op == "bvsub":
            return lhs - rhs
        if op == "bvmul":
            return lhs * rhs
        if op == "bvand":
            return lhs & rhs
        if op == "bvor":
            return lhs | rhs
        if op == "bvxor":
            return lhs ^ rhs
        if op in ("bvshl", "bvlshr", "bvashr"):
            limit = np.uint64(width - 1)
            amount = np.minimum(rhs, limit)
            overflow = rhs > limit
            if op == "bvshl":
                return np.where(overflow, np.uint64(0), lhs << amount)
            if op == "bvlshr":
                return np.where(overflow, np.uint64(0), lhs >> amount)
            shifted = (self.signed(lhs, width) >> amount.astype(np.int64)).view(np.uint64)
            return shifted
        if op in ("bvudiv", "bvurem"):
            return self._unsigned_division(op, lhs, rhs, ones)
        if op in ("bvsdiv", "bvsrem"):
            lhs_negative = (lhs >> np.uint64(width - 1)) & np.uint64(1)
            rhs_negative = (rhs >> np.uint64(width - 1)) & np.uint64(1)
            lhs_abs = np.where(lhs_negative == 1, (~lhs + np.uint64(1)) & ones, lhs)
            rhs_abs = np.where(rhs_negative == 1, (~rhs + np.uint64(1)) & ones, rhs)
            if op == "bvsdiv":
                quotient = self._unsigned_division("bvudiv", lhs_abs, rhs_abs, ones)
                flip = lhs_negative != rhs_negative
                return np.where(flip, (~quotient + np.uint64(1)) & ones, quotient)
            remainder = self._unsigned_division("bvurem", lhs_abs, rhs_abs, ones)
            return np.where(lhs_negative == 1, (~remainder + np.uint64(1)) & ones, remainder)
        raise UnsupportedExpression(f"Builtin oracle cannot evaluate '{op}'")

    @staticmethod
    def _unsigned_division(op: str, lhs: np.ndarray, rhs: np.ndarray, ones: np.uint64) -> np.ndarray:
        zero = rhs == 0
        safe = np.where(zero, np.uint64(1), rhs)
        if op == "bvudiv":
            return np.where(zero, ones, lhs // safe)
        return np.where(zero, lhs, lhs % safe)


class BuiltinBackend:
    """Exhaustive enumeration over the bits that matter, for small formulas.

    Symbols pinned by an equality with a constant take that value, and of
    the rest only demanded bits are enumerated: a 32-bit symbol whose formula
    tests a single bit costs two assignments.
    """

    name = BUILTIN

    def __init__(self, max_total_bits: int = MAX_BUILTIN_BITS):
        if not 0 < max_total_bits <= MAX_BUILTIN_BITS:
            raise ValueError(f"max_total_bits must be within 1..{MAX_BUILTIN_BITS}")
        self.max_total_bits = max_total_bits

    def check(self, formula: SmtFormula, timeout: float = 15.0) -> SolverVerdict:
        deadline = time.monotonic() + timeout
        pinned = pinned_values(formula.assertions)
        if pinned is None:
            return UNSAT
        positions: List[Tuple[int, int]] = []
        for symbol_id, bits in sorted(demanded_bits(formula.assertions, pinned).items()):
            positions.extend((symbol_id, bit) for bit in range(bits.bit_length()) if bits >> bit & 1)
        if len(positions) > self.max_total_bits:
            return unknown(UnknownReason.OVER_BUDGET,
                           f"{len(positions)} demanded bits > {self.max_total_bits}")

        total = 1 << len(positions)
        for start in range(0, total, BLOCK_SIZE):
            if time.monotonic() > deadline:
                return unknown(UnknownReason.TIMEOUT, f"gave up after {start} assignments")
            size = min(BLOCK_SIZE, total - start)
            index = np.arange(start, start + size, dtype=np.uint64)
            values: Dict[int, np.ndarray] = {
                symbol_id: np.full(size, value, dtype=np.uint64) for symbol_id, value in pinned.items()
            }
            for position, (symbol_id, bit) in enumerate(positions):
                lane_bit = ((index >> np.uint64(position)) & np.uint64(1)) << np.uint64(bit)
                values[symbol_id] = values.get(symbol_id, np.zeros(size, dtype=np.uint64)) | lane_bit
            lanes = _Lanes(values, size)
            satisfied = np.ones(size, dtype=bool)
            for assertion in formula.assertions:
                satisfied &= lanes.eval(assertion)
                if not satisfied.any():
                    break
            if satisfied.any():
                return SAT
        return UNSAT


# ---------------------------------------------------------------------------
# External process
# ---------------------------------------------------------------------------


@exponential_backoff_retry(max_retries=3)
def _spawn(argv: List[str], use_stdin: bool) -> subprocess.Popen:
    return subprocess.Popen(
        argv,
        stdin=subprocess.PIPE if use_stdin else subprocess.DEVNULL,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )


def parse_answer(output: str) -> Optional[VerdictKind]:
    """First result token of a solver's stdout, if it is one."""
    for token in output.split():
        try:
            return VerdictKind(token)
        except ValueError:
            return None
    return None


def run_solver(argv: List[str], script: Optional[str], timeout: float) -> Tuple[Optional[int], str, float]:
    """Run one solver process to completion or to its timeout.

    Args:
        argv: Command line, already expanded.
        script: Text for stdin, or None when the command reads a file.
        timeout: Wall-clock limit in seconds.

    Returns:
        Tuple of (exit code, stdout or error text, elapsed seconds). The exit
        code is None when the process was killed at the timeout.

    Raises:
        SolverUnavailable: If the process cannot be spawned.
    """
    start_time = time.monotonic()
    try:
        proc = _spawn(argv, script is not None)
    except (OSError, RetryError) as e:
        # Any spawn failure, ENOEXEC and exhausted retries included.
        raise SolverUnavailable(f"Cannot start solver '{argv[0]}': {e}") from e

    try:
        stdout, stderr = proc.communicate(input=script, timeout=timeout)
    except subprocess.TimeoutExpired:
        kill_process_tree(proc.pid)
        proc.communicate()
        elapsed = time.monotonic() - start_time
        logger.warning(f"Solver timed out after {elapsed:.1f}s (limit: {timeout:.1f}s)")
        return None, "timeout", elapsed

    elapsed = time.monotonic() - start_time
    if proc.returncode != 0:
        message = (stderr or stdout).strip().splitlines()
        detail = message[0] if message else ""
        logger.error(f"Solver exited with code {proc.returncode}: {detail}")
        return proc.returncode, detail, elapsed
    return 0, stdout, elapsed


class ExternalBackend:
    """Any solver that reads SMT-LIB2 and prints `sat`, `unsat` or `unknown`.

    The command template is shell-split. A `{file}` placeholder is replaced by
    a temporary `.smt2` path; without it the script is piped on stdin.
    """

    def __init__(self, command: str, max_processes: int = 1):
        self.argv = shlex.split(command)
        if not self.argv:
            raise ValueError("Empty solver command")
        self.name = command
        self.uses_file = any(FILE_PLACEHOLDER in arg for arg in self.argv)
        self._slots = threading.BoundedSemaphore(max(1, max_processes))

    def check(self, formula: SmtFormula, timeout: float = 15.0) -> SolverVerdict:
        script = emit_smtlib(formula)
        with self._slots:
            if not self.uses_file:
                returncode, output, _ = run_solver(self.argv, script, timeout)
            else:
                handle, path = tempfile.mkstemp(suffix=".smt2", prefix="refutelint-")
                try:
                    with os.fdopen(handle, "w") as f:
                        f.write(script)
                    argv = [arg.replace(FILE_PLACEHOLDER, path) for arg in self.argv]
                    returncode, output, _ = run_solver(argv, None, timeout)
                finally:
                    os.unlink(path)
        if returncode is None:
            return unknown(UnknownReason.TIMEOUT)
        if returncode != 0:
            return unknown(UnknownReason.SOLVER_ERROR, f"exit code {returncode}: {output}")
        answer = parse_answer(output)
        if answer is None:
            return unknown(UnknownReason.SOLVER_ERROR, output.strip()[:200])
        if answer is VerdictKind.UNKNOWN:
            return unknown(UnknownReason.SOLVER_ERROR, "solver answered unknown")
        return SAT if answer is VerdictKind.SAT else UNSAT


def make_backend(spec: str, max_processes: int = 1, max_total_bits: int = MAX_BUILTIN_BITS) -> SolverBackend:
    """Backend for a `--solver` value: "builtin" or an external command template."""
    if spec.strip() == BUILTIN:
        return BuiltinBackend(max_total_bits)
    return ExternalBackend(spec, max_processes)
