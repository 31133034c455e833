"""Shared fixtures for the refutelint test suite."""

import shlex
import shutil
import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from refutelint.config import ExplorationBudget, RunConfig
from refutelint.frontend import lower, parse
from refutelint.utils import CORPUS_DIR

PARITY_GUARD_SOURCE = (CORPUS_DIR / "parity_guard.c").read_text(encoding="utf-8")

ENV_VARS = (
    "REFUTELINT_SOLVER",
    "REFUTELINT_TIMEOUT_MS",
    "REFUTELINT_MAX_UNROLL",
    "REFUTELINT_JOBS",
    "REFUTELINT_LOG_LEVEL",
    "REFUTELINT_MAX_TOTAL_BITS",
)

_Z3_SCRIPT = "import sys, z3; s = z3.Solver(); s.from_file(sys.argv[1]); print(s.check())"


def cfgs_of(source: str, filename: str = "test.c"):
    return lower(parse(source, filename))


@pytest.fixture
def parity_guard_source() -> str:
    return PARITY_GUARD_SOURCE


@pytest.fixture
def budget() -> ExplorationBudget:
    return ExplorationBudget(max_loop_unrollings=4, max_nodes=10000, max_call_depth=5)


@pytest.fixture
def no_refutation() -> RunConfig:
    return RunConfig(crosscheck_with_smt=False)


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """Run with no REFUTELINT_* variables and no .env file in reach of the cwd."""
    for name in ENV_VARS:
        # setenv first so the teardown also removes values loaded by load_dotenv
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def z3_command() -> str:
    """Solver command template for z3: the binary if installed, else its Python bindings."""
    if shutil.which("z3"):
        return "z3 -smt2 {file}"
    pytest.importorskip("z3")
    return shlex.join([sys.executable, "-c", _Z3_SCRIPT]) + " {file}"
