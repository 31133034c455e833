"""Configuration handling for the refutelint package."""

import os
from typing import Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_TIMEOUT_MS = 15000
OUTPUT_FORMATS = ("text", "json")


class ExplorationBudget(BaseModel):
    """Bounds on symbolic exploration."""

    model_config = ConfigDict(frozen=True)

    max_loop_unrollings: int = Field(4, ge=0, description="Loop header visits allowed per frame")
    max_nodes: int = Field(100000, ge=1, description="Exploded-graph node cap per entry function")
    max_call_depth: int = Field(5, ge=0, description="Nested inlined calls before callees are skipped")


class SolverSettings(BaseModel):
    """Which backend refutes reports and how long each query may take."""

    solver: str = Field("builtin", description="'builtin' or an external command template")
    timeout_ms: int = Field(DEFAULT_TIMEOUT_MS, description="Wall-clock limit per report")
    max_total_bits: int = Field(24, ge=1, le=24, description="Enumeration budget of the builtin oracle")

    @field_validator("timeout_ms")
    @classmethod
    def _positive_timeout(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("timeout_ms must be positive")
        return value

    @field_validator("solver")
    @classmethod
    def _non_empty_solver(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("solver must be 'builtin' or a command")
        return value.strip()


class RunConfig(BaseModel):
    """One invocation of the analyzer over a list of files."""

    paths: Tuple[str, ...] = Field((), description="MiniC source files to analyze")
    crosscheck_with_smt: bool = Field(True, description="Refute reports with an SMT backend")
    solver: str = Field("builtin", description="'builtin' or an external command template")
    timeout_ms: int = Field(DEFAULT_TIMEOUT_MS, description="Per-report refutation time limit")
    output_format: str = Field("text", description="Report format: text or json")
    show_refuted: bool = Field(False, description="List refuted reports as notes")
    stats: bool = Field(False, description="Print timing and count statistics")
    jobs: int = Field(1, description="Parallel files and solver queries")
    max_total_bits: int = Field(24, ge=1, le=24, description="Enumeration budget of the builtin oracle")
    budget: ExplorationBudget = Field(default_factory=ExplorationBudget)
    entries: Tuple[str, ...] = Field((), description="Restrict analysis to these entry functions")

    @field_validator("timeout_ms")
    @classmethod
    def _positive_timeout(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("timeout_ms must be positive")
        return value

    @field_validator("output_format")
    @classmethod
    def _known_format(cls, value: str) -> str:
        if value not in OUTPUT_FORMATS:
            raise ValueError(f"format must be one of {', '.join(OUTPUT_FORMATS)}")
        return value

    @field_validator("jobs")
    @classmethod
    def _positive_jobs(cls, value: int) -> int:
        if value < 1:
            raise ValueError("jobs must be at least 1")
        return value

    @property
    def solver_settings(self) -> SolverSettings:
        return SolverSettings(solver=self.solver, timeout_ms=self.timeout_ms, max_total_bits=self.max_total_bits)


class Settings(BaseModel):
    """Defaults read from the environment; command-line flags override them."""

    solver: SolverSettings
    budget: ExplorationBudget
    jobs: int = Field(1, ge=1, description="Default parallelism")
    log_level: str = Field("WARNING", description="Logging level name")

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {value}")
        return level


def find_env_file(env_file: Optional[str] = None) -> Optional[str]:
    """Find the most appropriate .env file to load."""
    # 1. Check if explicitly provided
    if env_file and os.path.exists(env_file):
        return os.path.abspath(env_file)

    # 2. Check current working directory
    cwd_env = os.path.abspath('.env')
    if os.path.exists(cwd_env):
        return cwd_env

    # 3. Check refutelint package directory
    package_dir = os.path.dirname(os.path.abspath(__file__))
    package_env = os.path.join(package_dir, '.env')
    if os.path.exists(package_env):
        return package_env

    # 4. Check project root (one level up from package)
    root_env = os.path.join(os.path.dirname(package_dir), '.env')
    if os.path.exists(root_env):
        return root_env

    return None


def load_settings(env_file: Optional[str] = None) -> Settings:
    """Load settings from environment variables or .env file.

    Args:
        env_file: Path to .env file. If None, will try to load from .env in:
                 1. Current working directory
                 2. refutelint package directory
                 3. Project root directory

    Returns:
        Settings object with all configuration values.

    Raises:
        pydantic.ValidationError: If a variable holds an invalid value.
    """
    found_env = find_env_file(env_file)
    if found_env:
        # Variables already set in the process environment take precedence.
        load_dotenv(found_env, override=False)

    solver = SolverSettings(
        solver=os.environ.get("REFUTELINT_SOLVER", "builtin"),
        timeout_ms=os.environ.get("REFUTELINT_TIMEOUT_MS", DEFAULT_TIMEOUT_MS),
        max_total_bits=os.environ.get("REFUTELINT_MAX_TOTAL_BITS", 24),
    )
    budget = ExplorationBudget(
        max_loop_unrollings=os.environ.get("REFUTELINT_MAX_UNROLL", 4),
    )
    return Settings(
        solver=solver,
        budget=budget,
        jobs=os.environ.get("REFUTELINT_JOBS", 1),
        log_level=os.environ.get("REFUTELINT_LOG_LEVEL", "WARNING"),
    )
