"""Command-line interface for refutelint."""

import logging
import sys
from pathlib import Path
from typing import Optional, Tuple

import click
from pydantic import ValidationError

from refutelint.config import ExplorationBudget, RunConfig, Settings, load_settings
from refutelint.frontend import MiniCSyntaxError, UnsupportedConstruct, lower, parse
from refutelint.pipeline import (
    EXIT_ERROR, check_manifest, explore_unit, load_manifest, run, run_corpus,
)
from refutelint.refute import report_formula
from refutelint.smt import emit_smtlib
from refutelint.symexec import Executor, dump_graph
from refutelint.utils import setup_logger
from refutelint.validation import SourceValidationError, validate_and_raise
from refutelint.version import __version__, get_version_string

logger = logging.getLogger("refutelint")


def _settings(ctx: click.Context) -> Settings:
    return ctx.obj["settings"]


def _budget(settings: Settings, max_unroll: Optional[int], max_nodes: Optional[int],
            max_call_depth: Optional[int]) -> ExplorationBudget:
    base = settings.budget
    return ExplorationBudget(
        max_loop_unrollings=base.max_loop_unrollings if max_unroll is None else max_unroll,
        max_nodes=base.max_nodes if max_nodes is None else max_nodes,
        max_call_depth=base.max_call_depth if max_call_depth is None else max_call_depth,
    )


def _read_source(path: str) -> str:
    try:
        validate_and_raise(path)
    except SourceValidationError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)
    return Path(path).read_text(encoding="utf-8")


@click.group()
@click.version_option(__version__, prog_name="refutelint")
@click.option(
    "--env-file",
    "-e",
    type=click.Path(exists=True, file_okay=True, dir_okay=False, readable=True),
    help="Path to .env file with refutelint defaults.",
)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="Logging level (default: REFUTELINT_LOG_LEVEL or WARNING).")
@click.pass_context
def cli(ctx: click.Context, env_file: Optional[str] = None, log_level: Optional[str] = None):
    """Path-sensitive MiniC analyzer that refutes infeasible bug reports with SMT."""
    try:
        settings = load_settings(env_file)
    except ValidationError as e:
        first = e.errors()[0]
        field_name = ".".join(str(part) for part in first["loc"])
        click.echo(f"Error: invalid setting {field_name}: {first['msg']}", err=True)
        sys.exit(EXIT_ERROR)

    level = (log_level or settings.log_level).upper()
    setup_logger("refutelint", getattr(logging, level))
    logger.debug(get_version_string())
    ctx.ensure_object(dict)
    ctx.obj["settings"] = settings


@cli.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path())
@click.option("--crosscheck-with-smt", type=click.BOOL, default=True, show_default=True,
              help="Refute reports whose path constraints are unsatisfiable.")
@click.option("--solver", default=None, help="'builtin' or a solver command, e.g. \"z3 -smt2 {file}\".")
@click.option("--timeout-ms", type=int, default=None, help="Per-report refutation time limit.")
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text",
              show_default=True, help="Output format.")
@click.option("--show-refuted", is_flag=True, help="Also list refuted reports as notes.")
@click.option("--stats", is_flag=True, help="Print timing and report counts.")
@click.option("--jobs", "-j", type=int, default=None, help="Parallel files and solver queries.")
@click.option("--max-unroll", type=int, default=None, help="Loop iterations explored per path.")
@click.option("--max-nodes", type=int, default=None, help="Exploded-graph node cap per entry function.")
@click.option("--max-call-depth", type=int, default=None, help="Inlining depth for calls.")
@click.option("--max-total-bits", type=int, default=None,
              help="Symbol bits the builtin solver may enumerate (at most 24).")
@click.option("--entry", "entries", multiple=True, help="Analyze only these entry functions.")
@click.pass_context
def analyze(ctx: click.Context, paths: Tuple[str, ...], crosscheck_with_smt: bool, solver: Optional[str],
            timeout_ms: Optional[int], output_format: str, show_refuted: bool, stats: bool,
            jobs: Optional[int], max_unroll: Optional[int], max_nodes: Optional[int],
            max_call_depth: Optional[int], max_total_bits: Optional[int],
            entries: Tuple[str, ...]):
    """Analyze MiniC files and print warnings.

    Exit status is 0 without warnings, 1 with warnings and 2 on errors.
    """
    settings = _settings(ctx)
    try:
        config = RunConfig(
            paths=paths,
            crosscheck_with_smt=crosscheck_with_smt,
            solver=solver or settings.solver.solver,
            timeout_ms=settings.solver.timeout_ms if timeout_ms is None else timeout_ms,
            output_format=output_format,
            show_refuted=show_refuted,
            stats=stats,
            jobs=settings.jobs if jobs is None else jobs,
            max_total_bits=settings.solver.max_total_bits if max_total_bits is None else max_total_bits,
            budget=_budget(settings, max_unroll, max_nodes, max_call_depth),
            entries=entries,
        )
    except ValidationError as e:
        first = e.errors()[0]
        click.echo(f"Error: {first['msg']}", err=True)
        sys.exit(EXIT_ERROR)

    result = run(config)
    click.echo(result.output, nl=False)
    for error in result.errors:
        click.echo(f"Error: {error}", err=True)
    if stats:
        click.echo(result.stats.render(), nl=False, err=output_format == "json")
    sys.exit(result.exit_code)


@cli.command()
@click.argument("directory", required=False, type=click.Path(exists=True, file_okay=False))
@click.option("--crosscheck-with-smt", type=click.BOOL, default=True, show_default=True,
              help="Refute reports whose path constraints are unsatisfiable.")
@click.option("--solver", default=None, help="'builtin' or a solver command.")
@click.option("--timeout-ms", type=int, default=None, help="Per-report refutation time limit.")
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text",
              show_default=True, help="Table format.")
@click.option("--check", is_flag=True, help="Compare the counts with the corpus manifest.")
@click.pass_context
def corpus(ctx: click.Context, directory: Optional[str], crosscheck_with_smt: bool, solver: Optional[str],
           timeout_ms: Optional[int], output_format: str, check: bool):
    """Run a directory of MiniC programs (the bundled corpus by default) and tabulate results."""
    settings = _settings(ctx)
    try:
        config = RunConfig(
            crosscheck_with_smt=crosscheck_with_smt,
            solver=solver or settings.solver.solver,
            timeout_ms=settings.solver.timeout_ms if timeout_ms is None else timeout_ms,
            jobs=settings.jobs,
            max_total_bits=settings.solver.max_total_bits,
            budget=settings.budget,
        )
        table = run_corpus(directory, config)
    except (ValidationError, ValueError) as e:
        click.echo(f"Error running corpus: {e}", err=True)
        sys.exit(EXIT_ERROR)

    click.echo(table.to_json() if output_format == "json" else table.render_text(), nl=False)
    if check:
        problems = check_manifest(table, load_manifest(directory))
        for problem in problems:
            click.echo(f"Mismatch: {problem}", err=True)
        sys.exit(1 if problems else 0)


@cli.command("dump-graph")
@click.argument("path", type=click.Path())
@click.option("--entry", default=None, help="Entry function (default: the first one defined).")
@click.option("--max-unroll", type=int, default=None, help="Loop iterations explored per path.")
@click.pass_context
def dump_graph_command(ctx: click.Context, path: str, entry: Optional[str], max_unroll: Optional[int]):
    """Print the exploded graph of one entry function."""
    source = _read_source(path)
    try:
        unit = parse(source, path)
        cfgs = lower(unit)
        name = entry or (unit.functions[0].name if unit.functions else None)
        if name not in cfgs:
            raise MiniCSyntaxError(f"{path}: no function named '{name}'")
        budget = _budget(_settings(ctx), max_unroll, None, None)
        graph = Executor(cfgs, budget).execute(name)
    except (MiniCSyntaxError, UnsupportedConstruct) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(dump_graph(graph), nl=False)


@cli.command("emit-smt")
@click.argument("path", type=click.Path())
@click.option("--entry", "entries", multiple=True, help="Analyze only these entry functions.")
@click.pass_context
def emit_smt(ctx: click.Context, path: str, entries: Tuple[str, ...]):
    """Print the SMT-LIB2 refutation query of every candidate report."""
    source = _read_source(path)
    try:
        reports, _ = explore_unit(source, path, _settings(ctx).budget, entries)
    except (MiniCSyntaxError, UnsupportedConstruct) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)
    for report in reports:
        click.echo(f"; {report.location}: {report.message}")
        click.echo(emit_smtlib(report_formula(report)), nl=False)


def main():
    """Entry point for the CLI."""
    cli(obj={})


if __name__ == "__main__":
    main()
