"""
Command-line front end: prove, check, refute and rank sub-commands
"""

import argparse
import sys
import time
from pathlib import Path
from typing import List, Optional, TextIO
from pydantic import BaseModel, Field, ValidationError, model_validator
import structlog

from src.certificate.checker import check_certificate
from src.certificate.extract import extract_certificate
from src.certificate.io import read_certificate, write_certificate, write_rank_table
from src.core.config import settings
from src.core.exceptions import (
    EXIT_CONTRADICTION, EXIT_INTERNAL, EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE,
    CertificateFormatError, ConfigurationError, ContradictionError, RankProverException, StatementSyntaxError,
    exception_to_exit_code
)
from src.core.models import ConclusionStatus, SaturationOutcome, Statement, Strategy
from src.core.state import SaturationState, init_state
from src.engine.saturation import decide, saturate
from src.monitoring.logging import log_performance_metric, setup_logging, verbosity_to_level
from src.monitoring.metrics import record_startup_metrics, write_metrics
from src.oracle.model import model_for
from src.oracle.search import check_assignment, search_countermodel
from src.parser.statement_parser import parse_statement

logger = structlog.get_logger()

STATUS_LABELS = {
    ConclusionStatus.PROVED: "PROVED",
    ConclusionStatus.UNKNOWN: "UNKNOWN",
    ConclusionStatus.REFUTED: "REFUTED",
}


class RunConfig(BaseModel):
    """Everything one sub-command run needs"""
    command: str = Field(..., pattern="^(prove|check|refute|rank)$")
    statement_path: Path
    certificate_path: Optional[Path] = Field(default=None, description="Certificate to check")
    dimension: Optional[int] = Field(default=None, ge=2)
    strategy: Strategy = Strategy(settings.strategy)
    max_points: int = Field(default=settings.max_points, gt=0)
    max_seconds: Optional[float] = Field(default=None, gt=0)
    max_passes: Optional[int] = Field(default=None, gt=0)
    cert_out: Optional[Path] = None
    ranks_out: Optional[Path] = None
    seed: int = settings.refute_seed
    models: List[str] = Field(default_factory=lambda: ["pg2"])
    budget: int = Field(default=settings.refute_budget, gt=0)
    workers: int = Field(default=settings.refute_workers, ge=1)
    metrics_path: Optional[Path] = None
    verbosity: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _paths_distinct(self) -> "RunConfig":
        paths = [p for p in (self.statement_path, self.certificate_path, self.cert_out,
                             self.ranks_out, self.metrics_path) if p is not None]
        if len({p.resolve() for p in paths}) != len(paths):
            raise ValueError("input and output paths must be distinct")
        return self


def _load_statement(cfg: RunConfig) -> Statement:
    data = cfg.statement_path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data.count(b"\n", 0, e.start) + 1
        column = e.start - data.rfind(b"\n", 0, e.start)
        raise StatementSyntaxError(f"invalid UTF-8 byte 0x{data[e.start]:02x}", line, column)
    return parse_statement(text, default_dimension=cfg.dimension, max_points=cfg.max_points)


def _print_timing(command: str, started: float, out: TextIO) -> None:
    elapsed_ms = (time.perf_counter() - started) * 1000
    log_performance_metric("command_ms", round(elapsed_ms, 1), command=command)
    print(f"time: {elapsed_ms:.1f} ms", file=out)


def _report_contradiction(state: SaturationState, out: TextIO) -> None:
    step = state.trace[state.contradiction_step]
    print(
        f"CONTRADICTION: hypotheses are inconsistent; step {step.id} empties "
        f"{state.universe.format_set(step.target)} {step.new}",
        file=out
    )


def cmd_prove(cfg: RunConfig, out: TextIO) -> int:
    """Parse, saturate, decide; optionally write the certificate and the rank table"""
    started = time.perf_counter()
    statement = _load_statement(cfg)
    try:
        state = init_state(statement, max_points=cfg.max_points)
        outcome = saturate(state, cfg.strategy, max_passes=cfg.max_passes, max_seconds=cfg.max_seconds)
    except ContradictionError as e:
        if e.state is None:
            raise
        state, outcome = e.state, SaturationOutcome.CONTRADICTION

    if cfg.cert_out is not None:
        write_certificate(extract_certificate(state, statement, cfg.strategy), cfg.cert_out)
    if outcome == SaturationOutcome.CONTRADICTION:
        _report_contradiction(state, out)
        _print_timing(cfg.command, started, out)
        return EXIT_CONTRADICTION

    if cfg.ranks_out is not None:
        write_rank_table(state, cfg.ranks_out)
    verdict = decide(state, statement)
    for conclusion in verdict.conclusions:
        print(
            f"{statement.format_constraint(conclusion.constraint)} "
            f"{STATUS_LABELS[conclusion.status]} {conclusion.interval}",
            file=out
        )
    _print_timing(cfg.command, started, out)
    return EXIT_OK if verdict.proved else EXIT_NEGATIVE


def cmd_check(cfg: RunConfig, out: TextIO) -> int:
    """Replay a certificate against its statement"""
    statement = _load_statement(cfg)
    try:
        certificate = read_certificate(cfg.certificate_path)
    except CertificateFormatError as e:
        print(f"INVALID (malformed): {e.message}", file=out)
        return EXIT_NEGATIVE

    result = check_certificate(certificate, statement)
    if result.valid:
        print(f"VALID ({result.steps_checked} steps, {len(certificate.verdicts)} verdicts)", file=out)
        return EXIT_OK
    where = f" at step {result.step_id}" if result.step_id is not None else ""
    print(f"INVALID{where} ({result.reason.value}): {result.message}", file=out)
    return EXIT_NEGATIVE


def cmd_refute(cfg: RunConfig, out: TextIO) -> int:
    """Search finite projective spaces for a countermodel"""
    started = time.perf_counter()
    statement = _load_statement(cfg)
    for name in cfg.models:
        model = model_for(name, statement.universe.dimension)
        result = search_countermodel(statement, model, budget=cfg.budget, seed=cfg.seed, workers=cfg.workers)
        if result.found:
            if not check_assignment(model, statement, result.assignment).satisfies:
                raise RankProverException("countermodel failed re-verification", code=7002)
            print(
                f"disproved in {result.model} (seed {result.seed}, {result.trials} trials): "
                f"{statement.format_constraint(result.violated_conclusion)} fails",
                file=out
            )
            for point in statement.universe.names:
                index = result.assignment.mapping[point]
                coords = ",".join(str(c) for c in model.points[index].tolist())
                print(f"  {point} -> {index} ({coords})", file=out)
            _print_timing(cfg.command, started, out)
            return EXIT_OK
        scope = "search exhaustive" if result.exhaustive else f"seed {result.seed}"
        print(
            f"no countermodel found (not a proof) in {result.model} after {result.trials} trials ({scope})",
            file=out
        )
    _print_timing(cfg.command, started, out)
    return EXIT_NEGATIVE


def cmd_rank(cfg: RunConfig, out: TextIO) -> int:
    """Dump the whole rank function at fixpoint"""
    statement = _load_statement(cfg)
    try:
        state = init_state(statement, max_points=cfg.max_points)
        outcome = saturate(state, cfg.strategy, max_passes=cfg.max_passes, max_seconds=cfg.max_seconds)
    except ContradictionError as e:
        if e.state is None:
            raise
        state, outcome = e.state, SaturationOutcome.CONTRADICTION
    if outcome == SaturationOutcome.CONTRADICTION:
        _report_contradiction(state, out)
        return EXIT_CONTRADICTION

    summary = f"determined {state.determined_count()} / {state.count} sets"
    if cfg.ranks_out is not None:
        write_rank_table(state, cfg.ranks_out)
        print(summary, file=out)
    else:
        write_rank_table(state, out)
        print(summary, file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "prove": cmd_prove,
    "check": cmd_check,
    "refute": cmd_refute,
    "rank": cmd_rank,
}


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the usage code"""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="rankprover",
        description="Rank-interval saturation prover for projective incidence geometry"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("statement", type=Path, help="statement file (.stmt)")
    common.add_argument("--dim", type=int, dest="dimension", help="dimension when the file declares none")
    common.add_argument("--max-points", type=int, default=settings.max_points, help="largest accepted universe")
    common.add_argument("--metrics", type=Path, dest="metrics_path", help="write Prometheus metrics to PATH")
    common.add_argument("-v", "--verbose", action="count", default=0, dest="verbosity", help="-v info, -vv debug")

    saturating = argparse.ArgumentParser(add_help=False)
    saturating.add_argument("--strategy", choices=[s.value for s in Strategy], default=settings.strategy)
    saturating.add_argument("--max-seconds", type=float, help="wall-time limit for saturation")
    saturating.add_argument("--max-passes", type=int, help="pass limit for saturation")
    saturating.add_argument("--ranks", type=Path, dest="ranks_out", help="write the rank table to PATH")

    sub = parser.add_subparsers(dest="command", required=True)
    prove = sub.add_parser("prove", parents=[common, saturating], help="prove the conclusions")
    prove.add_argument("--cert", type=Path, dest="cert_out", help="write the certificate to PATH")

    check = sub.add_parser("check", parents=[common], help="check a certificate")
    check.add_argument("certificate", type=Path, help="certificate file (.cert)")

    refute = sub.add_parser("refute", parents=[common], help="search for a countermodel")
    refute.add_argument("--model", action="append", choices=["pg2", "pg3"], dest="models",
                        help="finite model PG(d,2) or PG(d,3); repeat to try both")
    refute.add_argument("--budget", type=int, default=settings.refute_budget, help="trial budget per model")
    refute.add_argument("--seed", type=int, default=settings.refute_seed)
    refute.add_argument("--workers", type=int, default=settings.refute_workers)

    sub.add_parser("rank", parents=[common, saturating], help="dump the rank table")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {key: value for key, value in vars(args).items() if value is not None}
    values["statement_path"] = values.pop("statement")
    if "certificate" in values:
        values["certificate_path"] = values.pop("certificate")
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid arguments: {e.errors()[0]['msg']}")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(verbosity_to_level(args.verbosity))
    record_startup_metrics()

    try:
        cfg = config_from_args(args)
        logger.info("Command started", command=cfg.command, statement=str(cfg.statement_path))
        code = COMMANDS[cfg.command](cfg, sys.stdout)
    except RankProverException as e:
        print(f"error: {e.message}", file=sys.stderr)
        logger.info("Command failed", error_code=e.code, details=e.details)
        code = exception_to_exit_code(e)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_USAGE
    except Exception as e:
        logger.exception("Unexpected error", error=str(e))
        print(f"internal error: {e}", file=sys.stderr)
        code = EXIT_INTERNAL

    if args.metrics_path is not None:
        write_metrics(str(args.metrics_path))
    return code


if __name__ == "__main__":
    sys.exit(main())
