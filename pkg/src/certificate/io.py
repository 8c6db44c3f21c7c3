"""
Certificate serialization and the rank-table dump

A certificate file holds one JSON record per line:

    {"type": "header", "version", "tool_version", "dim", "points", "stmt_sha256",
     "strategy", "outcome", "elapsed_ms", "stream"}
    {"type": "lemma", "id", "target", "goal", "by"}      target "⊥" for a contradiction
    {"type": "step", "id", "kind", "rule", "X", "Y", "T", "old", "new", "deps"[, "rel", "value"]}
    {"type": "verdict", "set", "relation", "value", "status", "interval", "by"}

Step records follow the lemma they belong to. Point sets are arrays of
point names in universe order.
"""

import json
from pathlib import Path
from typing import IO, Iterator, List, Literal, Optional, Union
from pydantic import BaseModel, ConfigDict, Field, ValidationError
import structlog

from src.core.exceptions import CertificateFormatError
from src.core.models import (
    Certificate, CertificateHeader, ConclusionStatus, Lemma, PointUniverse, RankInterval,
    Relation, RuleId, SaturationOutcome, StepKind, Strategy, TraceStep, VerdictRecord
)
from src.core.state import SaturationState

logger = structlog.get_logger()

CONTRADICTION_GOAL = "⊥"


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HeaderLine(_Record):
    type: Literal["header"] = "header"
    version: int
    tool_version: str
    dim: int
    points: List[str]
    stmt_sha256: str
    strategy: Strategy
    outcome: SaturationOutcome
    elapsed_ms: float = 0.0
    stream: bool = True


class LemmaLine(_Record):
    type: Literal["lemma"] = "lemma"
    id: int
    target: Union[List[str], Literal["⊥"]]
    goal: List[int] = Field(..., min_length=2, max_length=2)
    by: List[int] = Field(..., min_length=2, max_length=2)


class StepLine(_Record):
    type: Literal["step"] = "step"
    id: int
    kind: StepKind
    rule: Optional[RuleId] = None
    X: List[str]
    Y: List[str]
    T: List[str]
    old: List[int] = Field(..., min_length=2, max_length=2)
    new: List[int] = Field(..., min_length=2, max_length=2)
    deps: List[int]
    rel: Optional[Relation] = None
    value: Optional[int] = None


class VerdictLine(_Record):
    type: Literal["verdict"] = "verdict"
    set: List[str]
    relation: Relation
    value: int
    status: ConclusionStatus
    interval: List[int] = Field(..., min_length=2, max_length=2)
    by: List[int] = Field(..., min_length=2, max_length=2)


def _dump(record: BaseModel) -> str:
    return json.dumps(record.model_dump(mode="json", exclude_none=True), ensure_ascii=False)


def certificate_lines(certificate: Certificate) -> Iterator[str]:
    """Serialize a certificate, one JSON record per line"""
    header = certificate.header
    universe = PointUniverse(names=header.points, dimension=header.dim)
    yield _dump(HeaderLine(**header.model_dump()))
    for lemma in certificate.lemmas:
        yield _dump(LemmaLine(
            id=lemma.id,
            target=CONTRADICTION_GOAL if lemma.is_contradiction else universe.names_of(lemma.target),
            goal=lemma.goal.as_list(),
            by=lemma.by
        ))
        for step in lemma.steps:
            yield _dump(StepLine(
                id=step.id,
                kind=step.kind,
                rule=step.rule,
                X=universe.names_of(step.x),
                Y=universe.names_of(step.y),
                T=universe.names_of(step.target),
                old=step.old.as_list(),
                new=step.new.as_list(),
                deps=step.deps,
                rel=step.relation,
                value=step.value
            ))
    for verdict in certificate.verdicts:
        yield _dump(VerdictLine(
            set=universe.names_of(verdict.points),
            relation=verdict.relation,
            value=verdict.value,
            status=verdict.status,
            interval=verdict.interval.as_list(),
            by=verdict.by
        ))


def write_certificate(certificate: Certificate, destination: Union[str, Path, IO[str]]) -> None:
    """Write a certificate file, appending records as they are produced"""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8") as handle:
            write_certificate(certificate, handle)
        logger.info("Certificate written", component="certificate_io", path=str(destination))
        return
    for line in certificate_lines(certificate):
        destination.write(line + "\n")


class _CertificateReader:
    """Rebuilds a Certificate from its lines"""

    def __init__(self) -> None:
        self.header: Optional[CertificateHeader] = None
        self.universe: Optional[PointUniverse] = None
        self.lemmas: List[Lemma] = []
        self.verdicts: List[VerdictRecord] = []

    def _mask(self, names: List[str], line_number: int) -> int:
        try:
            return self.universe.mask_of(names)
        except ValueError:
            raise CertificateFormatError(f"unknown point in {names}", line_number)

    def read(self, lines: Iterator[str]) -> Certificate:
        for line_number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                kind = data.get("type") if isinstance(data, dict) else None
                if line_number == 1 and kind != "header":
                    raise CertificateFormatError("first record must be the header", line_number)
                if kind == "header":
                    self._read_header(HeaderLine.model_validate(data), line_number)
                elif kind == "lemma":
                    self._read_lemma(LemmaLine.model_validate(data), line_number)
                elif kind == "step":
                    self._read_step(StepLine.model_validate(data), line_number)
                elif kind == "verdict":
                    self._read_verdict(VerdictLine.model_validate(data), line_number)
                else:
                    raise CertificateFormatError(f"unknown record type {kind!r}", line_number)
            except json.JSONDecodeError as e:
                raise CertificateFormatError(f"invalid JSON: {e.msg}", line_number)
            except ValidationError as e:
                raise CertificateFormatError(f"invalid record: {e.errors()[0]['msg']}", line_number)

        if self.header is None:
            raise CertificateFormatError("empty certificate")
        return Certificate(header=self.header, lemmas=self.lemmas, verdicts=self.verdicts)

    def _read_header(self, record: HeaderLine, line_number: int) -> None:
        if self.header is not None:
            raise CertificateFormatError("duplicate header", line_number)
        try:
            self.header = CertificateHeader(**record.model_dump(exclude={"type"}))
            self.universe = PointUniverse(names=record.points, dimension=record.dim)
        except ValidationError as e:
            raise CertificateFormatError(f"invalid header: {e.errors()[0]['msg']}", line_number)

    def _read_lemma(self, record: LemmaLine, line_number: int) -> None:
        if self.verdicts:
            raise CertificateFormatError("lemma after verdicts", line_number)
        target = None if record.target == CONTRADICTION_GOAL else self._mask(record.target, line_number)
        self.lemmas.append(Lemma(
            id=record.id, target=target, goal=RankInterval.of(*record.goal), by=record.by
        ))

    def _read_step(self, record: StepLine, line_number: int) -> None:
        if not self.lemmas or self.verdicts:
            raise CertificateFormatError("step outside a lemma", line_number)
        step = TraceStep(
            id=record.id, kind=record.kind, rule=record.rule,
            x=self._mask(record.X, line_number), y=self._mask(record.Y, line_number),
            target=self._mask(record.T, line_number),
            old=RankInterval.of(*record.old), new=RankInterval.of(*record.new),
            deps=record.deps, relation=record.rel, value=record.value
        )
        self.lemmas[-1].steps.append(step)

    def _read_verdict(self, record: VerdictLine, line_number: int) -> None:
        points = self._mask(record.set, line_number)
        if points == 0:
            raise CertificateFormatError("verdict on the empty set", line_number)
        self.verdicts.append(VerdictRecord(
            points=points, relation=record.relation, value=record.value, status=record.status,
            interval=RankInterval.of(*record.interval), by=record.by
        ))


def parse_certificate(text: str) -> Certificate:
    """Parse certificate text"""
    return _CertificateReader().read(iter(text.splitlines()))


def read_certificate(path: Union[str, Path]) -> Certificate:
    """Read a certificate file"""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return _CertificateReader().read(handle)
    except UnicodeDecodeError as e:
        raise CertificateFormatError(f"not UTF-8 text: {e.reason}")


def rank_table_lines(state: SaturationState) -> Iterator[str]:
    """One line per subset in ascending bitmask order: 'names : lo hi'"""
    universe = state.universe
    for mask, (lo, hi) in enumerate(zip(state.lo.tolist(), state.hi.tolist())):
        if mask == 0:
            yield f"{universe.format_set(0)}: {lo} {hi}"
        else:
            yield f"{universe.format_set(mask)} : {lo} {hi}"


def write_rank_table(state: SaturationState, destination: Union[str, Path, IO[str]]) -> int:
    """Dump the whole rank function; returns the number of lines written"""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8") as handle:
            count = write_rank_table(state, handle)
        logger.info("Rank table written", component="certificate_io", path=str(destination), lines=count)
        return count
    count = 0
    for line in rank_table_lines(state):
        destination.write(line + "\n")
        count += 1
    return count
