"""
Independent certificate checker

Replays a certificate against the statement using nothing but the rank
axioms' initial bounds and the arithmetic of the eight rules. It shares no
code with the saturation engine.
"""

from typing import Dict, List, Optional, Tuple
import structlog

from src.core.config import settings
from src.core.exceptions import CertificateHashMismatch
from src.core.models import (
    Certificate, CheckReason, CheckResult, ConclusionStatus, Lemma, RankConstraint,
    SaturationOutcome, Statement, StepKind, TraceStep
)
from src.monitoring.metrics import certificate_metrics
from src.parser.statement_parser import statement_sha256

logger = structlog.get_logger()

AXIOM = 0


class CheckFailure(Exception):
    """First failing step of a replay"""

    def __init__(self, reason: CheckReason, message: str, step_id: Optional[int] = None):
        super().__init__(message)
        self.reason = reason
        self.message = message
        self.step_id = step_id


def verify_binding(certificate: Certificate, statement: Statement) -> None:
    """Raise CertificateHashMismatch unless the certificate was produced for this statement"""
    expected = statement_sha256(statement)
    if certificate.header.stmt_sha256 != expected:
        raise CertificateHashMismatch(expected=expected, found=certificate.header.stmt_sha256)


class _Table:
    """Sparse interval table with the id of the last step that set each bound"""

    def __init__(self, statement: Statement):
        self.size = statement.universe.size
        self.cap = statement.universe.cap
        self.bounds: Dict[int, List[int]] = {}
        self.src: Dict[int, List[int]] = {}

    def get(self, mask: int) -> List[int]:
        if mask not in self.bounds:
            if mask == 0:
                self.bounds[mask] = [0, 0]
            else:
                self.bounds[mask] = [1, min(bin(mask).count("1"), self.cap)]
            self.src[mask] = [AXIOM, AXIOM]
        return self.bounds[mask]

    def lo(self, mask: int) -> int:
        return self.get(mask)[0]

    def hi(self, mask: int) -> int:
        return self.get(mask)[1]

    def sources(self, mask: int) -> List[int]:
        self.get(mask)
        return self.src[mask]


def _rule_instance(rule: str, x: int, y: int, table: _Table) -> Tuple[int, int, bool, List[Tuple[int, int]]]:
    """(target, proposed bound, raises lo, [(end, set)] read); end 0 is lo, 1 is hi"""
    u, i = x | y, x & y
    if rule in ("RS1", "RS3") and x & y != x:
        raise CheckFailure(CheckReason.BAD_ARITHMETIC, f"{rule} needs X inside Y")
    if rule in ("RS2", "RS4") and x & y != y:
        raise CheckFailure(CheckReason.BAD_ARITHMETIC, f"{rule} needs Y inside X")
    if rule == "RS1":
        return y, table.lo(x), True, [(0, x)]
    if rule == "RS2":
        return x, table.lo(y), True, [(0, y)]
    if rule == "RS3":
        return x, table.hi(y), False, [(1, y)]
    if rule == "RS4":
        return y, table.hi(x), False, [(1, x)]
    if rule == "RS5":
        return u, table.hi(x) + table.hi(y) - table.lo(i), False, [(1, x), (1, y), (0, i)]
    if rule == "RS6":
        return i, table.hi(x) + table.hi(y) - table.lo(u), False, [(1, x), (1, y), (0, u)]
    if rule == "RS7":
        return x, table.lo(i) + table.lo(u) - table.hi(y), True, [(0, i), (0, u), (1, y)]
    if rule == "RS8":
        return y, table.lo(i) + table.lo(u) - table.hi(x), True, [(0, i), (0, u), (1, x)]
    raise CheckFailure(CheckReason.MALFORMED, f"unknown rule {rule!r}")


class CertificateChecker:
    """Replays one certificate against one statement"""

    def __init__(self, statement: Statement):
        self.statement = statement
        self.full_mask = statement.universe.full_mask
        self.logger = logger.bind(component="certificate_checker")

    def check(self, certificate: Certificate) -> CheckResult:
        table = _Table(self.statement)
        steps_checked = 0
        try:
            verify_binding(certificate, self.statement)
            self._check_header(certificate)
            last_id = AXIOM
            for index, lemma in enumerate(certificate.lemmas):
                self._check_lemma_shape(certificate, index, lemma)
                for step in lemma.steps:
                    if step.id <= last_id:
                        raise CheckFailure(CheckReason.MALFORMED, "step ids must increase", step.id)
                    last_id = step.id
                    self._replay(table, step)
                    steps_checked += 1
                    empty = table.lo(step.target) > table.hi(step.target)
                    if empty and not lemma.is_contradiction:
                        raise CheckFailure(CheckReason.MALFORMED, "interval empties outside the contradiction lemma", step.id)
                self._check_goal(table, lemma)
            self._check_verdicts(table, certificate)
        except CertificateHashMismatch as e:
            return self._result(False, steps_checked, CheckReason.HASH_MISMATCH, e.message)
        except CheckFailure as e:
            return self._result(False, steps_checked, e.reason, e.message, e.step_id)

        return self._result(True, steps_checked)

    def _result(
        self,
        valid: bool,
        steps_checked: int,
        reason: Optional[CheckReason] = None,
        message: Optional[str] = None,
        step_id: Optional[int] = None
    ) -> CheckResult:
        certificate_metrics.record_check(valid)
        if valid:
            self.logger.info("Certificate valid", steps_checked=steps_checked)
        else:
            self.logger.warning("Certificate invalid", reason=reason.value, step_id=step_id, message=message)
        return CheckResult(valid=valid, step_id=step_id, reason=reason, message=message, steps_checked=steps_checked)

    def _check_header(self, certificate: Certificate) -> None:
        header = certificate.header
        universe = self.statement.universe
        if header.version != settings.certificate_format_version:
            raise CheckFailure(CheckReason.MALFORMED, f"unsupported certificate version {header.version}")
        if header.dim != universe.dimension or header.points != universe.names:
            raise CheckFailure(CheckReason.MALFORMED, "header universe differs from the statement")

    def _check_lemma_shape(self, certificate: Certificate, index: int, lemma: Lemma) -> None:
        first = lemma.steps[0].id if lemma.steps else None
        if lemma.id != index:
            raise CheckFailure(CheckReason.MALFORMED, f"lemma {lemma.id} out of order", first)
        if not lemma.steps:
            raise CheckFailure(CheckReason.MALFORMED, f"lemma {lemma.id} has no steps")
        if lemma.is_contradiction:
            if index != len(certificate.lemmas) - 1 or len(lemma.steps) != 1:
                raise CheckFailure(CheckReason.MALFORMED, "contradiction lemma must be a single final step", first)
        elif any(step.target != lemma.target for step in lemma.steps):
            raise CheckFailure(CheckReason.MALFORMED, f"lemma {lemma.id} mixes targets", first)

    def _replay(self, table: _Table, step: TraceStep) -> None:
        if step.target & ~self.full_mask or step.x & ~self.full_mask or step.y & ~self.full_mask:
            raise CheckFailure(CheckReason.MALFORMED, "set outside the universe", step.id)
        if any(dep >= step.id for dep in step.deps):
            raise CheckFailure(CheckReason.DEP_CYCLE, "dependency on a later step", step.id)

        old = table.get(step.target)
        if [step.old.lo, step.old.hi] != old:
            raise CheckFailure(CheckReason.BAD_ARITHMETIC, f"old interval {step.old} differs from table {old}", step.id)

        if step.kind == StepKind.HYPOTHESIS:
            new, changed_lo, changed_hi = self._hypothesis_bounds(step, old)
            reads = []
        elif step.kind == StepKind.RULE and step.rule is not None:
            if step.x == step.y:
                raise CheckFailure(CheckReason.MALFORMED, "rule operands must differ", step.id)
            target, bound, raises_lo, reads = _rule_instance(step.rule.value, step.x, step.y, table)
            if target != step.target:
                raise CheckFailure(CheckReason.BAD_ARITHMETIC, f"{step.rule.value} does not narrow this set", step.id)
            if (raises_lo and bound <= old[0]) or (not raises_lo and bound >= old[1]):
                raise CheckFailure(CheckReason.NOT_AN_IMPROVEMENT, f"{step.rule.value} bound {bound} is no improvement", step.id)
            new = [bound, old[1]] if raises_lo else [old[0], bound]
            changed_lo, changed_hi = raises_lo, not raises_lo
        else:
            raise CheckFailure(CheckReason.MALFORMED, f"step kind {step.kind.value} cannot be replayed", step.id)

        expected_deps = sorted({table.sources(mask)[end] for end, mask in reads})
        if step.deps != expected_deps:
            raise CheckFailure(CheckReason.DEP_CYCLE, f"deps {step.deps} differ from the facts read {expected_deps}", step.id)
        if [step.new.lo, step.new.hi] != new:
            raise CheckFailure(CheckReason.BAD_ARITHMETIC, f"claimed {step.new}, rule gives {new}", step.id)

        table.bounds[step.target] = new
        sources = table.sources(step.target)
        if changed_lo:
            sources[0] = step.id
        if changed_hi:
            sources[1] = step.id

    def _hypothesis_bounds(self, step: TraceStep, old: List[int]) -> Tuple[List[int], bool, bool]:
        if step.relation is None or step.value is None or step.x != step.target:
            raise CheckFailure(CheckReason.MALFORMED, "incomplete hypothesis step", step.id)
        claimed = (step.target, step.relation, step.value)
        if all((h.points, h.relation, h.value) != claimed for h in self.statement.hypotheses):
            raise CheckFailure(CheckReason.BAD_ARITHMETIC, "not a hypothesis of the statement", step.id)
        lo, hi = old
        if step.relation.value in (":", ">="):
            lo = max(lo, step.value)
        if step.relation.value in (":", "<="):
            hi = min(hi, step.value)
        if [lo, hi] == old:
            raise CheckFailure(CheckReason.NOT_AN_IMPROVEMENT, "hypothesis changes nothing", step.id)
        return [lo, hi], lo != old[0], hi != old[1]

    def _check_goal(self, table: _Table, lemma: Lemma) -> None:
        target = lemma.steps[-1].target
        last = lemma.steps[-1].id
        if [lemma.goal.lo, lemma.goal.hi] != table.get(target):
            raise CheckFailure(CheckReason.VERDICT_MISMATCH, f"lemma {lemma.id} goal {lemma.goal} not reached", last)
        if lemma.by != table.sources(target):
            raise CheckFailure(CheckReason.DEP_CYCLE, f"lemma {lemma.id} cites {lemma.by}", last)
        if lemma.is_contradiction and not lemma.goal.is_empty:
            raise CheckFailure(CheckReason.VERDICT_MISMATCH, "contradiction lemma leaves a nonempty interval", last)

    def _check_verdicts(self, table: _Table, certificate: Certificate) -> None:
        contradiction = bool(certificate.lemmas) and certificate.lemmas[-1].is_contradiction
        if certificate.header.outcome == SaturationOutcome.CONTRADICTION:
            if not contradiction:
                raise CheckFailure(CheckReason.VERDICT_MISMATCH, "contradiction claimed but not derived")
            if certificate.verdicts:
                raise CheckFailure(CheckReason.MALFORMED, "contradiction certificates carry no verdicts")
            return
        if contradiction:
            raise CheckFailure(CheckReason.VERDICT_MISMATCH, "contradiction derived in a fixpoint certificate")

        conclusions = self.statement.conclusions
        if len(certificate.verdicts) != len(conclusions):
            raise CheckFailure(
                CheckReason.VERDICT_MISMATCH,
                f"{len(certificate.verdicts)} verdicts for {len(conclusions)} conclusions"
            )
        for verdict, conclusion in zip(certificate.verdicts, conclusions):
            claimed = (verdict.points, verdict.relation, verdict.value)
            if claimed != (conclusion.points, conclusion.relation, conclusion.value):
                raise CheckFailure(CheckReason.VERDICT_MISMATCH, "verdict does not match the conclusion")
            lo, hi = table.get(verdict.points)
            if [verdict.interval.lo, verdict.interval.hi] != [lo, hi]:
                raise CheckFailure(CheckReason.VERDICT_MISMATCH, f"claimed {verdict.interval}, replay gives [{lo}, {hi}]")
            if verdict.by != table.sources(verdict.points):
                raise CheckFailure(CheckReason.VERDICT_MISMATCH, f"verdict cites {verdict.by}")
            if verdict.status != _status(conclusion, lo, hi):
                raise CheckFailure(CheckReason.VERDICT_MISMATCH, f"status {verdict.status.value} not supported")


def _status(conclusion: RankConstraint, lo: int, hi: int) -> ConclusionStatus:
    value = conclusion.value
    relation = conclusion.relation.value
    if relation == ":":
        proved, excluded = lo == hi == value, not lo <= value <= hi
    elif relation == "<=":
        proved, excluded = hi <= value, lo > value
    else:
        proved, excluded = lo >= value, hi < value
    if proved:
        return ConclusionStatus.PROVED
    return ConclusionStatus.REFUTED if excluded else ConclusionStatus.UNKNOWN


def check_certificate(certificate: Certificate, statement: Statement) -> CheckResult:
    """Replay a certificate; Valid, or the first failing step with a reason"""
    return CertificateChecker(statement).check(certificate)
