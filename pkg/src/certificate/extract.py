"""
Certificate extraction: dependency pruning, replay and lemma grouping
"""

from typing import Dict, List, Optional, Set
import structlog

from src.core.config import settings
from src.core.models import (
    Certificate, CertificateHeader, Lemma, RankConstraint, RankInterval, SaturationOutcome,
    Statement, StepKind, Strategy, TraceStep, VerdictRecord
)
from src.core.state import INIT_STEP_ID, SaturationState
from src.engine.saturation import decide
from src.parser.statement_parser import statement_sha256

logger = structlog.get_logger()


def dependency_closure(state: SaturationState, roots: Set[int]) -> List[int]:
    """Ids of every step the roots transitively depend on, ascending, axioms excluded"""
    kept: Set[int] = set()
    pending = [root for root in roots if root != INIT_STEP_ID]
    while pending:
        step_id = pending.pop()
        if step_id in kept:
            continue
        kept.add(step_id)
        pending.extend(dep for dep in state.trace[step_id].deps if dep != INIT_STEP_ID and dep not in kept)
    return sorted(kept)


class _Replay:
    """Pruned steps re-applied to a sparse table starting from the axioms"""

    def __init__(self, state: SaturationState):
        self.universe = state.universe
        self.intervals: Dict[int, RankInterval] = {}
        self.lo_src: Dict[int, int] = {}
        self.hi_src: Dict[int, int] = {}

    def interval(self, mask: int) -> RankInterval:
        if mask in self.intervals:
            return self.intervals[mask]
        return self.universe.initial_interval(mask)

    def sources(self, mask: int) -> List[int]:
        return [self.lo_src.get(mask, INIT_STEP_ID), self.hi_src.get(mask, INIT_STEP_ID)]

    def apply(self, step: TraceStep) -> TraceStep:
        old = self.interval(step.target)
        if step.kind == StepKind.HYPOTHESIS:
            new = RankConstraint(points=step.target, relation=step.relation, value=step.value).restrict(old)
        elif step.rule.raises_lo:
            new = RankInterval.of(step.new.lo, old.hi)
        else:
            new = RankInterval.of(old.lo, step.new.hi)
        self.intervals[step.target] = new
        if new.lo != old.lo:
            self.lo_src[step.target] = step.id
        if new.hi != old.hi:
            self.hi_src[step.target] = step.id
        return step.model_copy(update={"old": old, "new": new})


def _conclusion_roots(state: SaturationState, statement: Statement) -> Set[int]:
    roots: Set[int] = set()
    if state.is_contradictory:
        target = state.trace[state.contradiction_step].target
        roots.add(state.contradiction_step)
        roots.update((int(state.lo_src[target]), int(state.hi_src[target])))
        return roots
    for constraint in statement.conclusions:
        roots.update((int(state.lo_src[constraint.points]), int(state.hi_src[constraint.points])))
    return roots


def _group_runs(steps: List[TraceStep]) -> List[List[TraceStep]]:
    """Maximal runs of consecutive steps with the same target"""
    runs: List[List[TraceStep]] = []
    for step in steps:
        if runs and runs[-1][-1].target == step.target:
            runs[-1].append(step)
        else:
            runs.append([step])
    return runs


def extract_certificate(
    state: SaturationState,
    statement: Statement,
    strategy: Optional[Strategy] = None
) -> Certificate:
    """Keep only the steps the conclusions (or the contradiction) depend on, grouped into lemmas"""
    kept_ids = dependency_closure(state, _conclusion_roots(state, statement))
    kept = [state.trace[step_id] for step_id in kept_ids]
    body, final = (kept[:-1], kept[-1:]) if state.is_contradictory else (kept, [])

    # Old/new are recomputed against the pruned table, which is never narrower than the engine's
    replay = _Replay(state)
    lemmas: List[Lemma] = []
    for run in [*_group_runs(body), *([final] if final else [])]:
        steps = [replay.apply(step) for step in run]
        target = run[0].target
        lemmas.append(Lemma(
            id=len(lemmas),
            target=None if run is final else target,
            goal=replay.interval(target),
            by=replay.sources(target),
            steps=steps
        ))

    verdicts: List[VerdictRecord] = []
    if not state.is_contradictory:
        for conclusion in decide(state, statement).conclusions:
            points = conclusion.constraint.points
            verdicts.append(VerdictRecord(
                points=points,
                relation=conclusion.constraint.relation,
                value=conclusion.constraint.value,
                status=conclusion.status,
                interval=conclusion.interval,
                by=[int(state.lo_src[points]), int(state.hi_src[points])]
            ))

    header = CertificateHeader(
        version=settings.certificate_format_version,
        tool_version=settings.app_version,
        dim=statement.universe.dimension,
        points=list(statement.universe.names),
        stmt_sha256=statement_sha256(statement),
        strategy=Strategy(strategy or state.strategy or settings.strategy),
        outcome=SaturationOutcome.CONTRADICTION if state.is_contradictory else SaturationOutcome.FIXPOINT,
        elapsed_ms=round(state.elapsed_seconds * 1000, 3),
    )
    certificate = Certificate(header=header, lemmas=lemmas, verdicts=verdicts)
    logger.info(
        "Certificate extracted",
        component="certificate",
        trace_steps=len(state.trace) - 1,
        kept_steps=len(kept_ids),
        lemmas=len(lemmas)
    )
    return certificate

