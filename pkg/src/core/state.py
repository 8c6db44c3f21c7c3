"""
Saturation state: the rank-interval table over the whole powerset
"""

from typing import List, Optional
import numpy as np
import structlog

from src.core.config import settings
from src.core.exceptions import ContradictionError, UniverseTooLargeError
from src.core.models import (
    PointUniverse, RankConstraint, RankInterval, Statement, StepKind, TraceStep
)

logger = structlog.get_logger()

INIT_STEP_ID = 0


def popcount_table(size: int) -> np.ndarray:
    """popcount of every bitmask below 2**size"""
    counts = np.zeros(1, dtype=np.int8)
    for _ in range(size):
        counts = np.concatenate([counts, counts + 1])
    return counts


def subsets_of(mask: int) -> np.ndarray:
    """All subsets of a bitmask in ascending order"""
    subsets = np.zeros(1, dtype=np.int64)
    bit = 1
    while bit <= mask:
        if mask & bit:
            subsets = np.concatenate([subsets, subsets | bit])
        bit <<= 1
    return subsets


class SaturationState:
    """
    Interval table indexed by point-set bitmask plus the append-only trace.

    ``lo_src`` / ``hi_src`` hold, per set, the id of the step that last set
    that bound; step 0 stands for the axiomatic initial bounds.
    """

    def __init__(self, universe: PointUniverse):
        self.universe = universe
        self.size = universe.size
        self.count = 1 << self.size
        self.popcount = popcount_table(self.size)
        self.lo = np.ones(self.count, dtype=np.int8)
        self.hi = np.minimum(self.popcount, universe.cap).astype(np.int8)
        self.lo[0] = 0
        self.lo_src = np.full(self.count, INIT_STEP_ID, dtype=np.int32)
        self.hi_src = np.full(self.count, INIT_STEP_ID, dtype=np.int32)
        self.trace: List[TraceStep] = [
            TraceStep.model_construct(
                id=INIT_STEP_ID, kind=StepKind.INIT, rule=None, x=0, y=0, target=0,
                old=RankInterval.of(0, 0), new=RankInterval.of(0, 0), deps=[],
                relation=None, value=None
            )
        ]
        self.pass_count = 0
        self.contradiction_step: Optional[int] = None
        self.strategy: Optional[str] = None
        self.elapsed_seconds = 0.0

    def interval(self, mask: int) -> RankInterval:
        return RankInterval.of(self.lo[mask], self.hi[mask])

    @property
    def table(self) -> List[RankInterval]:
        """Flat list of intervals in ascending bitmask order"""
        return [RankInterval.of(lo, hi) for lo, hi in zip(self.lo.tolist(), self.hi.tolist())]

    @property
    def is_contradictory(self) -> bool:
        return self.contradiction_step is not None

    def next_step_id(self) -> int:
        return len(self.trace)

    def determined_count(self) -> int:
        """Number of sets whose interval collapsed to a single value"""
        return int(np.count_nonzero(self.lo == self.hi))

    def snapshot(self) -> np.ndarray:
        """Copy of the table as a (2^k, 2) array"""
        return np.stack([self.lo, self.hi], axis=1).copy()

    def apply_constraint(self, constraint: RankConstraint, statement: Optional[Statement] = None) -> bool:
        """Intersect one set's interval with a hypothesis; records a hypothesis step on change"""
        mask = constraint.points
        old = self.interval(mask)
        new = constraint.restrict(old)
        if new == old:
            return False
        step = TraceStep.model_construct(
            id=self.next_step_id(), kind=StepKind.HYPOTHESIS, rule=None,
            x=mask, y=0, target=mask, old=old, new=new, deps=[],
            relation=constraint.relation, value=constraint.value
        )
        self.trace.append(step)
        self.lo[mask] = new.lo
        self.hi[mask] = new.hi
        if new.lo != old.lo:
            self.lo_src[mask] = step.id
        if new.hi != old.hi:
            self.hi_src[mask] = step.id
        if new.is_empty:
            self.contradiction_step = step.id
            text = (
                statement.format_constraint(constraint) if statement is not None
                else f"{self.universe.format_set(mask)} {constraint.relation.value} {constraint.value}"
            )
            raise ContradictionError(
                f"hypothesis '{text}' is inconsistent: interval becomes {new}",
                constraint=text,
                target=self.universe.format_set(mask),
                step_id=step.id
            )
        return True


def init_state(statement: Statement, max_points: Optional[int] = None) -> SaturationState:
    """Build the axiomatic table for a statement and apply its hypotheses"""
    limit = max_points if max_points is not None else settings.max_points
    if statement.universe.size > limit:
        raise UniverseTooLargeError(statement.universe.size, limit)

    state = SaturationState(statement.universe)
    try:
        for constraint in statement.hypotheses:
            state.apply_constraint(constraint, statement)
    except ContradictionError as exc:
        exc.state = state
        raise

    logger.debug(
        "State initialized",
        component="state",
        points=statement.universe.size,
        dimension=statement.universe.dimension,
        hypothesis_steps=len(state.trace) - 1
    )
    return state
