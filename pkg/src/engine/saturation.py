"""
Saturation strategies and the decision procedure
"""

import time
from abc import ABC, abstractmethod
from collections import deque
from typing import Callable, Iterator, Optional, Tuple
import numpy as np
import structlog

from src.core.config import settings
from src.core.exceptions import ResourceLimitError
from src.core.models import (
    ConclusionStatus, ConclusionVerdict, RankInterval, RuleId, SaturationOutcome,
    Statement, StepKind, Strategy, TraceStep, Verdict
)
from src.core.state import SaturationState, subsets_of
from src.engine.rules import LO, find_applications, rule_bound, rule_reads, rule_target
from src.monitoring.metrics import count_rules, saturation_metrics

logger = structlog.get_logger()

ChangeCallback = Callable[[TraceStep], None]


def apply_rule(state: SaturationState, rule: RuleId, x: int, y: int) -> bool:
    """Apply one rule instance if it strictly improves its target; records a trace step"""
    if x == y:
        return False
    bound = rule_bound(rule, x, y, state.lo, state.hi)
    if bound is None:
        return False

    target = rule_target(rule, x, y)
    old = state.interval(target)
    if rule.raises_lo:
        if bound <= old.lo:
            return False
        new = RankInterval.of(bound, old.hi)
    else:
        if bound >= old.hi:
            return False
        new = RankInterval.of(old.lo, bound)

    deps = sorted({
        int(state.lo_src[mask]) if end == LO else int(state.hi_src[mask])
        for end, mask in rule_reads(rule, x, y)
    })
    step = TraceStep.model_construct(
        id=state.next_step_id(), kind=StepKind.RULE, rule=rule,
        x=x, y=y, target=target, old=old, new=new, deps=deps,
        relation=None, value=None
    )
    state.trace.append(step)
    if rule.raises_lo:
        state.lo[target] = bound
        state.lo_src[target] = step.id
    else:
        state.hi[target] = bound
        state.hi_src[target] = step.id
    if new.is_empty:
        state.contradiction_step = step.id
    return True


def default_pass_ceiling(state: SaturationState) -> int:
    """Each interval narrows at most d + 1 times, so no run needs more passes than changes"""
    return state.count * state.universe.cap + 1


def union_pairs(z: int, chunk_size: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Incomparable pairs X < Y with X | Y == z, in blocks"""
    subsets = subsets_of(z)
    width = z.bit_count()
    total = 3 ** width
    for start in range(0, total, chunk_size):
        codes = np.arange(start, min(total, start + chunk_size), dtype=np.int64)
        x_index = np.zeros_like(codes)
        y_index = np.zeros_like(codes)
        # base-3 digit per bit of z: 0 only in X, 1 only in Y, 2 in both
        for i in range(width):
            digit = codes % 3
            codes = codes // 3
            x_index |= np.where(digit != 1, 1 << i, 0)
            y_index |= np.where(digit != 0, 1 << i, 0)
        xs, ys = subsets[x_index], subsets[y_index]
        inter = xs & ys
        keep = (xs < ys) & (inter != xs) & (inter != ys)
        if keep.any():
            yield xs[keep], ys[keep]


def intersection_pairs(z: int, full_mask: int, chunk_size: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Incomparable pairs X < Y with X & Y == z, in blocks"""
    outside = subsets_of(full_mask & ~z)
    width = (full_mask & ~z).bit_count()
    total = 3 ** width
    for start in range(0, total, chunk_size):
        codes = np.arange(start, min(total, start + chunk_size), dtype=np.int64)
        x_index = np.zeros_like(codes)
        y_index = np.zeros_like(codes)
        # base-3 digit per bit outside z: 0 only in X, 1 only in Y, 2 in neither
        for i in range(width):
            digit = codes % 3
            codes = codes // 3
            x_index |= np.where(digit == 0, 1 << i, 0)
            y_index |= np.where(digit == 1, 1 << i, 0)
        keep = (x_index != 0) & (y_index != 0)
        xs, ys = z | outside[x_index[keep]], z | outside[y_index[keep]]
        keep = xs < ys
        if keep.any():
            yield xs[keep], ys[keep]


class SaturationStrategy(ABC):
    """Base class for saturation strategies"""

    name: Strategy

    def __init__(
        self,
        max_passes: Optional[int] = None,
        max_seconds: Optional[float] = None,
        chunk_size: Optional[int] = None
    ):
        self.max_passes = max_passes if max_passes is not None else settings.max_passes
        self.max_seconds = max_seconds if max_seconds is not None else settings.max_seconds
        self.chunk_size = chunk_size or settings.chunk_size
        self.logger = logger.bind(component="saturation", strategy=self.name.value)
        self._started = 0.0
        self._pass_limit = 0

    def run(self, state: SaturationState) -> SaturationOutcome:
        """Saturate the state in place"""
        state.strategy = self.name.value
        if state.is_contradictory:
            return SaturationOutcome.CONTRADICTION

        self._started = time.perf_counter()
        self._pass_limit = self.max_passes or default_pass_ceiling(state)
        steps_before = len(state.trace)
        self.logger.info("Saturation started", points=state.size, sets=state.count)

        outcome = None
        try:
            outcome = self._saturate(state)
        finally:
            elapsed = time.perf_counter() - self._started
            state.elapsed_seconds += elapsed
            new_steps = state.trace[steps_before:]
            saturation_metrics.record_run(
                strategy=self.name.value,
                duration_seconds=elapsed,
                passes=state.pass_count,
                rule_counts=count_rules(step.rule.value for step in new_steps),
                outcome=outcome.value if outcome else "resource_limit"
            )

        self.logger.info(
            "Saturation finished",
            outcome=outcome.value,
            passes=state.pass_count,
            changes=len(state.trace) - steps_before,
            elapsed_ms=round(state.elapsed_seconds * 1000, 1)
        )
        return outcome

    @abstractmethod
    def _saturate(self, state: SaturationState) -> SaturationOutcome:
        """Run rules until nothing changes or an interval empties"""
        pass

    def _sweep(
        self,
        state: SaturationState,
        xs: np.ndarray,
        ys: np.ndarray,
        on_change: Optional[ChangeCallback] = None
    ) -> int:
        """Apply every improving rule over a block of pairs; stops at a contradiction"""
        changes = 0
        for start in range(0, len(xs), self.chunk_size):
            block_x = xs[start:start + self.chunk_size]
            block_y = ys[start:start + self.chunk_size]
            for application in find_applications(state.lo, state.hi, block_x, block_y):
                if not apply_rule(state, *application):
                    continue
                changes += 1
                if on_change is not None:
                    on_change(state.trace[-1])
                if state.is_contradictory:
                    return changes
        return changes

    def _check_limits(self, state: SaturationState) -> None:
        elapsed = time.perf_counter() - self._started
        if state.pass_count > self._pass_limit:
            raise ResourceLimitError(
                f"saturation exceeded {self._pass_limit} passes",
                limit="max_passes", passes=state.pass_count, elapsed_seconds=elapsed
            )
        if self.max_seconds is not None and elapsed > self.max_seconds:
            raise ResourceLimitError(
                f"saturation exceeded {self.max_seconds}s of wall time",
                limit="max_seconds", passes=state.pass_count, elapsed_seconds=elapsed
            )


class FullRescanStrategy(SaturationStrategy):
    """Every pair of sets on every pass, until a pass changes nothing"""

    name = Strategy.FULL

    def _saturate(self, state: SaturationState) -> SaturationOutcome:
        all_sets = np.arange(state.count, dtype=np.int64)
        while True:
            state.pass_count += 1
            self._check_limits(state)
            changes = 0
            for x in range(state.count - 1):
                ys = all_sets[x + 1:]
                changes += self._sweep(state, np.full(ys.size, x, dtype=np.int64), ys)
                if state.is_contradictory:
                    return SaturationOutcome.CONTRADICTION
                self._check_limits(state)
            self.logger.debug("Pass complete", pass_number=state.pass_count, changes=changes)
            if changes == 0:
                return SaturationOutcome.FIXPOINT


class WorklistStrategy(SaturationStrategy):
    """
    Re-examines only pairs that read a changed bound.

    A queued set Z is swept against every other set. When lo(Z) changed it is
    also swept as the union and as the intersection of incomparable pairs,
    the only other positions whose lower bound the rules read.
    """

    name = Strategy.WORKLIST

    def _saturate(self, state: SaturationState) -> SaturationOutcome:
        all_sets = np.arange(state.count, dtype=np.int64)
        full_mask = state.universe.full_mask
        queue = deque(range(state.count))
        queued = np.ones(state.count, dtype=bool)
        lo_changed = np.zeros(state.count, dtype=bool)
        # untouched since the start: pairs with smaller sets were already swept from their side
        fresh = np.ones(state.count, dtype=bool)

        def enqueue(step: TraceStep) -> None:
            fresh[step.target] = False
            if step.rule.raises_lo:
                lo_changed[step.target] = True
            if not queued[step.target]:
                queued[step.target] = True
                queue.append(step.target)

        state.pass_count += 1
        remaining_in_round = len(queue)
        while queue:
            if remaining_in_round == 0:
                self.logger.debug("Round complete", round_number=state.pass_count, queued=len(queue))
                state.pass_count += 1
                remaining_in_round = len(queue)
            self._check_limits(state)

            z = queue.popleft()
            remaining_in_round -= 1
            queued[z] = False
            sweep_lower_roles = bool(lo_changed[z])
            lo_changed[z] = False

            partners = all_sets[z + 1:] if fresh[z] else all_sets
            fresh[z] = False
            self._sweep(state, np.full(partners.size, z, dtype=np.int64), partners, enqueue)
            if sweep_lower_roles and not state.is_contradictory:
                for xs, ys in union_pairs(z, self.chunk_size):
                    self._sweep(state, xs, ys, enqueue)
                    if state.is_contradictory:
                        break
            if sweep_lower_roles and not state.is_contradictory:
                for xs, ys in intersection_pairs(z, full_mask, self.chunk_size):
                    self._sweep(state, xs, ys, enqueue)
                    if state.is_contradictory:
                        break
            if state.is_contradictory:
                return SaturationOutcome.CONTRADICTION
        return SaturationOutcome.FIXPOINT


_STRATEGIES = {
    Strategy.FULL: FullRescanStrategy,
    Strategy.WORKLIST: WorklistStrategy,
}


def create_strategy(
    strategy: Strategy,
    max_passes: Optional[int] = None,
    max_seconds: Optional[float] = None
) -> SaturationStrategy:
    """Instantiate a strategy by name"""
    return _STRATEGIES[Strategy(strategy)](max_passes=max_passes, max_seconds=max_seconds)


def saturate(
    state: SaturationState,
    strategy: Strategy = Strategy.WORKLIST,
    max_passes: Optional[int] = None,
    max_seconds: Optional[float] = None
) -> SaturationOutcome:
    """Narrow every interval until no rule applies or one becomes empty"""
    return create_strategy(strategy, max_passes, max_seconds).run(state)


def decide(state: SaturationState, statement: Statement) -> Verdict:
    """Classify each conclusion against its set's final interval"""
    conclusions = []
    for constraint in statement.conclusions:
        interval = state.interval(constraint.points)
        if constraint.entailed_by(interval):
            status = ConclusionStatus.PROVED
        elif constraint.excluded_by(interval):
            status = ConclusionStatus.REFUTED
        else:
            status = ConclusionStatus.UNKNOWN
        conclusions.append(ConclusionVerdict(constraint=constraint, status=status, interval=interval))
    verdict = Verdict(conclusions=conclusions)
    logger.debug(
        "Conclusions decided",
        component="decision",
        statuses=[c.status.value for c in conclusions],
        proved=verdict.proved
    )
    return verdict
