"""
Countermodel search and model sampling over finite projective spaces
"""

import random
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterator, List, Optional, Tuple
import structlog

from src.core.config import settings
from src.core.models import (
    Assignment, AssignmentCheck, CountermodelResult, RankConstraint, Relation, Statement
)
from src.monitoring.metrics import oracle_metrics
from src.oracle.model import ProjectiveModel

logger = structlog.get_logger()

RESTART_AFTER = 10_000


def check_assignment(model: ProjectiveModel, statement: Statement, assignment: Assignment) -> AssignmentCheck:
    """Evaluate every hypothesis under an assignment of points to model points"""
    universe = statement.universe
    for constraint in statement.hypotheses:
        rank = model.rank(assignment.indices(universe, constraint.points))
        if not constraint.holds(rank):
            return AssignmentCheck(satisfies=False, violated=constraint, rank=rank)
    return AssignmentCheck(satisfies=True)


def violated_conclusion(
    model: ProjectiveModel,
    statement: Statement,
    assignment: Assignment
) -> Optional[RankConstraint]:
    """First conclusion that fails under the assignment"""
    for constraint in statement.conclusions:
        if not constraint.holds(model.rank(assignment.indices(statement.universe, constraint.points))):
            return constraint
    return None


def assignment_order(statement: Statement) -> List[int]:
    """Point indices, most constrained first, so that hypotheses close early"""
    occurrences = [0] * statement.universe.size
    for constraint in statement.hypotheses:
        for i in range(statement.universe.size):
            if constraint.points >> i & 1:
                occurrences[i] += 1
    return sorted(range(statement.universe.size), key=lambda i: (-occurrences[i], i))


class AssignmentSearch:
    """
    Depth-first assignment of statement points to model points.

    After each assignment the hypotheses touching the new point are checked on
    their assigned part: an upper bound must already hold, and a lower bound
    must stay reachable with one extra rank per unassigned point.
    """

    def __init__(self, statement: Statement, model: ProjectiveModel, symmetric: bool = True):
        self.statement = statement
        self.model = model
        self.symmetric = symmetric
        self.order = assignment_order(statement)
        self.depth_of = {point: depth for depth, point in enumerate(self.order)}
        self.checks: List[List[Tuple[RankConstraint, List[int], int]]] = [[] for _ in self.order]
        for constraint in statement.hypotheses:
            depths = sorted(self.depth_of[i] for i in range(statement.universe.size) if constraint.points >> i & 1)
            for position, depth in enumerate(depths):
                self.checks[depth].append((constraint, depths[:position + 1], len(depths) - position - 1))
        self.trials = 0

    @property
    def space_size(self) -> int:
        free = len(self.order) - (1 if self.symmetric else 0)
        return self.model.size ** free

    def _consistent(self, depth: int, values: List[int]) -> bool:
        for constraint, depths, unassigned in self.checks[depth]:
            rank = self.model.rank([values[d] for d in depths])
            if constraint.relation != Relation.GE and rank > constraint.value:
                return False
            if constraint.relation != Relation.LE and rank + unassigned < constraint.value:
                return False
        return True

    def _candidates(self, depth: int, rng: Optional[random.Random]) -> List[int]:
        if depth == 0 and self.symmetric:
            return [0]
        values = list(range(self.model.size))
        if rng is not None:
            rng.shuffle(values)
        return values

    def solutions(self, budget: int, rng: Optional[random.Random] = None) -> Iterator[Assignment]:
        """Assignments satisfying every hypothesis, until the trial budget runs out"""
        values = [0] * len(self.order)
        stack = [(0, iter(self._candidates(0, rng)))]
        while stack and self.trials < budget:
            depth, candidates = stack[-1]
            value = next(candidates, None)
            if value is None:
                stack.pop()
                continue
            self.trials += 1
            values[depth] = value
            if not self._consistent(depth, values):
                continue
            if depth + 1 == len(self.order):
                yield self._assignment(values)
            else:
                stack.append((depth + 1, iter(self._candidates(depth + 1, rng))))

    def _assignment(self, values: List[int]) -> Assignment:
        names = self.statement.universe.names
        return Assignment(mapping={names[point]: values[depth] for depth, point in enumerate(self.order)})


def _search(statement: Statement, model: ProjectiveModel, budget: int, seed: int) -> CountermodelResult:
    search = AssignmentSearch(statement, model)
    ordered = search.space_size <= budget
    rng = None if ordered else random.Random(seed)

    while search.trials < budget:
        limit = budget if ordered else min(budget, search.trials + RESTART_AFTER)
        for assignment in search.solutions(limit, rng):
            conclusion = violated_conclusion(model, statement, assignment)
            if conclusion is not None:
                return CountermodelResult(
                    found=True, assignment=assignment, violated_conclusion=conclusion,
                    model=model.label, trials=search.trials, seed=seed, exhaustive=ordered
                )
        if search.trials < limit:
            # the pruned tree was traversed completely
            return CountermodelResult(
                found=False, model=model.label, trials=search.trials, seed=seed, exhaustive=True
            )
    return CountermodelResult(found=False, model=model.label, trials=search.trials, seed=seed)


def _search_worker(arguments: Tuple[Statement, int, int, int, int]) -> CountermodelResult:
    statement, q, dimension, budget, seed = arguments
    return _search(statement, ProjectiveModel(q, dimension), budget, seed)


def search_countermodel(
    statement: Statement,
    model: ProjectiveModel,
    budget: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None
) -> CountermodelResult:
    """
    Look for an assignment satisfying every hypothesis and violating a conclusion.

    Small spaces are enumerated completely; larger ones are sampled by
    randomized depth-first search with restarts. With several workers the
    budget is split over consecutive seeds and the lowest seed that found a
    countermodel wins.
    """
    budget = budget or settings.refute_budget
    seed = settings.refute_seed if seed is None else seed
    workers = workers or settings.refute_workers
    log = logger.bind(component="countermodel_search", model=model.label)
    log.info("Countermodel search started", budget=budget, seed=seed, workers=workers)

    if workers <= 1 or AssignmentSearch(statement, model).space_size <= budget:
        result = _search(statement, model, budget, seed)
    else:
        share = max(1, budget // workers)
        jobs = [(statement, model.q, model.dimension, share, seed + k) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_search_worker, jobs))
        found = [r for r in results if r.found]
        trials = sum(r.trials for r in results)
        if found:
            result = min(found, key=lambda r: r.seed).model_copy(update={"trials": trials})
        else:
            result = CountermodelResult(found=False, model=model.label, trials=trials, seed=seed)

    oracle_metrics.record_search(result.trials, result.found)
    log.info(
        "Countermodel search finished",
        found=result.found,
        trials=result.trials,
        seed=result.seed,
        exhaustive=result.exhaustive
    )
    return result


def sample_assignments(
    statement: Statement,
    model: ProjectiveModel,
    count: int,
    seed: int = 0,
    max_trials: Optional[int] = None
) -> Iterator[Assignment]:
    """
    Random assignments satisfying every hypothesis, one fresh randomized search each.

    A search that stalls is restarted; sampling stops early only when
    max_trials (default RESTART_AFTER per requested sample) is spent.
    """
    rng = random.Random(seed)
    limit = count * RESTART_AFTER if max_trials is None else max_trials
    spent = 0
    produced = 0
    while produced < count and spent < limit:
        search = AssignmentSearch(statement, model, symmetric=False)
        assignment = next(search.solutions(min(RESTART_AFTER, limit - spent), rng), None)
        spent += search.trials
        if assignment is not None:
            produced += 1
            yield assignment


def assignment_ranks(model: ProjectiveModel, statement: Statement, assignment: Assignment) -> Dict[int, int]:
    """Model rank of every subset of the universe, keyed by bitmask"""
    universe = statement.universe
    indices = [assignment.mapping[name] for name in universe.names]
    return {
        mask: model.rank([indices[i] for i in range(universe.size) if mask >> i & 1])
        for mask in range(1 << universe.size)
    }
