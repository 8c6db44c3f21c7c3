"""
Finite projective spaces PG(d, q) over prime fields with an exact rank oracle
"""

import itertools
from typing import List, Sequence
import numpy as np
import structlog

from src.core.exceptions import ModelError

logger = structlog.get_logger()

SUPPORTED_FIELDS = (2, 3)
MAX_MODEL_POINTS = 1 << 16


def gf2_rank(rows: List[int]) -> int:
    """Rank over GF(2) of vectors packed into int bitsets"""
    work = list(rows)
    rank = 0
    while work:
        pivot = work.pop()
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        work = [row ^ pivot if row & low else row for row in work]
    return rank


def rank_mod_p(matrix: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over the field with p elements, by row reduction"""
    a = np.array(matrix, dtype=np.int64) % p
    rows, cols = a.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        candidates = np.flatnonzero(a[rank:, col])
        if candidates.size == 0:
            continue
        pivot = rank + candidates[0]
        if pivot != rank:
            a[[rank, pivot]] = a[[pivot, rank]]
        # p is prime: a^(p-2) is the inverse of a
        a[rank] = (a[rank] * pow(int(a[rank, col]), p - 2, p)) % p
        below = a[:, col].copy()
        below[rank] = 0
        a = (a - np.outer(below, a[rank])) % p
        rank += 1
    return rank


class ProjectiveModel:
    """
    Points of PG(d, q): nonzero vectors of length d + 1 over GF(q) whose first
    nonzero coordinate is 1, in lexicographic order.
    """

    def __init__(self, q: int, dimension: int):
        if q not in SUPPORTED_FIELDS:
            raise ModelError(f"unsupported field size {q}; choose one of {SUPPORTED_FIELDS}", q=q, dimension=dimension)
        if dimension < 1:
            raise ModelError(f"dimension must be positive, got {dimension}", q=q, dimension=dimension)
        expected = (q ** (dimension + 1) - 1) // (q - 1)
        if expected > MAX_MODEL_POINTS:
            raise ModelError(f"PG({dimension},{q}) has {expected} points, too many to search", q=q, dimension=dimension)

        self.q = q
        self.dimension = dimension
        vectors = [
            coords for coords in itertools.product(range(q), repeat=dimension + 1)
            if any(coords) and next(c for c in coords if c) == 1
        ]
        self.points = np.array(vectors, dtype=np.int64)
        self._index = {tuple(v): i for i, v in enumerate(vectors)}
        # Coordinate j is bit j
        self._bits = [sum(1 << j for j, c in enumerate(v) if c) for v in vectors] if q == 2 else []
        logger.debug("Projective model built", component="oracle", model=self.label, points=len(vectors))

    @property
    def label(self) -> str:
        return f"PG({self.dimension},{self.q})"

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def cap(self) -> int:
        return self.dimension + 1

    def index_of(self, coords: Sequence[int]) -> int:
        """Index of the point spanned by a nonzero vector"""
        vector = [int(c) % self.q for c in coords]
        if len(vector) != self.dimension + 1 or not any(vector):
            raise ModelError(f"{list(coords)} is not a point of {self.label}", q=self.q, dimension=self.dimension)
        lead = next(c for c in vector if c)
        scale = pow(lead, self.q - 2, self.q)
        return self._index[tuple((c * scale) % self.q for c in vector)]

    def rank(self, indices: Sequence[int]) -> int:
        if len(indices) == 0:
            return 0
        if self.q == 2:
            return gf2_rank([self._bits[i] for i in set(indices)])
        return rank_mod_p(self.points[sorted(set(indices))], self.q)

    def __repr__(self) -> str:
        return f"ProjectiveModel({self.label}, {self.size} points)"


def model_rank(model: ProjectiveModel, points: Sequence[int]) -> int:
    """Rank over GF(q) of the homogeneous coordinates of the given model points"""
    return model.rank(points)


def model_for(name: str, dimension: int) -> ProjectiveModel:
    """Build a model from a CLI name: pg2 or pg3"""
    fields = {"pg2": 2, "pg3": 3}
    if name not in fields:
        raise ModelError(f"unknown model {name!r}; expected pg2 or pg3", dimension=dimension)
    return ProjectiveModel(fields[name], dimension)
