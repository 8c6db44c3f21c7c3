"""
Core data models for rankprover

Point sets are plain ``int`` bitmasks over a ``PointUniverse``: bit ``i`` is
set when the universe's ``names[i]`` belongs to the set.
"""

from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator
from typing import Dict, Iterable, List, Optional
from enum import Enum


EMPTY_SET_SYMBOL = "∅"


def popcount(mask: int) -> int:
    """Number of points in a set"""
    return mask.bit_count()


def is_subset(inner: int, outer: int) -> bool:
    """Bitmask inclusion test"""
    return inner & outer == inner


class RankInterval(BaseModel):
    """Bounds (lo, hi) on the unknown rank of one point set; lo > hi encodes a contradiction"""
    model_config = ConfigDict(frozen=True)

    lo: int = Field(..., description="Lower bound (rkMin)")
    hi: int = Field(..., description="Upper bound (rkMax)")

    @classmethod
    def of(cls, lo: int, hi: int) -> "RankInterval":
        """Unvalidated constructor for hot paths"""
        return cls.model_construct(lo=int(lo), hi=int(hi))

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def contains(self, value: int) -> bool:
        return self.lo <= value <= self.hi

    def intersect(self, other: "RankInterval") -> "RankInterval":
        return RankInterval.of(max(self.lo, other.lo), min(self.hi, other.hi))

    def is_strictly_narrower_than(self, other: "RankInterval") -> bool:
        return self.lo >= other.lo and self.hi <= other.hi and self != other

    def as_list(self) -> List[int]:
        return [self.lo, self.hi]

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


class PointUniverse(BaseModel):
    """Ordered named points of a statement and the ambient projective dimension"""
    model_config = ConfigDict(frozen=True)

    names: List[str] = Field(..., min_length=1, description="Point identifiers, index i <-> bit i")
    dimension: int = Field(..., ge=2, description="Ambient projective dimension d")

    @field_validator("names")
    @classmethod
    def _names_unique(cls, names: List[str]) -> List[str]:
        seen = set()
        for name in names:
            if not name:
                raise ValueError("point names must be nonempty")
            if name in seen:
                raise ValueError(f"duplicate point name: {name}")
            seen.add(name)
        return names

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def cap(self) -> int:
        """Dimension cap: no set has rank above d + 1"""
        return self.dimension + 1

    @property
    def full_mask(self) -> int:
        return (1 << len(self.names)) - 1

    def index(self, name: str) -> int:
        return self.names.index(name)

    def mask_of(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            mask |= 1 << self.index(name)
        return mask

    def names_of(self, mask: int) -> List[str]:
        return [name for i, name in enumerate(self.names) if (mask >> i) & 1]

    def format_set(self, mask: int) -> str:
        return " ".join(self.names_of(mask)) or EMPTY_SET_SYMBOL

    def initial_interval(self, mask: int) -> RankInterval:
        """Bounds given by the rank axioms alone: (1, min(|X|, d+1)), and (0, 0) for the empty set"""
        if mask == 0:
            return RankInterval.of(0, 0)
        return RankInterval.of(1, min(popcount(mask), self.cap))


class Relation(str, Enum):
    """Relation of a rank constraint"""
    EQ = ":"
    LE = "<="
    GE = ">="


class RankConstraint(BaseModel):
    """A constraint rk(points) REL value"""
    model_config = ConfigDict(frozen=True)

    points: int = Field(..., gt=0, description="Nonempty point set bitmask")
    relation: Relation = Field(default=Relation.EQ)
    value: int = Field(..., ge=0)

    def restrict(self, interval: RankInterval) -> RankInterval:
        """Intersect an interval with the values allowed by this constraint"""
        if self.relation == Relation.EQ:
            return RankInterval.of(max(interval.lo, self.value), min(interval.hi, self.value))
        elif self.relation == Relation.LE:
            return RankInterval.of(interval.lo, min(interval.hi, self.value))
        return RankInterval.of(max(interval.lo, self.value), interval.hi)

    def holds(self, rank: int) -> bool:
        if self.relation == Relation.EQ:
            return rank == self.value
        elif self.relation == Relation.LE:
            return rank <= self.value
        return rank >= self.value

    def entailed_by(self, interval: RankInterval) -> bool:
        """Every rank inside the interval satisfies the constraint"""
        if self.relation == Relation.EQ:
            return interval.is_exact and interval.contains(self.value)
        elif self.relation == Relation.LE:
            return interval.hi <= self.value
        return interval.lo >= self.value

    def excluded_by(self, interval: RankInterval) -> bool:
        """No rank inside the interval satisfies the constraint"""
        return self.restrict(interval).is_empty


class Statement(BaseModel):
    """Rank hypotheses and conclusions over a point universe"""

    universe: PointUniverse
    hypotheses: List[RankConstraint] = Field(default_factory=list)
    conclusions: List[RankConstraint] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _constraints_in_universe(self) -> "Statement":
        full = self.universe.full_mask
        for constraint in [*self.hypotheses, *self.conclusions]:
            if constraint.points & ~full:
                raise ValueError("constraint references a point outside the universe")
        return self

    def format_constraint(self, constraint: RankConstraint) -> str:
        return f"{self.universe.format_set(constraint.points)} {constraint.relation.value} {constraint.value}"


class RuleId(str, Enum):
    """Saturation rules; X, Y are the operands, U = X | Y, I = X & Y"""
    RS1 = "RS1"  # X <= Y: lo(Y) <- lo(X)
    RS2 = "RS2"  # Y <= X: lo(X) <- lo(Y)
    RS3 = "RS3"  # X <= Y: hi(X) <- hi(Y)
    RS4 = "RS4"  # Y <= X: hi(Y) <- hi(X)
    RS5 = "RS5"  # hi(U) <- hi(X) + hi(Y) - lo(I)
    RS6 = "RS6"  # hi(I) <- hi(X) + hi(Y) - lo(U)
    RS7 = "RS7"  # lo(X) <- lo(I) + lo(U) - hi(Y)
    RS8 = "RS8"  # lo(Y) <- lo(I) + lo(U) - hi(X)

    @property
    def raises_lo(self) -> bool:
        return self in (RuleId.RS1, RuleId.RS2, RuleId.RS7, RuleId.RS8)


class StepKind(str, Enum):
    """Trace step kinds"""
    INIT = "init"
    HYPOTHESIS = "hypothesis"
    RULE = "rule"


class TraceStep(BaseModel):
    """One narrowing of one rank interval"""
    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0)
    kind: StepKind
    rule: Optional[RuleId] = None
    x: int = Field(default=0, description="First operand (hypothesis set for hypothesis steps)")
    y: int = Field(default=0, description="Second operand")
    target: int = Field(default=0, description="Set whose interval changed")
    old: RankInterval
    new: RankInterval
    deps: List[int] = Field(default_factory=list, description="Ids of the steps whose bounds were read")
    relation: Optional[Relation] = None
    value: Optional[int] = None


class Strategy(str, Enum):
    """Saturation strategies"""
    FULL = "full"
    WORKLIST = "worklist"


class SaturationOutcome(str, Enum):
    """Result of a saturation run"""
    FIXPOINT = "fixpoint"
    CONTRADICTION = "contradiction"


class ConclusionStatus(str, Enum):
    """Per-conclusion decision"""
    PROVED = "proved"
    UNKNOWN = "unknown"
    REFUTED = "refuted"


class ConclusionVerdict(BaseModel):
    """Decision for one conclusion"""
    constraint: RankConstraint
    status: ConclusionStatus
    interval: RankInterval


class Verdict(BaseModel):
    """Decision for a whole statement (conjunction of its conclusions)"""
    conclusions: List[ConclusionVerdict] = Field(default_factory=list)

    @property
    def proved(self) -> bool:
        return bool(self.conclusions) and all(
            c.status == ConclusionStatus.PROVED for c in self.conclusions
        )


# Certificate models

class CertificateHeader(BaseModel):
    """First record of a certificate"""
    version: int = Field(..., ge=1)
    tool_version: str
    dim: int = Field(..., ge=2)
    points: List[str]
    stmt_sha256: str
    strategy: Strategy
    outcome: SaturationOutcome
    elapsed_ms: float = Field(default=0.0, ge=0)
    stream: bool = Field(default=True, description="Records are appended one per line")


class Lemma(BaseModel):
    """Steps establishing one goal; target None is the contradiction goal"""
    id: int = Field(..., ge=0)
    target: Optional[int] = None
    goal: RankInterval
    by: List[int] = Field(default_factory=list, description="Steps that set the goal's lo and hi")
    steps: List[TraceStep] = Field(default_factory=list)

    @property
    def is_contradiction(self) -> bool:
        return self.target is None


class VerdictRecord(BaseModel):
    """Claimed final bounds and status of one conclusion"""
    points: int = Field(..., gt=0)
    relation: Relation
    value: int = Field(..., ge=0)
    status: ConclusionStatus
    interval: RankInterval
    by: List[int] = Field(default_factory=list, description="Steps that set the final lo and hi")


class Certificate(BaseModel):
    """Self-contained, replayable record of a saturation run"""
    header: CertificateHeader
    lemmas: List[Lemma] = Field(default_factory=list)
    verdicts: List[VerdictRecord] = Field(default_factory=list)

    @property
    def steps(self) -> List[TraceStep]:
        return [step for lemma in self.lemmas for step in lemma.steps]


class CheckReason(str, Enum):
    """Machine-readable checker failure reasons"""
    BAD_ARITHMETIC = "bad-arithmetic"
    NOT_AN_IMPROVEMENT = "not-an-improvement"
    DEP_CYCLE = "dep-cycle"
    VERDICT_MISMATCH = "verdict-mismatch"
    HASH_MISMATCH = "hash-mismatch"
    MALFORMED = "malformed"


class CheckResult(BaseModel):
    """Outcome of replaying a certificate"""
    valid: bool
    step_id: Optional[int] = None
    reason: Optional[CheckReason] = None
    message: Optional[str] = None
    steps_checked: int = 0


# Oracle models

class Assignment(BaseModel):
    """Map from statement point names to model point indices (not necessarily injective)"""
    mapping: Dict[str, int] = Field(default_factory=dict)

    def indices(self, universe: PointUniverse, mask: int) -> List[int]:
        return [self.mapping[name] for name in universe.names_of(mask)]


class AssignmentCheck(BaseModel):
    """Whether an assignment satisfies every hypothesis"""
    satisfies: bool
    violated: Optional[RankConstraint] = None
    rank: Optional[int] = None


class CountermodelResult(BaseModel):
    """Outcome of a countermodel search"""
    found: bool
    assignment: Optional[Assignment] = None
    violated_conclusion: Optional[RankConstraint] = None
    model: str = Field(..., description="Model label, e.g. PG(3,2)")
    trials: int = 0
    seed: int = 0
    exhaustive: bool = Field(default=False, description="True when the whole space was searched")
