"""
Rank-interval narrowing rules

Every rule reads bounds of the operands X, Y and of U = X | Y, I = X & Y and
proposes a new bound for one target set:

    RS1  X <= Y   lo(Y) <- lo(X)
    RS2  Y <= X   lo(X) <- lo(Y)
    RS3  X <= Y   hi(X) <- hi(Y)
    RS4  Y <= X   hi(Y) <- hi(X)
    RS5           hi(U) <- hi(X) + hi(Y) - lo(I)
    RS6           hi(I) <- hi(X) + hi(Y) - lo(U)
    RS7           lo(X) <- lo(I) + lo(U) - hi(Y)
    RS8           lo(Y) <- lo(I) + lo(U) - hi(X)

A rule applies only when the proposed bound strictly improves the target.
The rule set is closed under swapping X and Y (RS1/RS2, RS3/RS4, RS7/RS8
trade places; RS5 and RS6 are symmetric), so sweeping unordered pairs is
enough.
"""

from typing import List, NamedTuple, Optional, Sequence, Tuple
import numpy as np

from src.core.models import RuleId, is_subset

LO = "lo"
HI = "hi"

RULES: Tuple[RuleId, ...] = tuple(RuleId)


class Application(NamedTuple):
    """A rule instance whose guard holds on the table it was evaluated against"""
    rule: RuleId
    x: int
    y: int


def rule_target(rule: RuleId, x: int, y: int) -> int:
    """Set whose interval the rule narrows"""
    if rule in (RuleId.RS2, RuleId.RS3, RuleId.RS7):
        return x
    elif rule in (RuleId.RS1, RuleId.RS4, RuleId.RS8):
        return y
    elif rule == RuleId.RS5:
        return x | y
    return x & y


def rule_reads(rule: RuleId, x: int, y: int) -> List[Tuple[str, int]]:
    """Bounds the rule reads, as (end, set) pairs"""
    union, inter = x | y, x & y
    return {
        RuleId.RS1: [(LO, x)],
        RuleId.RS2: [(LO, y)],
        RuleId.RS3: [(HI, y)],
        RuleId.RS4: [(HI, x)],
        RuleId.RS5: [(HI, x), (HI, y), (LO, inter)],
        RuleId.RS6: [(HI, x), (HI, y), (LO, union)],
        RuleId.RS7: [(LO, inter), (LO, union), (HI, y)],
        RuleId.RS8: [(LO, inter), (LO, union), (HI, x)],
    }[rule]


def rule_bound(rule: RuleId, x: int, y: int, lo: Sequence[int], hi: Sequence[int]) -> Optional[int]:
    """Bound proposed for the target, or None when the inclusion premise fails"""
    union, inter = x | y, x & y
    if rule == RuleId.RS1:
        return int(lo[x]) if is_subset(x, y) else None
    elif rule == RuleId.RS2:
        return int(lo[y]) if is_subset(y, x) else None
    elif rule == RuleId.RS3:
        return int(hi[y]) if is_subset(x, y) else None
    elif rule == RuleId.RS4:
        return int(hi[x]) if is_subset(y, x) else None
    elif rule == RuleId.RS5:
        return int(hi[x]) + int(hi[y]) - int(lo[inter])
    elif rule == RuleId.RS6:
        return int(hi[x]) + int(hi[y]) - int(lo[union])
    elif rule == RuleId.RS7:
        return int(lo[inter]) + int(lo[union]) - int(hi[y])
    return int(lo[inter]) + int(lo[union]) - int(hi[x])


def find_applications(lo: np.ndarray, hi: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> List[Application]:
    """
    Evaluate all eight rules on a block of pairs at once.

    Per target bound only the strongest proposal survives (earliest pair,
    then lowest rule number, on ties); survivors come back in pair order,
    then rule order. Callers re-evaluate each one against the live table
    before applying it.
    """
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    distinct = xs != ys
    union = xs | ys
    inter = xs & ys

    lo_x, lo_y = lo[xs].astype(np.int16), lo[ys].astype(np.int16)
    hi_x, hi_y = hi[xs].astype(np.int16), hi[ys].astype(np.int16)
    lo_u, hi_u = lo[union].astype(np.int16), hi[union].astype(np.int16)
    lo_i, hi_i = lo[inter].astype(np.int16), hi[inter].astype(np.int16)
    x_in_y = distinct & (inter == xs)
    y_in_x = distinct & (inter == ys)

    proposals = [
        (x_in_y & (lo_x > lo_y), ys, lo_x, True),
        (y_in_x & (lo_y > lo_x), xs, lo_y, True),
        (x_in_y & (hi_y < hi_x), xs, hi_y, False),
        (y_in_x & (hi_x < hi_y), ys, hi_x, False),
    ]
    bound5 = hi_x + hi_y - lo_i
    bound6 = hi_x + hi_y - lo_u
    bound7 = lo_i + lo_u - hi_y
    bound8 = lo_i + lo_u - hi_x
    proposals += [
        (distinct & (bound5 < hi_u), union, bound5, False),
        (distinct & (bound6 < hi_i), inter, bound6, False),
        (distinct & (bound7 > lo_x), xs, bound7, True),
        (distinct & (bound8 > lo_y), ys, bound8, True),
    ]

    rule_col, pos_col, target_col, bound_col, raises_col = [], [], [], [], []
    for rule_index, (fires, target, bound, raises) in enumerate(proposals):
        positions = np.flatnonzero(fires)
        if positions.size == 0:
            continue
        rule_col.append(np.full(positions.size, rule_index, dtype=np.int64))
        pos_col.append(positions)
        target_col.append(target[positions])
        bound_col.append(bound[positions].astype(np.int64))
        raises_col.append(np.full(positions.size, raises))
    if not rule_col:
        return []

    rules = np.concatenate(rule_col)
    positions = np.concatenate(pos_col)
    targets = np.concatenate(target_col)
    bounds = np.concatenate(bound_col)
    raises = np.concatenate(raises_col)

    # Strongest proposal per (target, end): highest lo or lowest hi
    strength = np.where(raises, -bounds, bounds)
    key = targets * 2 + raises
    order = np.lexsort((rules, positions, strength, key))
    first = np.ones(order.size, dtype=bool)
    first[1:] = key[order][1:] != key[order][:-1]
    chosen = order[first]
    chosen = chosen[np.lexsort((rules[chosen], positions[chosen]))]

    return [
        Application(RULES[rule_index], int(xs[pos]), int(ys[pos]))
        for rule_index, pos in zip(rules[chosen].tolist(), positions[chosen].tolist())
    ]
