"""Finite evidence about sequences: inline chains and condition (c).

Finite prefixes stand in for sequences, so every "for all n >= N" answer here
holds relative to the prefix only; results carry a caveat flag saying so.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import BaseMismatch, SearchFailed, TooShort
from src.katetov import KatetovMap, extension_profile, katetov_extend
from src.ratmetric import FiniteMetricSpace, RationalLike, as_rational, check_space

logger = logging.getLogger(__name__)

PREFIX_CAVEAT = 'prefix-only'


@dataclass(frozen=True)
class PointSequence:
    """A finite prefix u_0, u_1, ... of points of space."""
    space: FiniteMetricSpace
    order: Tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        for i in order:
            if not 0 <= i < self.space.n:
                raise ValueError(f"Point {i} is not in a space of {self.space.n} points")
        if len(set(order)) != len(order):
            raise ValueError("Sequence points must be distinct")
        object.__setattr__(self, 'order', order)

    def __len__(self) -> int:
        return len(self.order)

    def distances(self) -> np.ndarray:
        """Numerator matrix of the sequence in sequence order."""
        idx = list(self.order)
        return self.space.numer[np.ix_(idx, idx)]


@dataclass(frozen=True)
class InlineReport:
    """excess is the largest sum-of-steps overshoot; worst_r attains it."""
    holds: bool
    worst_r: Optional[int]
    excess: Fraction

    def report_line(self) -> str:
        return f"inline {str(self.holds).lower()} worst {'-' if self.worst_r is None else self.worst_r} excess {self.excess}"


def inline_excess(seq: PointSequence) -> List[Fraction]:
    """For each r: sum of d(u_i, u_i+1) for i <= r, minus d(u_0, u_r+1)."""
    if len(seq) < 2:
        return []
    d = seq.distances()
    steps = np.array([d[i, i + 1] for i in range(len(seq) - 1)], dtype=d.dtype)
    excess = np.cumsum(steps) - d[0, 1:]
    return [Fraction(int(e), seq.space.denom) for e in excess]


def eps_good_inline(seq: PointSequence, eps: RationalLike) -> InlineReport:
    eps = as_rational(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    excess = inline_excess(seq)
    if not excess:
        return InlineReport(True, None, Fraction(0))
    worst = max(range(len(excess)), key=lambda r: (excess[r], -r))
    return InlineReport(excess[worst] <= eps, worst, excess[worst])


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    N: Optional[int]
    caveat: str = PREFIX_CAVEAT

    def report_line(self) -> str:
        return f"condition {str(self.holds).lower()} N {'-' if self.N is None else self.N} {self.caveat}"


def condition_c_check(seq: PointSequence, delta: RationalLike) -> ConditionReport:
    """Least N such that every later u_n has a witness u_i, 1 <= i <= max(N, 1), with
    d(u_0, u_n) >= d(u_0, u_i) + d(u_i, u_n) - delta.

    Only n > max(N, 1) are tested; the other witnesses are trivial.
    """
    delta = as_rational(delta)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    L = len(seq)
    if L < 3:
        return ConditionReport(True, 0, 'vacuous')
    # scale so that delta is a whole number of units
    scale = (delta * seq.space.denom).denominator
    d = seq.distances() if scale == 1 else seq.distances().astype(object) * scale
    slack = int(delta * seq.space.denom * scale)
    # gap[i, n] = d(u_0, u_i) + d(u_i, u_n) - d(u_0, u_n)
    gap = d[0][:, np.newaxis] + d - d[0][np.newaxis, :]
    for N in range(0, L - 1):
        top = max(N, 1)
        witnessed = np.asarray(gap[1:top + 1, top + 1:] <= slack, dtype=bool).any(axis=0)
        if witnessed.all():
            return ConditionReport(True, N)
    return ConditionReport(False, None)


@dataclass(frozen=True)
class InlineExtraction:
    """An eps-good-inline subsequence and the deltas spent to keep it."""
    sequence: PointSequence
    eps: Fraction
    deltas: Tuple[Fraction, ...]


def extract_inline_subsequence(seq: PointSequence, delta0: RationalLike) -> InlineExtraction:
    """Greedy pass keeping points that extend the chain nearly additively.

    A point is kept for free when its overshoot fits within the deltas spent
    so far; otherwise it may spend the current delta, which is then halved.
    """
    delta = as_rational(delta0)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if len(seq) < 2:
        raise TooShort(len(seq))
    space = seq.space
    kept = [seq.order[0]]
    path = Fraction(0)
    spent = Fraction(0)
    deltas: List[Fraction] = []
    for p in seq.order[1:]:
        overshoot = path + space.d(kept[-1], p) - space.d(kept[0], p)
        if overshoot > spent:
            if overshoot > spent + delta:
                continue
            spent += delta
            deltas.append(delta)
            delta /= 2
        path += space.d(kept[-1], p)
        kept.append(p)
    if len(kept) < 2:
        raise TooShort(len(kept))
    logger.info(f"Kept {len(kept)} of {len(seq)} points, eps {spent}")
    return InlineExtraction(PointSequence(space, tuple(kept)), spent, tuple(deltas))


def nat_line(n: int) -> FiniteMetricSpace:
    """0, 1, ..., n-1 with d(i, j) = |i - j|."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    idx = np.arange(n, dtype=np.int64)
    return FiniteMetricSpace(np.abs(idx[:, np.newaxis] - idx[np.newaxis, :]))


def _half_steps(low: Fraction, high: Fraction) -> Optional[Fraction]:
    """Least multiple of 1/2 in [low, high]."""
    first = Fraction(-((-2 * low) // 1), 2)
    return first if first <= high else None


def euclid_spread(n: int, max_tries: int = 8) -> FiniteMetricSpace:
    """Base point 0 and x_1..x_{n-1} with
    d(x_{i+1}, 0) >= d(x_i, 0) + 1 and d(x_i, 0) <= d(x_i, x_j) + d(x_j, 0) - 1 for j < i.

    Radii and distances are searched on the half-integer grid, smallest first.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    radius = [Fraction(0), Fraction(1)]
    rows = {(1, 0): Fraction(1)}

    def fill(i: int, r: Fraction) -> Optional[dict]:
        row = {(i, 0): r}
        for j in range(1, i):
            low = max(r - radius[j] + 1, abs(r - radius[j]), Fraction(1, 2))
            high = r + radius[j]
            for k in range(1, j):
                low = max(low, abs(row[(i, k)] - rows[(j, k)]))
                high = min(high, row[(i, k)] + rows[(j, k)])
            value = _half_steps(low, high)
            if value is None:
                return None
            row[(i, j)] = value
        return row

    for i in range(2, n):
        for attempt in range(max_tries):
            r = radius[i - 1] + 1 + Fraction(attempt, 2)
            row = fill(i, r)
            if row is not None:
                break
        else:
            raise SearchFailed(i)
        radius.append(r)
        rows.update(row)

    matrix = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), v in rows.items():
        matrix[i][j] = matrix[j][i] = v
    labels = ['0'] + [f"x{i}" for i in range(1, n)]
    return check_space(FiniteMetricSpace.from_rows(matrix, labels))


def spread_margins(spread: FiniteMetricSpace) -> List[Fraction]:
    """Slack of every defining inequality of a spread; all must be >= 0."""
    margins = []
    for i in range(2, spread.n):
        margins.append(spread.d(i, 0) - spread.d(i - 1, 0) - 1)
        for j in range(1, i):
            margins.append(spread.d(i, j) + spread.d(j, 0) - 1 - spread.d(i, 0))
    return margins


def fa_family(spread: FiniteMetricSpace, subsets: Sequence[Sequence[int]]) -> List[KatetovMap]:
    """f_A: Katetov extension of f = d(., 0) from {x_i : i in A} to all x-points."""
    points = list(range(1, spread.n))
    sub = spread.subspace(points)
    family = []
    for A in subsets:
        A = sorted(set(int(i) for i in A))
        if not A:
            raise ValueError("Subsets must be nonempty")
        if A[0] < 1 or A[-1] >= spread.n:
            raise ValueError(f"Subset {A} is not made of x-point indices 1..{spread.n - 1}")
        family.append(katetov_extend(sub, [i - 1 for i in A], [spread.d(i, 0) for i in A]))
    return family


def example1_convergence(n: int, f: KatetovMap) -> List[Fraction]:
    """Distance from f to the extension of its restriction to 0..i, for each i."""
    line = nat_line(n)
    if f.base != line:
        raise BaseMismatch()
    return extension_profile(line, f, range(n))
