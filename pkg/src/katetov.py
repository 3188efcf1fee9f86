"""Katetov maps over finite spaces.

A Katetov map f on X satisfies |f(x) - f(y)| <= d(x,y) <= f(x) + f(y) and
describes the distances from one new point to the points of X. E(X) is never
built; everything here works through checks, extensions and grid enumerations.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from math import lcm
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import (
    BaseMismatch,
    EmptySubset,
    HypothesisViolated,
    InfeasiblePartial,
    LengthMismatch,
    LipschitzViolation,
    MetricError,
    NegativeValue,
    NotFound,
    SumViolation,
    SupportMismatch,
)
from src.ratmetric import (
    FiniteMetricSpace,
    RationalLike,
    as_rational,
    common_denominator,
    scale_values,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KatetovMap:
    """Values of a one-point extension, one per base point."""
    base: FiniteMetricSpace
    values: Tuple[Fraction, ...]
    support: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        values = tuple(as_rational(v) for v in self.values)
        if len(values) != self.base.n:
            raise LengthMismatch(self.base.n, len(values))
        object.__setattr__(self, 'values', values)
        if self.support is not None:
            object.__setattr__(self, 'support', tuple(int(s) for s in self.support))

    def __call__(self, x: int) -> Fraction:
        return self.values[x]

    def denominator(self) -> int:
        return lcm(self.base.denom, common_denominator(self.values))

    def scaled(self, denom: int) -> np.ndarray:
        return scale_values(self.values, denom)

    def zero_points(self) -> Tuple[int, ...]:
        return tuple(x for x, v in enumerate(self.values) if v == 0)


MapLike = Union[KatetovMap, Sequence[RationalLike]]


def map_values(f: MapLike) -> List[Fraction]:
    if isinstance(f, KatetovMap):
        return list(f.values)
    return [as_rational(v) for v in f]


def _scaled_pair(space: FiniteMetricSpace, values: Sequence[Fraction]) -> Tuple[int, np.ndarray, np.ndarray]:
    denom = lcm(space.denom, common_denominator(values))
    return denom, space.scaled(denom), scale_values(values, denom)


def _extend_scaled(d: np.ndarray, subset: Sequence[int], f: np.ndarray) -> np.ndarray:
    """k(f)(x) = min over s in subset of f(s) + d(x, s), on scaled integers."""
    return (d[:, list(subset)] + f[np.newaxis, :]).min(axis=1)


def katetov_violation(space: FiniteMetricSpace, values: Sequence[RationalLike]) -> Optional[MetricError]:
    """First violated condition of the Katetov inequalities, or None.

    Negative values are reported first, then pairs in lexicographic order,
    the Lipschitz side before the sum side.
    """
    values = [as_rational(v) for v in values]
    if len(values) != space.n:
        return LengthMismatch(space.n, len(values))
    for x, v in enumerate(values):
        if v < 0:
            return NegativeValue(x)
    n = space.n
    if n < 2:
        return None
    _, d, f = _scaled_pair(space, values)
    lipschitz = np.asarray(np.abs(f[:, np.newaxis] - f[np.newaxis, :]) > d, dtype=bool)
    summed = np.asarray(d > f[:, np.newaxis] + f[np.newaxis, :], dtype=bool)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    hits = np.argwhere((lipschitz | summed) & upper)
    if not len(hits):
        return None
    x, y = (int(v) for v in hits[0])
    if lipschitz[x, y]:
        return LipschitzViolation(x, y)
    return SumViolation(x, y)


def _lift(error: MetricError, subset: Sequence[int]) -> MetricError:
    """Translate subspace indices in an error back to the ambient space."""
    if isinstance(error, (LipschitzViolation, SumViolation)):
        return type(error)(subset[error.x], subset[error.y])
    if isinstance(error, NegativeValue):
        return NegativeValue(subset[error.x])
    return error


def katetov_check(space: FiniteMetricSpace, values: Sequence[RationalLike],
                  support: Optional[Sequence[int]] = None) -> KatetovMap:
    """Return the map if it is Katetov (and controlled by support, if given)."""
    error = katetov_violation(space, values)
    if error is not None:
        raise error
    f = KatetovMap(space, tuple(values), tuple(support) if support is not None else None)
    if support is not None:
        if not support:
            raise EmptySubset()
        denom, d, fv = _scaled_pair(space, f.values)
        k = _extend_scaled(d, support, fv[list(support)])
        mismatch = np.flatnonzero(np.asarray(k != fv, dtype=bool))
        if len(mismatch):
            raise SupportMismatch(int(mismatch[0]))
    return f


def katetov_extend(space: FiniteMetricSpace, subset: Sequence[int], f: MapLike) -> KatetovMap:
    """Greatest 1-Lipschitz extension of f from subset to the whole space.

    f is given on subset (values aligned with subset, or a KatetovMap on the
    induced subspace). The result agrees with f on subset, is Katetov, and
    dominates every Katetov map that agrees with f there.
    """
    subset = [int(s) for s in subset]
    if not subset:
        raise EmptySubset()
    values = map_values(f)
    if len(values) != len(subset):
        raise LengthMismatch(len(subset), len(values))
    error = katetov_violation(space.subspace(subset), values)
    if error is not None:
        raise _lift(error, subset)
    denom, d, fv = _scaled_pair(space, values)
    k = _extend_scaled(d, subset, fv)
    return KatetovMap(space, tuple(Fraction(int(v), denom) for v in k), tuple(subset))


def kuratowski(space: FiniteMetricSpace, x: int) -> KatetovMap:
    """f_x = d(x, .), supported on {x}."""
    return KatetovMap(space, space.row(x), (x,))


def sup_distance(f: KatetovMap, g: KatetovMap) -> Fraction:
    if f.base is not g.base and f.base != g.base:
        raise BaseMismatch()
    return max((abs(a - b) for a, b in zip(f.values, g.values)), default=Fraction(0))


@dataclass(frozen=True)
class FeasibleInterval:
    """Values a Katetov map can take at point, given a partial assignment.

    upper is None when nothing bounds the value from above.
    """
    point: int
    lower: Fraction
    upper: Optional[Fraction]

    def contains(self, value: RationalLike) -> bool:
        v = as_rational(value)
        return self.lower <= v and (self.upper is None or v <= self.upper)

    def is_forced(self) -> bool:
        return self.upper is not None and self.lower == self.upper

    def report_line(self) -> str:
        upper = 'inf' if self.upper is None else str(self.upper)
        return f"interval {self.point} {self.lower} {upper}"


def feasible_interval(space: FiniteMetricSpace, subset: Sequence[int],
                      values: Sequence[RationalLike], x: int) -> FeasibleInterval:
    """Exact range of g(x) over Katetov maps g extending the assignment on subset."""
    values = [as_rational(v) for v in values]
    if len(values) != len(subset):
        raise LengthMismatch(len(subset), len(values))
    if not subset:
        return FeasibleInterval(x, Fraction(0), None)
    lower = max([Fraction(0)] + [abs(v - space.d(x, z)) for z, v in zip(subset, values)])
    upper = min(v + space.d(x, z) for z, v in zip(subset, values))
    if lower > upper:
        raise InfeasiblePartial(x, lower, upper)
    return FeasibleInterval(x, lower, upper)


class GridEnumeration:
    """Grid-valued Katetov maps on small supports, completed by Katetov extension.

    Supports are visited by size, then in lexicographic order; values on a
    support run through the sorted grid in product order.
    """

    def __init__(self, space: FiniteMetricSpace, grid: Sequence[RationalLike], max_support: int,
                 points: Optional[Sequence[int]] = None, extra: Sequence[Fraction] = ()):
        self.space = space
        self.grid = sorted(set(as_rational(g) for g in grid))
        if any(g < 0 for g in self.grid):
            raise ValueError("Grid values must be nonnegative")
        if max_support < 1:
            raise ValueError(f"max_support must be at least 1, got {max_support}")
        self.max_support = max_support
        self.points = tuple(range(space.n)) if points is None else tuple(points)
        self.denom = lcm(space.denom, common_denominator(self.grid, extra))
        self.distances = space.scaled(self.denom)
        self.grid_scaled = [int(v) for v in scale_values(self.grid, self.denom)]

    def supports(self) -> Iterator[Tuple[int, ...]]:
        for size in range(1, min(self.max_support, len(self.points)) + 1):
            yield from combinations(self.points, size)

    def seeds(self, support: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
        """Scaled grid assignments on support that are Katetov there."""
        d = self.distances
        pairs = [(a, b, int(d[support[a], support[b]]))
                 for a in range(len(support)) for b in range(a + 1, len(support))]
        for seed in product(self.grid_scaled, repeat=len(support)):
            if all(abs(seed[a] - seed[b]) <= dist <= seed[a] + seed[b] for a, b, dist in pairs):
                yield seed

    def extend(self, support: Tuple[int, ...], seed: Tuple[int, ...]) -> np.ndarray:
        f = np.array(seed, dtype=self.distances.dtype)
        return _extend_scaled(self.distances, support, f)

    def __iter__(self) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...], np.ndarray]]:
        for support in self.supports():
            for seed in self.seeds(support):
                yield support, seed, self.extend(support, seed)

    def to_map(self, support: Tuple[int, ...], vector: np.ndarray) -> KatetovMap:
        return KatetovMap(self.space, tuple(Fraction(int(v), self.denom) for v in vector), support)


def iter_grid_maps(space: FiniteMetricSpace, grid: Sequence[RationalLike], max_support: int,
                   values_on_grid: bool = False) -> Iterator[KatetovMap]:
    """Lazy, deduplicated form of enumerate_katetov."""
    enumeration = GridEnumeration(space, grid, max_support)
    on_grid = set(enumeration.grid_scaled)
    seen = set()
    for support, _, vector in enumeration:
        key = tuple(int(v) for v in vector)
        if key in seen:
            continue
        seen.add(key)
        if values_on_grid and not all(v in on_grid for v in key):
            continue
        yield enumeration.to_map(support, vector)


def enumerate_katetov(space: FiniteMetricSpace, grid: Sequence[RationalLike], max_support: int,
                      values_on_grid: bool = False) -> List[KatetovMap]:
    """k(f0) for every grid-valued Katetov f0 on a support of size <= max_support.

    With values_on_grid only maps whose every value lies on the grid are kept.
    """
    maps = list(iter_grid_maps(space, grid, max_support, values_on_grid))
    logger.info(f"Enumerated {len(maps)} Katetov maps on {space.n} points")
    return maps


def _saturation_excess(space: FiniteMetricSpace, f: KatetovMap,
                       K: Sequence[int]) -> Tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """Per point: how far a map agreeing with f on K can rise above and fall below f."""
    if not K:
        raise EmptySubset()
    K = list(K)
    denom, d, fv = _scaled_pair(space, f.values)
    upper = _extend_scaled(d, K, fv[K])
    lower = np.abs(fv[K][np.newaxis, :] - d[:, K]).max(axis=1)
    lower = np.maximum(lower, 0)
    return denom, upper - fv, fv - lower, lower


def saturation_radius(space: FiniteMetricSpace, f: KatetovMap, K: Sequence[int]) -> Fraction:
    """max of sup_distance(f, g) over Katetov g agreeing with f on K."""
    denom, rise, fall, _ = _saturation_excess(space, f, K)
    outside = np.ones(space.n, dtype=bool)
    outside[list(K)] = False
    if not outside.any():
        return Fraction(0)
    worst = max(int(rise[outside].max()), int(fall[outside].max()), 0)
    return Fraction(worst, denom)


@dataclass(frozen=True)
class SaturationWitness:
    subset: Tuple[int, ...]
    radius: Fraction
    exhaustive: bool

    def report_line(self) -> str:
        kind = 'exhaustive' if self.exhaustive else 'greedy'
        return f"witness {' '.join(map(str, self.subset))} radius {self.radius} {kind}"


def min_saturation_witness(space: FiniteMetricSpace, f: KatetovMap, eps: RationalLike,
                           exhaustive_limit: int = 12) -> SaturationWitness:
    """Smallest K (lexicographic among equals) pinning f within eps.

    Spaces above exhaustive_limit points use a greedy search whose answer is
    flagged as possibly not minimal.
    """
    eps = as_rational(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n = space.n
    if n <= exhaustive_limit:
        for size in range(1, n + 1):
            for K in combinations(range(n), size):
                radius = saturation_radius(space, f, K)
                if radius <= eps:
                    return SaturationWitness(K, radius, True)
        raise NotFound()
    chosen: List[int] = [0]
    radius = saturation_radius(space, f, chosen)
    while radius > eps:
        best = None
        for x in range(n):
            if x in chosen:
                continue
            candidate = saturation_radius(space, f, sorted(chosen + [x]))
            if best is None or candidate < best[0]:
                best = (candidate, x)
        chosen = sorted(chosen + [best[1]])
        radius = best[0]
    logger.info(f"Greedy saturation witness of size {len(chosen)} on {n} points")
    return SaturationWitness(tuple(chosen), radius, False)


@dataclass(frozen=True)
class DropWitness:
    """A Katetov map agreeing with f on K that moves f by more than eps at point."""
    point: int
    side: str
    g: KatetovMap


def saturation_drop_witness(space: FiniteMetricSpace, f: KatetovMap, K: Sequence[int],
                            eps: RationalLike) -> Optional[DropWitness]:
    """Witness that K does not pin f within eps, or None when it does.

    Points where f can fall by more than eps are preferred (side 'lower');
    only if none exists is a rise above f reported (side 'upper').
    """
    eps = as_rational(eps)
    K = [int(z) for z in K]
    denom, rise, fall, lower = _saturation_excess(space, f, K)
    scaled_eps = eps * denom
    candidates = [x for x in range(space.n) if x not in K]
    falls = [x for x in candidates if fall[x] > scaled_eps]
    if falls:
        x = max(falls, key=lambda p: (int(fall[p]), -p))
        values = [f(z) for z in K] + [Fraction(int(lower[x]), denom)]
        return DropWitness(x, 'lower', katetov_extend(space, K + [x], values))
    rises = [x for x in candidates if rise[x] > scaled_eps]
    if rises:
        x = max(rises, key=lambda p: (int(rise[p]), -p))
        return DropWitness(x, 'upper', katetov_extend(space, K, [f(z) for z in K]))
    return None


@dataclass(frozen=True)
class LoweringStep:
    point: int
    g: KatetovMap


def lowering_step(space: FiniteMetricSpace, points: Sequence[int], values: Sequence[RationalLike],
                  fprime: KatetovMap, K0: Sequence[int], eps: RationalLike) -> LoweringStep:
    """Lower fprime by eps/2 at the least admissible point outside K0.

    The returned map keeps values on points and fprime on K0.
    """
    eps = as_rational(eps)
    values = [as_rational(v) for v in values]
    for x, v in zip(points, values):
        if fprime(x) != v:
            raise HypothesisViolated('values')
    base = sorted(set(K0) | set(points))
    for y in range(space.n):
        if y in base:
            continue
        lowered = fprime(y) - eps / 2
        if lowered < 0:
            continue
        trial = base + [y]
        trial_values = [fprime(z) for z in base] + [lowered]
        if katetov_violation(space.subspace(trial), trial_values) is None:
            return LoweringStep(y, katetov_extend(space, trial, trial_values))
    raise NotFound()


def extension_profile(space: FiniteMetricSpace, f: KatetovMap, order: Sequence[int]) -> List[Fraction]:
    """sup_distance(f, k(f restricted to order[:i+1])) for every prefix."""
    denom, d, fv = _scaled_pair(space, f.values)
    current = None
    profile = []
    for s in order:
        column = d[:, s] + fv[s]
        current = column if current is None else np.minimum(current, column)
        profile.append(Fraction(int((current - fv).max()), denom))
    return profile


def separated_family(space: FiniteMetricSpace, points: Sequence[int], M: RationalLike,
                     eps: RationalLike, subsets: Sequence[Sequence[int]]) -> List[KatetovMap]:
    """Maps equal to M off A and M + eps on A, over the subspace on points.

    Requires eps <= d(x, y) <= M for distinct points; distinct A then give
    maps at sup-distance exactly eps.
    """
    M = as_rational(M)
    eps = as_rational(eps)
    points = list(points)
    for a, b in combinations(points, 2):
        if not eps <= space.d(a, b) <= M:
            raise HypothesisViolated('spacing')
    sub = space.subspace(points)
    family = []
    for A in subsets:
        members = set(A)
        family.append(KatetovMap(sub, tuple(M + eps if p in members else M for p in points)))
    return family
