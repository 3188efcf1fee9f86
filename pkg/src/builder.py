"""Katetov tower: finite approximations of the rational Urysohn space.

Level i+1 adds one point per grid-valued Katetov map over level i, with the
sup-metric between new points. Growth is cut by grid, support size and a
point budget.
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import BaseMismatch, BudgetExceeded, DuplicatePoint
from src.katetov import GridEnumeration, KatetovMap, katetov_check, katetov_extend
from src.ratmetric import (
    FiniteMetricSpace,
    RationalLike,
    as_rational,
    check_space,
    common_denominator,
    fit_dtype,
)

logger = logging.getLogger(__name__)

# Levels above this size skip the cubic triangle check
VALIDATE_LIMIT = 300


@dataclass(frozen=True)
class TowerConfig:
    """Truncation parameters of the tower."""
    grid: Tuple[Fraction, ...]
    max_support: int
    depth: int
    max_points: int

    def __post_init__(self):
        grid = tuple(sorted(set(as_rational(g) for g in self.grid)))
        if not grid:
            raise ValueError("Grid must not be empty")
        if any(g <= 0 for g in grid):
            raise ValueError("Grid values must be positive")
        if self.max_support < 1:
            raise ValueError(f"max_support must be at least 1, got {self.max_support}")
        if self.depth < 0:
            raise ValueError(f"depth must be nonnegative, got {self.depth}")
        if self.max_points < 1:
            raise ValueError(f"max_points must be positive, got {self.max_points}")
        object.__setattr__(self, 'grid', grid)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TowerConfig':
        """Create a TowerConfig from a config mapping."""
        required_fields = ['grid', 'max_support', 'depth', 'max_points']
        for name in required_fields:
            if name not in data:
                raise ValueError(f"Missing required field: tower.{name}")
        if not isinstance(data['grid'], list):
            raise ValueError("tower.grid must be a list")
        for name in required_fields[1:]:
            if not isinstance(data[name], int) or isinstance(data[name], bool):
                raise ValueError(f"tower.{name} must be an integer, got {data[name]!r}")
        try:
            grid = tuple(as_rational(g) for g in data['grid'])
        except (TypeError, ValueError) as e:
            raise ValueError(f"Invalid tower.grid value: {e}")
        return cls(
            grid=grid,
            max_support=data['max_support'],
            depth=data['depth'],
            max_points=data['max_points'],
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'grid': [str(g) for g in self.grid],
            'max_support': self.max_support,
            'depth': self.depth,
            'max_points': self.max_points,
        }


@dataclass(frozen=True)
class Provenance:
    """Why a point exists: the level it joined and the grid map it realizes."""
    index: int
    level: int
    base: int
    support: Tuple[int, ...]
    values: Tuple[Fraction, ...]

    def report_line(self) -> str:
        support = ' '.join(str(s) for s in self.support)
        values = ' '.join(str(v) for v in self.values)
        return f"p {self.index} level {self.level} base {self.base} support {support} values {values}"


@dataclass(frozen=True)
class TowerApprox:
    """Nested spaces X0 = seed, X1, ... each the top-left block of the next."""
    levels: Tuple[FiniteMetricSpace, ...]
    provenance: Tuple[Provenance, ...] = ()
    truncated: bool = False

    @classmethod
    def from_seed(cls, seed: FiniteMetricSpace) -> 'TowerApprox':
        return cls((seed,))

    @classmethod
    def from_top(cls, top: FiniteMetricSpace, provenance: Sequence[Provenance],
                 truncated: bool = False) -> 'TowerApprox':
        """Rebuild the level chain of a tower from its top level and provenance."""
        seed_size = top.n - len(provenance)
        depth = max((p.level for p in provenance), default=0)
        sizes = [seed_size + sum(1 for p in provenance if p.level <= i) for i in range(depth + 1)]
        levels = tuple(top.subspace(range(size)) for size in sizes)
        return cls(levels, tuple(provenance), truncated)

    @property
    def top(self) -> FiniteMetricSpace:
        return self.levels[-1]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def complete_depth(self) -> int:
        """Index of the last level built without hitting the budget."""
        return max(self.depth - 1, 0) if self.truncated else self.depth

    def witness_level(self) -> int:
        """Index of the level whose maps the last complete level realizes."""
        return max(self.complete_depth - 1, 0)

    def budget_error(self) -> Optional[BudgetExceeded]:
        return BudgetExceeded(self.top.n) if self.truncated else None


def _append_points(space: FiniteMetricSpace, denom: int, vectors: List[np.ndarray]) -> FiniteMetricSpace:
    """Add one point per distance vector; new points are at sup-distance from each other."""
    if not vectors:
        return space
    d = space.scaled(denom)
    k = fit_dtype(np.vstack(vectors))
    m = k.shape[0]
    between = np.zeros((m, m), dtype=k.dtype)
    for i in range(m):
        between[i] = np.abs(k - k[i]).max(axis=1)
    numer = np.block([[d, k.T], [k, between]])
    labels = space.labels + tuple(str(space.n + i) for i in range(m))
    return FiniteMetricSpace(numer, denom, labels)


def _maybe_validate(space: FiniteMetricSpace) -> None:
    if space.n <= VALIDATE_LIMIT:
        check_space(space)
    else:
        logger.info(f"Skipping triangle check on {space.n} points")


def realize(space: FiniteMetricSpace, f: KatetovMap) -> FiniteMetricSpace:
    """Space plus one new point at distance f(x) from every x."""
    katetov_check(space, f.values)
    zeros = f.zero_points()
    if zeros:
        raise DuplicatePoint(zeros[0])
    denom = lcm(space.denom, common_denominator(f.values))
    return _append_points(space, denom, [f.scaled(denom)])


def build_tower(seed: FiniteMetricSpace, cfg: TowerConfig) -> TowerApprox:
    """Grow levels from seed until depth or the point budget is reached."""
    levels = [seed]
    provenance: List[Provenance] = []
    truncated = False
    for level in range(1, cfg.depth + 1):
        current = levels[-1]
        enumeration = GridEnumeration(current, cfg.grid, cfg.max_support)
        seen = set()
        vectors: List[np.ndarray] = []
        for support, seed_values, vector in enumeration:
            if current.n + len(vectors) >= cfg.max_points:
                truncated = True
                break
            # a zero entry means the map is the Kuratowski map of an existing point
            if (vector == 0).any():
                continue
            key = tuple(int(v) for v in vector)
            if key in seen:
                continue
            seen.add(key)
            provenance.append(Provenance(
                index=current.n + len(vectors),
                level=level,
                base=current.n,
                support=support,
                values=tuple(Fraction(v, enumeration.denom) for v in seed_values),
            ))
            vectors.append(vector)
        grown = _append_points(current, enumeration.denom, vectors)
        _maybe_validate(grown)
        levels.append(grown)
        logger.info(f"Level {level}: {current.n} -> {grown.n} points")
        if truncated:
            break
    if truncated:
        logger.warning(f"Point budget {cfg.max_points} reached at level {len(levels) - 1}")
    return TowerApprox(tuple(levels), tuple(provenance), truncated)


@dataclass(frozen=True)
class AuditFailure:
    support: Tuple[int, ...]
    values: Tuple[Fraction, ...]

    def report_line(self) -> str:
        support = ' '.join(str(s) for s in self.support)
        values = ' '.join(str(v) for v in self.values)
        return f"fail support {support} values {values}"


@dataclass(frozen=True)
class AuditReport:
    checked: int
    failures: Tuple[AuditFailure, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.failures

    def report_lines(self) -> List[str]:
        head = f"audit checked {self.checked} realized {self.checked - len(self.failures)} failures {len(self.failures)}"
        return [head] + [f.report_line() for f in self.failures]


def _audit_chunk(enumeration: GridEnumeration, supports: List[Tuple[int, ...]],
                 tolerance: int) -> Tuple[int, List[AuditFailure]]:
    checked = 0
    failures = []
    d = enumeration.distances
    for support in supports:
        realized = d[:, list(support)]
        for seed in enumeration.seeds(support):
            checked += 1
            target = np.array(seed, dtype=realized.dtype)
            close = np.asarray(np.abs(realized - target) <= tolerance, dtype=bool)
            if not close.all(axis=1).any():
                values = tuple(Fraction(v, enumeration.denom) for v in seed)
                failures.append(AuditFailure(support, values))
    return checked, failures


def injectivity_audit(space: FiniteMetricSpace, grid: Sequence[RationalLike], k: int,
                      eps: RationalLike = 0, subset: Optional[Sequence[int]] = None,
                      workers: int = 4, chunk_size: int = 64) -> AuditReport:
    """Check that every grid Katetov map on at most k points is realized within eps.

    Supports range over subsets of subset (default all points); a map f on S
    is realized when some point z has |d(z, s) - f(s)| <= eps for all s in S.
    """
    eps = as_rational(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    enumeration = GridEnumeration(space, grid, k, points=subset, extra=(eps,))
    tolerance = int(eps * enumeration.denom)
    supports = list(enumeration.supports())
    chunks = [supports[i:i + chunk_size] for i in range(0, len(supports), chunk_size)]

    results: Dict[int, Tuple[int, List[AuditFailure]]] = {}
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as executor:
        future_to_chunk = {executor.submit(_audit_chunk, enumeration, chunk, tolerance): index
                           for index, chunk in enumerate(chunks)}
        for future in as_completed(future_to_chunk):
            results[future_to_chunk[future]] = future.result()

    checked = sum(results[i][0] for i in range(len(chunks)))
    failures = [failure for i in range(len(chunks)) for failure in results[i][1]]
    logger.info(f"Audit: {checked} maps, {len(failures)} unrealized")
    return AuditReport(checked, tuple(failures))


def audit_tower(approx: TowerApprox, grid: Sequence[RationalLike], k: int,
                eps: RationalLike = 0, workers: int = 4) -> AuditReport:
    """Audit the last complete level against maps over the level below it.

    A partial top level only realizes a prefix of the enumeration, so it is
    never the audited space.
    """
    witness = approx.levels[approx.witness_level()]
    space = approx.levels[approx.complete_depth]
    return injectivity_audit(space, grid, k, eps, subset=range(witness.n), workers=workers)


def _is_prefix(base: FiniteMetricSpace, top: FiniteMetricSpace) -> bool:
    if base.n > top.n:
        return False
    denom = lcm(base.denom, top.denom)
    return np.array_equal(top.scaled(denom)[:base.n, :base.n], base.scaled(denom))


def extend_on_demand(approx: TowerApprox, f: KatetovMap) -> TowerApprox:
    """Realize k(f) on the top level; f lives on any level of the tower."""
    top = approx.top
    base = f.base
    if not _is_prefix(base, top):
        raise BaseMismatch()
    katetov_check(base, f.values)
    denom = lcm(top.denom, common_denominator(f.values))
    d = top.scaled(denom)[:, :base.n]
    witnesses = np.flatnonzero(np.asarray(np.all(d == f.scaled(denom), axis=1), dtype=bool))
    if len(witnesses):
        raise DuplicatePoint(int(witnesses[0]))
    extension = katetov_extend(top, range(base.n), f.values)
    grown = realize(top, extension)

    level = max(approx.depth, 1)
    support = f.support if f.support is not None else tuple(range(base.n))
    record = Provenance(top.n, level, base.n, support, tuple(f(s) for s in support))
    if approx.depth == 0:
        levels = approx.levels + (grown,)
    else:
        levels = approx.levels[:-1] + (grown,)
    logger.info(f"Added point {top.n} on demand at level {level}")
    return TowerApprox(levels, approx.provenance + (record,), approx.truncated)
