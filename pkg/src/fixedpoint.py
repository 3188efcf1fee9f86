"""Isometries with a prescribed fixed set.

A system is a space with a self-isometry phi fixing a base set X0. One level
of the construction glues, for every grid map f, a phi-orbit of copies of the
point realizing f, then extends phi by shifting each orbit.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.amalgam import check_self_isometry, multi_amalgamate, orbit_amalgam
from src.components.permutation import Permutation
from src.errors import HypothesisViolated, NotFound
from src.katetov import KatetovMap, MapLike, enumerate_katetov, katetov_check, map_values
from src.ratmetric import FiniteMetricSpace, PartialIsometry, RationalLike, as_rational

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IsometrySystem:
    """(X, phi, X0) with phi a self-isometry fixing X0 pointwise."""
    space: FiniteMetricSpace
    phi: Permutation
    base: Tuple[int, ...] = ()

    @classmethod
    def checked(cls, space: FiniteMetricSpace, phi: Permutation, base: Sequence[int]) -> 'IsometrySystem':
        check_self_isometry(space, phi)
        base = tuple(sorted(set(base)))
        for b in base:
            if phi(b) != b:
                raise HypothesisViolated('base-not-fixed')
        return cls(space, phi, base)

    def isometry_defect(self) -> Fraction:
        """max |d(phi u, phi v) - d(u, v)|; zero iff phi is an isometry."""
        d = self.space.numer
        images = list(self.phi.images)
        moved = d[np.ix_(images, images)]
        return Fraction(int(np.abs(moved - d).max()), self.space.denom) if self.space.n else Fraction(0)


def orbit_diameter(sys: IsometrySystem, x: int) -> Fraction:
    """Diameter of the phi-orbit of x."""
    orbit = list(sys.phi.cycle_of(x))
    return Fraction(int(sys.space.numer[np.ix_(orbit, orbit)].max()), sys.space.denom)


def fixed_set(sys: IsometrySystem) -> Tuple[int, ...]:
    return sys.phi.fixed_points()


@dataclass(frozen=True)
class MigrationMap:
    """The map on orbit(z) + points, and which case each point fell in."""
    g: KatetovMap
    orbit: Tuple[int, ...]
    points: Tuple[int, ...]
    cases: Tuple[str, ...]
    rho: Fraction


def migration_map(sys: IsometrySystem, z: int, points: Sequence[int], f: MapLike) -> MigrationMap:
    """Katetov map at rho/2 from the whole orbit of z that keeps f where it can.

    Points x_i split by d(z, x_i) against f(x_i) -/+ rho/2: below (case A) the
    value becomes d(z, x_i) + rho/2, above (case B) d(z, x_i) - rho/2, and in
    between (case C) f(x_i) is kept.
    """
    points = tuple(int(p) for p in points)
    values = map_values(f)
    rho = orbit_diameter(sys, z)
    if rho == 0:
        raise HypothesisViolated('orbit-fixed')
    if values and min(values) < 2 * rho:
        raise HypothesisViolated('small-values')
    if any(sys.phi(p) != p for p in points):
        raise HypothesisViolated('not-fixed')

    orbit = sys.phi.cycle_of(z)
    half = rho / 2
    cases = []
    new_values = []
    for p, v in zip(points, values):
        distance = sys.space.d(z, p)
        if distance < v - half:
            cases.append('A')
            new_values.append(distance + half)
        elif distance > v + half:
            cases.append('B')
            new_values.append(distance - half)
        else:
            cases.append('C')
            new_values.append(v)
    indices = orbit + points
    g = katetov_check(sys.space.subspace(indices), [half] * len(orbit) + new_values)
    return MigrationMap(g, orbit, points, tuple(cases), rho)


@dataclass(frozen=True)
class StarReport:
    """Result of the finite property (*) check.

    slack is the least eps that would make the check pass; worst is the
    (x1, x2, p) attaining it.
    """
    passed: bool
    eps: Fraction
    slack: Fraction
    powers: Tuple[int, ...]
    worst: Optional[Tuple[int, int, int]] = None

    def report_line(self) -> str:
        status = 'pass' if self.passed else 'fail'
        line = f"star {status} powers {len(self.powers)} slack {self.slack}"
        if self.worst is not None and self.slack > 0:
            line += f" worst {self.worst[0]} {self.worst[1]} {self.worst[2]}"
        return line


def symmetric_powers(order: int) -> List[int]:
    """Representatives of Z/order in (-order/2, order/2]."""
    return list(range(-((order - 1) // 2), order // 2 + 1))


def property_star_check(sys: IsometrySystem, eps: RationalLike = 0, exclude: int = 1,
                        points: Optional[Sequence[int]] = None) -> StarReport:
    """Check d(x1, phi^p x2) >= d(x1, X0) + d(x2, X0) - eps.

    p runs over the cyclic group generated by phi, skipping |p| <= exclude;
    x1, x2 run over points (default all).
    """
    eps = as_rational(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if not sys.base:
        raise HypothesisViolated('empty-base')
    space = sys.space
    chosen = list(range(space.n)) if points is None else list(points)
    powers = tuple(p for p in symmetric_powers(sys.phi.order()) if abs(p) > exclude)
    d = space.numer
    to_base = d[:, list(sys.base)].min(axis=1)
    need = to_base[chosen][:, np.newaxis] + to_base[chosen][np.newaxis, :]
    worst_gap = 0
    worst = None
    for p in powers:
        moved = list(sys.phi.power(p).images)
        gap = need - d[np.ix_(chosen, [moved[x] for x in chosen])]
        position = np.unravel_index(int(np.argmax(gap)), gap.shape)
        value = int(gap[position])
        if worst is None or value > worst_gap:
            worst_gap = value
            worst = (chosen[int(position[0])], chosen[int(position[1])], p)
    slack = Fraction(max(worst_gap, 0), space.denom)
    if not powers:
        logger.info("No powers left after exclusion; property (*) holds vacuously")
    return StarReport(slack <= eps, eps, slack, powers, worst)


@dataclass(frozen=True)
class LevelResult:
    """One fixed-set level: the new system and its diagnostics.

    wrap_defect measures how far the cyclic wrap at the horizon is from an
    isometry; it is zero when the order of phi divides 2 * horizon + 1.
    """
    system: IsometrySystem
    wrap_defect: Fraction
    star: Optional[StarReport]
    blocks: Tuple[Tuple[int, ...], ...] = field(default_factory=tuple)
    maps: Tuple[KatetovMap, ...] = field(default_factory=tuple)
    truncated: bool = False

    def report_lines(self) -> List[str]:
        lines = [f"level points {self.system.space.n} blocks {len(self.blocks)} wrap {self.wrap_defect}"]
        lines.append(f"fixed {' '.join(map(str, fixed_set(self.system)))}".rstrip())
        if self.star is not None:
            lines.append(self.star.report_line())
        if self.truncated:
            lines.append("truncated")
        return lines


def fixed_set_level(sys: IsometrySystem, grid: Sequence[RationalLike], max_support: int, horizon: int,
                    max_points: Optional[int] = None, exclude: int = 1) -> LevelResult:
    """Glue an orbit amalgam for every grid map and extend phi by the cyclic shift."""
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    if not property_star_check(sys, 0, exclude).passed:
        raise HypothesisViolated('property-star')
    space = sys.space
    maps = enumerate_katetov(space, grid, max_support) if grid else []
    # maps with a zero are Kuratowski maps of points already present
    maps = [f for f in maps if not f.zero_points()]
    if not maps:
        return LevelResult(sys, Fraction(0), None)

    block_size = 2 * horizon + 1
    truncated = False
    if max_points is not None and space.n + block_size * len(maps) > max_points:
        keep = max((max_points - space.n) // block_size, 0)
        logger.warning(f"Point budget {max_points}: keeping {keep} of {len(maps)} orbit blocks")
        maps = maps[:keep]
        truncated = True
        if not maps:
            return LevelResult(sys, Fraction(0), None, truncated=True)

    orbits = [orbit_amalgam(space, sys.phi, f, horizon) for f in maps]
    merged = multi_amalgamate(space, [o.result for o in orbits])
    if merged.merges or any(o.merges for o in orbits):
        raise HypothesisViolated('collision')

    images = list(range(merged.space.n))
    for x in range(space.n):
        images[x] = sys.phi(x)
    blocks = []
    for o, placement in zip(orbits, merged.placements):
        block = tuple(placement[y] for y in o.orbit)
        for k, y in enumerate(block):
            images[y] = block[(k + 1) % block_size]
        blocks.append(block)
    phi = Permutation(tuple(images))
    system = IsometrySystem(merged.space, phi, sys.base)
    defect = system.isometry_defect()
    if defect:
        logger.warning(f"Cyclic wrap at horizon {horizon} moves distances by up to {defect}")
    star = property_star_check(system, 0, exclude)
    logger.info(f"Fixed-set level: {space.n} -> {merged.space.n} points, {len(blocks)} orbits")
    return LevelResult(system, defect, star, tuple(blocks), tuple(maps), truncated)


def find_conjugacy(a: IsometrySystem, b: IsometrySystem) -> PartialIsometry:
    """Least isometry psi from a.space onto b.space with psi after phi_a = phi_b after psi."""
    if a.space.n != b.space.n:
        raise NotFound()
    denom = lcm(a.space.denom, b.space.denom)
    da = a.space.scaled(denom)
    db = b.space.scaled(denom)
    if not np.array_equal(np.sort(da, axis=None), np.sort(db, axis=None)):
        raise NotFound()
    if sorted(len(c) for c in a.phi.cycles()) != sorted(len(c) for c in b.phi.cycles()):
        raise NotFound()

    rows_a = [sorted(da[i].tolist()) for i in range(a.space.n)]
    rows_b = [sorted(db[i].tolist()) for i in range(b.space.n)]
    cycles = a.phi.cycles()
    psi: dict = {}
    used = set()

    def assign(index: int) -> bool:
        if index == len(cycles):
            return True
        cycle = cycles[index]
        for y in range(b.space.n):
            if y in used or len(b.phi.cycle_of(y)) != len(cycle):
                continue
            targets = b.phi.cycle_of(y)
            trial = list(zip(cycle, targets))
            if any(rows_a[u] != rows_b[v] for u, v in trial):
                continue
            fits = all(da[u, u2] == db[v, v2] for u, v in trial for u2, v2 in list(psi.items()) + trial)
            if not fits:
                continue
            psi.update(trial)
            used.update(targets)
            if assign(index + 1):
                return True
            for u, v in trial:
                del psi[u]
                used.discard(v)
        return False

    if not assign(0):
        raise NotFound()
    return PartialIsometry(a.space, b.space, tuple(sorted(psi.items())))
