"""Back-and-forth extension, distance traces and uniqueness sets."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.builder import realize
from src.errors import AlphaTooLarge, HypothesisViolated, MarginViolated, NotNice
from src.katetov import KatetovMap, MapLike, map_values, katetov_check, katetov_extend
from src.ratmetric import FiniteMetricSpace, PartialIsometry, RationalLike, as_rational

logger = logging.getLogger(__name__)

COMPLETED = 'Completed'
STUCK = 'Stuck'


def distance_trace(space: FiniteMetricSpace, subset: Sequence[int], z: int) -> KatetovMap:
    """Phi(z): the map s -> d(z, s) on subset."""
    subset = list(subset)
    return KatetovMap(space.subspace(subset), tuple(space.d(z, s) for s in subset))


@dataclass(frozen=True)
class ExtensionStep:
    direction: str
    source: int
    target: int
    forced: KatetovMap


@dataclass(frozen=True)
class ExtensionTrace:
    """Steps of a back-and-forth run and how it ended.

    On Stuck, forced is the map no unmatched point realizes and forced_points
    are the ambient points it is defined on.
    """
    steps: Tuple[ExtensionStep, ...]
    outcome: str
    isometry: PartialIsometry
    stuck_step: Optional[int] = None
    stuck_point: Optional[int] = None
    forced: Optional[KatetovMap] = None
    forced_points: Tuple[int, ...] = ()

    @property
    def completed(self) -> bool:
        return self.outcome == COMPLETED

    def report_lines(self) -> List[str]:
        lines = []
        for step in self.steps:
            values = [str(v) for v in step.forced.values]
            lines.append(' '.join(['step', step.direction, str(step.source), str(step.target), 'forced'] + values))
        if self.completed:
            lines.insert(0, f"{COMPLETED} steps {len(self.steps)}")
        else:
            lines.insert(0, f"{STUCK} step {self.stuck_step} point {self.stuck_point}")
            lines.append(' '.join(['forced', 'points'] + [str(p) for p in self.forced_points]
                                  + ['values'] + [str(v) for v in self.forced.values]))
        return lines


def _find_match(space: FiniteMetricSpace, anchors: Sequence[int], wanted: np.ndarray,
                excluded: set) -> Optional[int]:
    """Least point outside excluded whose distances to anchors equal wanted."""
    if anchors:
        mask = np.all(space.numer[:, list(anchors)] == wanted, axis=1)
    else:
        mask = np.ones(space.n, dtype=bool)
    for y in np.flatnonzero(np.asarray(mask, dtype=bool)):
        if int(y) not in excluded:
            return int(y)
    return None


def back_and_forth(ambient: FiniteMetricSpace, p: PartialIsometry, targets: Sequence[int],
                   back_targets: Sequence[int] = ()) -> ExtensionTrace:
    """Extend p inside ambient until targets lie in its domain.

    Forth steps add a target x and map it to the least unmatched y with
    d(y, p(u)) = d(x, u) for every matched u; back steps do the same from the
    range side for back_targets. The two kinds alternate.
    """
    pairs = list(PartialIsometry.checked(ambient, ambient, p.pairs).pairs)
    forth = [x for x in sorted(set(targets))]
    back = [y for y in sorted(set(back_targets))]
    steps: List[ExtensionStep] = []

    def stuck(point: int, points: List[int], values: np.ndarray) -> ExtensionTrace:
        forced = KatetovMap(ambient.subspace(points), tuple(Fraction(int(v), ambient.denom) for v in values))
        logger.info(f"Back-and-forth stuck at point {point} after {len(steps)} steps")
        return ExtensionTrace(tuple(steps), STUCK, PartialIsometry(ambient, ambient, tuple(pairs)),
                              len(steps), point, forced, tuple(points))

    while forth or back:
        domain = [u for u, _ in pairs]
        image = [v for _, v in pairs]
        matched = set(domain) | set(image)
        if forth:
            x = forth.pop(0)
            if x not in domain:
                wanted = ambient.numer[x, domain]
                y = _find_match(ambient, image, wanted, matched)
                if y is None:
                    return stuck(x, image, wanted)
                forced = KatetovMap(ambient.subspace(image), tuple(ambient.d(x, u) for u in domain))
                pairs.append((x, y))
                steps.append(ExtensionStep('forth', x, y, forced))
                PartialIsometry.checked(ambient, ambient, pairs)
                continue
        if back:
            y = back.pop(0)
            if y not in image:
                wanted = ambient.numer[y, image]
                x = _find_match(ambient, domain, wanted, matched)
                if x is None:
                    return stuck(y, domain, wanted)
                forced = KatetovMap(ambient.subspace(domain), tuple(ambient.d(y, v) for v in image))
                pairs.append((x, y))
                steps.append(ExtensionStep('back', y, x, forced))
                PartialIsometry.checked(ambient, ambient, pairs)
    return ExtensionTrace(tuple(steps), COMPLETED, PartialIsometry(ambient, ambient, tuple(pairs)))


def back_and_forth_realizing(ambient: FiniteMetricSpace, p: PartialIsometry, targets: Sequence[int],
                             back_targets: Sequence[int] = (),
                             max_insertions: int = 32) -> Tuple[FiniteMetricSpace, ExtensionTrace]:
    """Run back_and_forth, adding a witness for each forced map it gets stuck on."""
    for _ in range(max_insertions + 1):
        trace = back_and_forth(ambient, p, targets, back_targets)
        if trace.completed:
            return ambient, trace
        witness = katetov_extend(ambient, trace.forced_points, trace.forced.values)
        ambient = realize(ambient, witness)
        logger.info(f"Added witness point {ambient.n - 1} for the forced map at step {trace.stuck_step}")
        p = PartialIsometry(ambient, ambient, p.pairs)
    return ambient, trace


@dataclass(frozen=True)
class UniquenessReport:
    unique: bool
    witness: Optional[Tuple[int, int]] = None

    def report_line(self) -> str:
        if self.unique:
            return "unique true"
        return f"unique false witness {self.witness[0]} {self.witness[1]}"


def is_uniqueness_set(space: FiniteMetricSpace, A: Sequence[int]) -> UniquenessReport:
    """Whether distance traces on A tell all points apart; else the least clashing pair."""
    if not A:
        raise ValueError("A must be nonempty")
    groups: Dict[tuple, List[int]] = {}
    for x in range(space.n):
        groups.setdefault(tuple(space.numer[x, list(A)].tolist()), []).append(x)
    clashes = [(members[0], members[1]) for members in groups.values() if len(members) > 1]
    if not clashes:
        return UniquenessReport(True)
    return UniquenessReport(False, min(clashes))


def nice_violation(space: FiniteMetricSpace, values: Sequence[RationalLike]) -> Optional[Tuple[int, int]]:
    """First pair where a Katetov inequality is not strict."""
    values = [as_rational(v) for v in values]
    for i in range(space.n):
        for j in range(i + 1, space.n):
            d = space.d(i, j)
            if not (abs(values[i] - values[j]) < d and values[i] + values[j] > d):
                return (i, j)
    return None


def is_nice(space: FiniteMetricSpace, f: KatetovMap) -> bool:
    """Both Katetov inequalities hold strictly on every pair of distinct points."""
    return nice_violation(space, f.values) is None


@dataclass(frozen=True)
class SeparatingExtension:
    """g_alpha on points + [x, y]; alpha_max bounds the admissible alpha."""
    g: KatetovMap
    indices: Tuple[int, ...]
    alpha: Fraction
    alpha_max: Fraction


def separating_extension(core: FiniteMetricSpace, points: Sequence[int], x: int, y: int,
                         f: MapLike, alpha: Optional[RationalLike] = None) -> SeparatingExtension:
    """Katetov extension of a nice f, lowered by alpha at x.

    x and y have equal traces on points; the result still matches f on points
    and k(f) at y, so any point realizing it tells x and y apart.
    """
    points = [int(p) for p in points]
    if x == y:
        raise HypothesisViolated('distinct')
    if any(core.d(x, p) != core.d(y, p) for p in points):
        raise HypothesisViolated('traces')
    values = map_values(f)
    katetov_check(core.subspace(points), values)
    bad = nice_violation(core.subspace(points), values)
    if bad is not None:
        raise NotNice(points[bad[0]], points[bad[1]])

    gx = min(v + core.d(x, p) for p, v in zip(points, values))
    gy = min(v + core.d(y, p) for p, v in zip(points, values))
    dxy = core.d(x, y)
    bounds = [dxy, 2 * gx - dxy, gx]
    for p, v in zip(points, values):
        bounds.append(gx - v + core.d(x, p))
        bounds.append(gx + v - core.d(x, p))
    alpha_max = min(bounds)
    alpha = alpha_max / 2 if alpha is None else as_rational(alpha)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha > alpha_max:
        raise AlphaTooLarge(alpha, alpha_max)

    indices = tuple(points) + (x, y)
    g = katetov_check(core.subspace(indices), list(values) + [gx - alpha, gy])
    return SeparatingExtension(g, indices, alpha, alpha_max)


def separate_pair(space: FiniteMetricSpace, points: Sequence[int], values: MapLike, x: int, y: int,
                  alpha: Optional[RationalLike] = None) -> Tuple[FiniteMetricSpace, int]:
    """Realize the separating extension as a new point z; d(z, x) != d(z, y) for alpha > 0."""
    extension = separating_extension(space, points, x, y, values, alpha)
    full = katetov_extend(space, extension.indices, extension.g.values)
    return realize(space, full), space.n


def nice_sphere(space: FiniteMetricSpace, points: Sequence[int], values: Sequence[RationalLike]) -> Tuple[int, ...]:
    """Points outside points at distance f(x_i) from every x_i."""
    values = [as_rational(v) for v in values]
    return tuple(z for z in range(space.n)
                 if z not in points and all(space.d(z, p) == v for p, v in zip(points, values)))


@dataclass(frozen=True)
class UniquenessKernel:
    kernel: Tuple[int, ...]
    sphere: Tuple[int, ...]
    report: UniquenessReport

    @property
    def sphere_empty(self) -> bool:
        return not self.sphere


def uniqueness_kernel(space: FiniteMetricSpace, points: Sequence[int],
                      values: Sequence[RationalLike]) -> UniquenessKernel:
    """points together with the sphere of a nice map, and whether that is a uniqueness set."""
    sphere = nice_sphere(space, points, values)
    if not sphere:
        logger.warning("Sphere of the nice map is empty; the kernel is the points alone")
    kernel = tuple(sorted(set(points) | set(sphere)))
    return UniquenessKernel(kernel, sphere, is_uniqueness_set(space, kernel))


def epsilon_net(space: FiniteMetricSpace, subset: Sequence[int], eps: RationalLike) -> Tuple[int, ...]:
    """Greedy net: every point of subset lies within eps of a chosen point."""
    eps = as_rational(eps)
    net: List[int] = []
    for x in sorted(subset):
        if all(space.d(x, c) > eps for c in net):
            net.append(x)
    return tuple(net)


@dataclass(frozen=True)
class AvoidanceResult:
    """Extension g with g = f on targets and g >= M + eps on the net.

    certificate lists (w, net point, lower bound on d(c, w)) for every ambient
    w within eps of the net, c being any point realizing g.
    """
    g: KatetovMap
    margin: Fraction
    certificate: Tuple[Tuple[int, int, Fraction], ...]

    def report_lines(self) -> List[str]:
        lines = [f"avoid margin {self.margin} values {' '.join(str(v) for v in self.g.values)}"]
        lines.extend(f"cert {w} net {x} bound {b}" for w, x, b in self.certificate)
        return lines


def avoidance_extension(space: FiniteMetricSpace, targets: Sequence[int], values: Sequence[RationalLike],
                        net: Sequence[int], M: RationalLike, eps: RationalLike) -> AvoidanceResult:
    """Katetov extension of f on targets that stays M away from an eps-neighbourhood of net."""
    M = as_rational(M)
    eps = as_rational(eps)
    values = [as_rational(v) for v in values]
    if min(values) < eps:
        raise HypothesisViolated('min-value')
    for t in targets:
        for x in net:
            if space.d(t, x) < M:
                raise HypothesisViolated('separation')
    g = katetov_extend(space, targets, values)
    for x in net:
        if g(x) < M + eps:
            raise MarginViolated(x, g(x), M + eps)
    margin = min((g(x) - M - eps for x in net), default=Fraction(0))
    certificate = []
    for w in range(space.n):
        near = [x for x in net if space.d(w, x) <= eps]
        if near:
            x = min(near, key=lambda c: (space.d(w, c), c))
            certificate.append((w, x, g(x) - space.d(w, x)))
    return AvoidanceResult(g, margin, tuple(certificate))
