"""Metric amalgamation.

Two spaces glued along an isometric common part get the free amalgam metric:
the distance between a left point and a right point is the shortest route
through a glued point. The orbit amalgam glues a whole phi-orbit of copies of
a one-point extension onto X.
"""
import logging
from dataclasses import dataclass, field
from math import lcm
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.components.permutation import Permutation
from src.errors import InvalidGlue, NotAnIsometry
from src.katetov import KatetovMap, katetov_check
from src.ratmetric import FiniteMetricSpace, PartialIsometry, fit_dtype, isometry_defect

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Merge:
    """Two points found at distance zero and identified."""
    kind: str
    kept: int
    dropped: int

    def report_line(self) -> str:
        return f"{self.kind} {self.kept} {self.dropped}"


@dataclass(frozen=True)
class AmalgamSpec:
    left: FiniteMetricSpace
    right: FiniteMetricSpace
    glue: PartialIsometry

    def __post_init__(self):
        if not self.glue.pairs:
            raise InvalidGlue(None, None)
        bad = isometry_defect(self.left, self.right, self.glue.pairs)
        if bad is not None:
            u, u2 = bad
            raise InvalidGlue(u, self.glue.mapping().get(u2))


@dataclass(frozen=True)
class AmalgamResult:
    """The glued space and where each input point ended up."""
    space: FiniteMetricSpace
    placements: Tuple[Tuple[int, ...], ...]
    merges: Tuple[Merge, ...] = field(default_factory=tuple)


def collapse_zero_distances(numer: np.ndarray, denom: int, labels: Sequence[str],
                            kind: str) -> Tuple[FiniteMetricSpace, List[int], List[Merge]]:
    """Identify points at distance zero, keeping the lower index.

    Returns the collapsed space, the old-to-new index map and the merges.
    """
    n = numer.shape[0]
    representative = list(range(n))
    merges: List[Merge] = []
    for j in range(n):
        zeros = np.flatnonzero(np.asarray(numer[j, :j] == 0, dtype=bool))
        if len(zeros):
            i = representative[int(zeros[0])]
            representative[j] = i
            merges.append(Merge(kind, i, j))
    kept = [i for i in range(n) if representative[i] == i]
    position = {old: new for new, old in enumerate(kept)}
    index_map = [position[representative[i]] for i in range(n)]
    space = FiniteMetricSpace(numer[np.ix_(kept, kept)], denom, tuple(labels[i] for i in kept))
    for merge in merges:
        logger.warning(f"{kind}: point {merge.dropped} identified with {merge.kept}")
    return space, index_map, merges


def _glued_matrix(left: np.ndarray, right: np.ndarray,
                  glue: Sequence[Tuple[int, int]]) -> Tuple[np.ndarray, List[int]]:
    """Amalgam matrix on left + unglued right points, and the right placement."""
    n_left = left.shape[0]
    glued_left = [u for u, _ in glue]
    glued_right = [v for _, v in glue]
    glued_to = dict((v, u) for u, v in glue)
    free = [b for b in range(right.shape[0]) if b not in glued_to]
    # cross[a, b] = min over glued c of d_left(a, c) + d_right(c, b)
    cross = (left[:, glued_left][:, :, np.newaxis] + right[np.ix_(glued_right, free)][np.newaxis, :, :]).min(axis=1)
    numer = np.block([[left, cross], [cross.T, right[np.ix_(free, free)]]])
    slot = {b: n_left + k for k, b in enumerate(free)}
    placement = [glued_to[b] if b in glued_to else slot[b] for b in range(right.shape[0])]
    return fit_dtype(numer), placement


def amalgamate(spec: AmalgamSpec) -> AmalgamResult:
    """Free amalgam of spec.left and spec.right over the glue.

    Points are left's points followed by right's unglued points in order.
    """
    denom = lcm(spec.left.denom, spec.right.denom)
    numer, placement = _glued_matrix(spec.left.scaled(denom), spec.right.scaled(denom), spec.glue.pairs)
    free_labels = [spec.right.labels[b] for b in range(spec.right.n) if placement[b] >= spec.left.n]
    labels = spec.left.labels + tuple(free_labels)
    space, index_map, merges = collapse_zero_distances(numer, denom, labels, 'DegenerateGlue')
    left_place = tuple(index_map[a] for a in range(spec.left.n))
    right_place = tuple(index_map[p] for p in placement)
    return AmalgamResult(space, (left_place, right_place), tuple(merges))


def double_with_swap(space: FiniteMetricSpace, glued: Sequence[int]) -> Tuple[FiniteMetricSpace, PartialIsometry]:
    """Two copies of space glued over glued, with the involution swapping them."""
    glued = sorted(set(int(g) for g in glued))
    if not glued:
        raise InvalidGlue(None, None)
    copy = FiniteMetricSpace(space.numer, space.denom, tuple(f"{l}'" for l in space.labels))
    glue = PartialIsometry(space, copy, tuple((g, g) for g in glued))
    result = amalgamate(AmalgamSpec(space, copy, glue))
    left_place, right_place = result.placements
    images = list(range(result.space.n))
    for a in range(space.n):
        images[left_place[a]] = right_place[a]
        images[right_place[a]] = left_place[a]
    swap = PartialIsometry(result.space, result.space, tuple(enumerate(images)))
    return result.space, swap


@dataclass(frozen=True)
class OrbitAmalgam:
    """X extended by copies y_i (|i| <= horizon) of the point realizing f.

    orbit[k] is the index of y_{k - horizon} in result, shift is the partial
    isometry phi on X and y_i -> y_{i+1}.
    """
    base: FiniteMetricSpace
    phi: Permutation
    f: KatetovMap
    horizon: int
    result: FiniteMetricSpace
    orbit: Tuple[int, ...]
    shift: PartialIsometry
    merges: Tuple[Merge, ...] = field(default_factory=tuple)

    def y(self, i: int) -> int:
        return self.orbit[i + self.horizon]


def check_self_isometry(space: FiniteMetricSpace, phi: Permutation) -> None:
    if phi.n != space.n:
        raise NotAnIsometry(None, None)
    bad = isometry_defect(space, space, tuple(enumerate(phi.images)))
    if bad is not None:
        raise NotAnIsometry(*bad)


def orbit_matrix(base: FiniteMetricSpace, phi: Permutation, f: KatetovMap,
                 horizon: int) -> Tuple[int, np.ndarray]:
    """Distance matrix of X plus y_{-N..N}: d(x, y_i) = f(phi^-i x)."""
    denom = lcm(base.denom, f.denominator())
    d = base.scaled(denom)
    fv = f.scaled(denom)
    steps = range(-horizon, horizon + 1)
    # column i: x -> f(phi^-i(x))
    to_base = np.stack([fv[list(phi.power(-i).images)] for i in steps])
    # d(y_i, y_j) = min over x of d(y_i, x) + d(y_j, x)
    between = (to_base[:, np.newaxis, :] + to_base[np.newaxis, :, :]).min(axis=2)
    np.fill_diagonal(between, 0)
    numer = np.block([[d, to_base.T], [to_base, between]])
    return denom, fit_dtype(numer)


def orbit_amalgam(base: FiniteMetricSpace, phi: Permutation, f: KatetovMap, horizon: int) -> OrbitAmalgam:
    """The truncated orbit amalgam X(f) with its shift."""
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    check_self_isometry(base, phi)
    katetov_check(base, f.values)
    denom, numer = orbit_matrix(base, phi, f, horizon)
    labels = base.labels + tuple(f"y{i}" for i in range(-horizon, horizon + 1))
    space, index_map, merges = collapse_zero_distances(numer, denom, labels, 'ZeroDistanceCollision')
    n = base.n
    orbit = tuple(index_map[n + k] for k in range(2 * horizon + 1))
    moves = {index_map[x]: index_map[phi(x)] for x in range(n)}
    for k in range(2 * horizon):
        moves.setdefault(orbit[k], orbit[k + 1])
    shift = PartialIsometry.checked(space, space, sorted(moves.items()))
    return OrbitAmalgam(base, phi, f, horizon, space, orbit, shift, tuple(merges))


def multi_amalgamate(base: FiniteMetricSpace, extensions: Sequence[FiniteMetricSpace],
                     embeddings: Optional[Sequence[Sequence[int]]] = None) -> AmalgamResult:
    """Amalgamate every extension with the others over their common base.

    embeddings[e][x] is the index of base point x inside extensions[e]; by
    default base occupies the first base.n indices of each extension.
    """
    if not extensions:
        raise ValueError("Need at least one extension")
    if embeddings is None:
        embeddings = [tuple(range(base.n)) for _ in extensions]
    for ext, emb in zip(extensions, embeddings):
        if isometry_defect(base, ext, tuple(enumerate(emb))) is not None:
            raise InvalidGlue(None, None)
    current = extensions[0]
    base_in_current = list(embeddings[0])
    placements: List[Tuple[int, ...]] = [tuple(range(current.n))]
    merges: List[Merge] = []
    for ext, emb in zip(extensions[1:], embeddings[1:]):
        glue = PartialIsometry(current, ext, tuple(zip(base_in_current, emb)))
        step = amalgamate(AmalgamSpec(current, ext, glue))
        left_place, right_place = step.placements
        placements = [tuple(left_place[i] for i in p) for p in placements]
        placements.append(right_place)
        base_in_current = [left_place[i] for i in base_in_current]
        merges.extend(step.merges)
        current = step.space
    return AmalgamResult(current, tuple(placements), tuple(merges))
