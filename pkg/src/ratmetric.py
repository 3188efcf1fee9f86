"""Exact finite metric spaces, isometry search and graph distance encoding.

Distances are rationals. A space keeps them as one integer numpy matrix over a
common denominator so every comparison is exact integer arithmetic.
"""
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from src.errors import (
    AsymmetricMatrix,
    DisconnectedGraph,
    NegativeOrZeroOffDiagonal,
    NonzeroDiagonal,
    NotAnIsometry,
    NotFound,
    NotSquare,
    SelfLoop,
    TriangleViolation,
)

logger = logging.getLogger(__name__)

RationalLike = Union[int, Fraction, str]

# Entries above this switch to Python-int object arrays so sums cannot overflow int64
INT64_SAFE = 2 ** 40

_RATIONAL = re.compile(r'[+-]?\d+(/\d+)?')


def as_rational(value: RationalLike) -> Fraction:
    """Convert int, Fraction or 'p/q' text to a Fraction; floats are refused."""
    if isinstance(value, bool):
        raise TypeError("Booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, np.integer):
        return Fraction(int(value))
    if isinstance(value, str):
        text = value.strip()
        if not _RATIONAL.fullmatch(text):
            raise ValueError(f"Invalid rational: {value!r}")
        try:
            return Fraction(text)
        except ZeroDivisionError:
            raise ValueError(f"Zero denominator in {value!r}")
    raise TypeError(f"Rationals must be int, Fraction or 'p/q' text, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    """Lowest-terms 'p/q', or 'p' for integers."""
    return str(Fraction(value))


def common_denominator(*groups: Iterable[Fraction]) -> int:
    """Least common multiple of all denominators in the given iterables."""
    result = 1
    for group in groups:
        for value in group:
            result = lcm(result, Fraction(value).denominator)
    return result


def fit_dtype(array: np.ndarray) -> np.ndarray:
    """Return the array as int64 when its magnitudes allow, else as Python ints."""
    array = np.asarray(array)
    if array.size == 0:
        return array.astype(np.int64)
    if array.dtype == object:
        peak = max(abs(int(v)) for v in array.flat)
        return array.astype(np.int64) if peak < INT64_SAFE else array
    if np.abs(array).max() >= INT64_SAFE:
        return array.astype(object)
    return array.astype(np.int64, copy=False)


def scale_values(values: Iterable[Fraction], denom: int) -> np.ndarray:
    """Integer numerators of values over denom (denom must clear every denominator)."""
    scaled = []
    for value in values:
        numer = Fraction(value) * denom
        if numer.denominator != 1:
            raise ValueError(f"Denominator {denom} does not clear {value}")
        scaled.append(numer.numerator)
    return fit_dtype(np.array(scaled, dtype=object))


def _content(array: np.ndarray) -> int:
    if array.size == 0:
        return 0
    if array.dtype == object:
        return reduce(gcd, (abs(int(v)) for v in array.flat), 0)
    return int(np.gcd.reduce(np.abs(array).ravel()))


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A finite metric space: dist[i][j] = numer[i][j] / denom.

    Construction normalises the fraction and freezes the matrix. No metric
    axioms are checked here; use validate_space for untrusted input.
    """
    numer: np.ndarray
    denom: int = 1
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        numer = fit_dtype(np.array(self.numer, copy=True))
        if numer.ndim != 2 or numer.shape[0] != numer.shape[1]:
            raise ValueError(f"Distance matrix must be square, got shape {numer.shape}")
        denom = int(self.denom)
        if denom <= 0:
            raise ValueError(f"Denominator must be positive, got {denom}")
        common = gcd(_content(numer), denom)
        if common > 1:
            numer = numer // common
            denom //= common
        numer.setflags(write=False)
        labels = tuple(str(l) for l in self.labels) or tuple(str(i) for i in range(numer.shape[0]))
        if len(labels) != numer.shape[0]:
            raise ValueError(f"Expected {numer.shape[0]} labels, got {len(labels)}")
        object.__setattr__(self, 'numer', numer)
        object.__setattr__(self, 'denom', denom)
        object.__setattr__(self, 'labels', labels)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[RationalLike]],
                  labels: Sequence[str] = ()) -> 'FiniteMetricSpace':
        """Trusted constructor from a rational matrix."""
        fractions = [[as_rational(v) for v in row] for row in rows]
        denom = common_denominator(*fractions)
        numer = np.array([[(v * denom).numerator for v in row] for row in fractions], dtype=object)
        if not fractions:
            numer = np.zeros((0, 0), dtype=np.int64)
        return cls(numer, denom, tuple(labels))

    @property
    def n(self) -> int:
        return self.numer.shape[0]

    def d(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.numer[i, j]), self.denom)

    def row(self, i: int) -> Tuple[Fraction, ...]:
        return tuple(Fraction(int(v), self.denom) for v in self.numer[i])

    def rows(self) -> List[List[Fraction]]:
        return [list(self.row(i)) for i in range(self.n)]

    def scaled(self, denom: int) -> np.ndarray:
        """Numerators over a multiple of our denominator."""
        if denom % self.denom:
            raise ValueError(f"{denom} is not a multiple of {self.denom}")
        factor = denom // self.denom
        if factor == 1:
            return self.numer
        widened = self.numer.astype(object) * factor
        return fit_dtype(widened)

    def subspace(self, indices: Sequence[int]) -> 'FiniteMetricSpace':
        idx = list(indices)
        return FiniteMetricSpace(self.numer[np.ix_(idx, idx)], self.denom,
                                 tuple(self.labels[i] for i in idx))

    def permuted(self, order: Sequence[int]) -> 'FiniteMetricSpace':
        """New point k is old point order[k]."""
        if sorted(order) != list(range(self.n)):
            raise ValueError("order must be a permutation of the points")
        return self.subspace(order)

    def diameter(self) -> Fraction:
        if self.n == 0:
            return Fraction(0)
        return Fraction(int(self.numer.max()), self.denom)

    def distance_to_set(self, x: int, subset: Sequence[int]) -> Optional[Fraction]:
        """d(x, subset), or None for the empty set."""
        if not subset:
            return None
        return Fraction(int(self.numer[x, list(subset)].min()), self.denom)

    def _key(self) -> tuple:
        if self.numer.dtype == object:
            body = tuple(int(v) for v in self.numer.flat)
        else:
            body = self.numer.tobytes()
        return (self.n, self.denom, body, self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"FiniteMetricSpace(n={self.n}, denom={self.denom})"


@dataclass(frozen=True)
class PartialIsometry:
    """Distance-preserving partial injection from source points to target points."""
    source: FiniteMetricSpace
    target: FiniteMetricSpace
    pairs: Tuple[Tuple[int, int], ...]

    @classmethod
    def checked(cls, source: FiniteMetricSpace, target: FiniteMetricSpace,
                pairs: Iterable[Tuple[int, int]]) -> 'PartialIsometry':
        """Build and verify injectivity and distance preservation."""
        pairs = tuple((int(u), int(v)) for u, v in pairs)
        bad = isometry_defect(source, target, pairs)
        if bad is not None:
            raise NotAnIsometry(*bad)
        return cls(source, target, pairs)

    def domain(self) -> Tuple[int, ...]:
        return tuple(u for u, _ in self.pairs)

    def image(self) -> Tuple[int, ...]:
        return tuple(v for _, v in self.pairs)

    def mapping(self) -> Dict[int, int]:
        return dict(self.pairs)

    def is_total(self) -> bool:
        return len(self.pairs) == self.source.n

    def inverse(self) -> 'PartialIsometry':
        return PartialIsometry(self.target, self.source, tuple((v, u) for u, v in self.pairs))


def isometry_defect(source: FiniteMetricSpace, target: FiniteMetricSpace,
                    pairs: Sequence[Tuple[int, int]]) -> Optional[Tuple[int, int]]:
    """First pair of source points (u, u') breaking injectivity or distances, else None."""
    seen_src: Dict[int, int] = {}
    seen_dst: Dict[int, int] = {}
    for u, v in pairs:
        if u in seen_src:
            return (seen_src[u], u)
        if v in seen_dst:
            return (seen_dst[v], u)
        seen_src[u] = u
        seen_dst[v] = u
    for a, (u, v) in enumerate(pairs):
        for u2, v2 in pairs[a + 1:]:
            if source.d(u, u2) != target.d(v, v2):
                return (u, u2)
    return None


def find_triangle_violation(space: FiniteMetricSpace) -> Optional[Tuple[int, int, int]]:
    """Lexicographically first (i, j, k) with d(i,k) > d(i,j) + d(j,k)."""
    d = space.numer
    for i in range(space.n):
        # rows j, columns k
        bad = d[i][np.newaxis, :] > d[i][:, np.newaxis] + d
        hits = np.argwhere(bad)
        if len(hits):
            j, k = hits[0]
            return (i, int(j), int(k))
    return None


def validate_space(matrix: Sequence[Sequence[RationalLike]],
                   labels: Sequence[str] = ()) -> FiniteMetricSpace:
    """Check every metric axiom and return the space, or raise the first violation."""
    rows = [[as_rational(v) for v in row] for row in matrix]
    n = len(rows)
    for i, row in enumerate(rows):
        if len(row) != n:
            raise NotSquare(i, len(row), n)
    for i in range(n):
        if rows[i][i] != 0:
            raise NonzeroDiagonal(i)
    for i in range(n):
        for j in range(i + 1, n):
            if rows[i][j] != rows[j][i]:
                raise AsymmetricMatrix(i, j)
    for i in range(n):
        for j in range(i + 1, n):
            if rows[i][j] <= 0:
                raise NegativeOrZeroOffDiagonal(i, j)
    space = FiniteMetricSpace.from_rows(rows, labels)
    violation = find_triangle_violation(space)
    if violation is not None:
        raise TriangleViolation(*violation)
    return space


def check_space(space: FiniteMetricSpace) -> FiniteMetricSpace:
    """Run validate_space on an already-built space."""
    return validate_space(space.rows(), space.labels)


def _profile(row: np.ndarray, skip: int) -> Dict[int, int]:
    values, counts = np.unique(np.delete(row, skip), return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def _contains(big: Dict[int, int], small: Dict[int, int]) -> bool:
    return all(big.get(value, 0) >= count for value, count in small.items())


def find_embedding(small: FiniteMetricSpace, big: FiniteMetricSpace) -> PartialIsometry:
    """Lexicographically least isometric embedding of small into big.

    Points of small are placed in index order; candidates are tried in
    ascending order and pruned by distances to placed points and by distance
    multisets of the whole row.
    """
    if small.n > big.n:
        raise NotFound()
    denom = lcm(small.denom, big.denom)
    s = small.scaled(denom)
    b = big.scaled(denom)
    small_profiles = [_profile(s[i], i) for i in range(small.n)]
    big_profiles: Dict[int, Dict[int, int]] = {}

    def fits(i: int, v: int) -> bool:
        if v not in big_profiles:
            big_profiles[v] = _profile(b[v], v)
        return _contains(big_profiles[v], small_profiles[i])

    images: List[int] = []
    used = np.zeros(big.n, dtype=bool)

    def place(i: int) -> bool:
        if i == small.n:
            return True
        mask = ~used
        if images:
            mask &= np.all(b[:, images] == s[i, :i], axis=1)
        for v in np.flatnonzero(mask):
            v = int(v)
            if not fits(i, v):
                continue
            images.append(v)
            used[v] = True
            if place(i + 1):
                return True
            images.pop()
            used[v] = False
        return False

    if not place(0):
        raise NotFound()
    return PartialIsometry(small, big, tuple(enumerate(images)))


def find_isometry(a: FiniteMetricSpace, b: FiniteMetricSpace) -> PartialIsometry:
    """Least bijective isometry from a onto b, or NotFound."""
    if a.n != b.n:
        raise NotFound()
    denom = lcm(a.denom, b.denom)
    if not np.array_equal(np.sort(a.scaled(denom), axis=None), np.sort(b.scaled(denom), axis=None)):
        logger.info("Distance multisets differ")
        raise NotFound()
    return find_embedding(a, b)


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected simple graph on range(n)."""
    n: int
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        normalised = set()
        for u, v in self.edges:
            if u == v:
                raise SelfLoop(u)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"Edge ({u}, {v}) outside range({self.n})")
            normalised.add((min(u, v), max(u, v)))
        object.__setattr__(self, 'edges', frozenset(normalised))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(sorted(self.edges))
        return graph


def graph_to_metric(graph: SimpleGraph) -> FiniteMetricSpace:
    """Shortest-path hop metric of a connected graph."""
    g = graph.to_networkx()
    if graph.n == 0 or not nx.is_connected(g):
        raise DisconnectedGraph(nx.number_connected_components(g))
    lengths = dict(nx.all_pairs_shortest_path_length(g))
    rows = [[lengths[i][j] for j in range(graph.n)] for i in range(graph.n)]
    return FiniteMetricSpace(np.array(rows, dtype=np.int64), 1)


def ball(space: FiniteMetricSpace, center: int, radius: RationalLike,
         closed: bool = False) -> Tuple[int, ...]:
    r = as_rational(radius)
    row = space.row(center)
    if closed:
        return tuple(x for x in range(space.n) if row[x] <= r)
    return tuple(x for x in range(space.n) if row[x] < r)


def sphere(space: FiniteMetricSpace, center: int, radius: RationalLike) -> Tuple[int, ...]:
    r = as_rational(radius)
    return tuple(x for x, value in enumerate(space.row(center)) if value == r)


def med_set(space: FiniteMetricSpace, a: int, b: int) -> Tuple[int, ...]:
    """Points equidistant from a and b."""
    return med_set_many(space, (a, b))


def med_set_many(space: FiniteMetricSpace, points: Sequence[int]) -> Tuple[int, ...]:
    """Points equidistant from every point of points."""
    if not points:
        return tuple(range(space.n))
    block = space.numer[:, list(points)]
    equal = np.all(block == block[:, :1], axis=1)
    return tuple(int(x) for x in np.flatnonzero(equal))
