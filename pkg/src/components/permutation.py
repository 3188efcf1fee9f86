from dataclasses import dataclass
from math import lcm
from typing import Dict, Iterable, List, Sequence, Tuple


@dataclass(frozen=True)
class Permutation:
    """Permutation of range(n) stored as its image tuple."""
    images: Tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"Not a permutation of range({len(images)}): {images}")
        object.__setattr__(self, 'images', images)

    @classmethod
    def identity(cls, n: int) -> 'Permutation':
        return cls(tuple(range(n)))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Tuple[int, int]]) -> 'Permutation':
        """Build from (i, j) moves; unmentioned points are fixed."""
        images = list(range(n))
        seen = set()
        for i, j in pairs:
            if i in seen:
                raise ValueError(f"Point {i} mapped twice")
            seen.add(i)
            images[i] = j
        return cls(tuple(images))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> 'Permutation':
        images = list(range(n))
        for cycle in cycles:
            for pos, point in enumerate(cycle):
                images[point] = cycle[(pos + 1) % len(cycle)]
        return cls(tuple(images))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def compose(self, other: 'Permutation') -> 'Permutation':
        """Return self after other."""
        if other.n != self.n:
            raise ValueError("Cannot compose permutations of different sizes")
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> 'Permutation':
        inverse = [0] * self.n
        for i, j in enumerate(self.images):
            inverse[j] = i
        return Permutation(tuple(inverse))

    def power(self, p: int) -> 'Permutation':
        """Return self**p for any integer p, reduced along cycles."""
        images = [0] * self.n
        for cycle in self.cycles():
            size = len(cycle)
            for pos, point in enumerate(cycle):
                images[point] = cycle[(pos + p) % size]
        return Permutation(tuple(images))

    def cycles(self) -> List[Tuple[int, ...]]:
        """Cycles in order of their least element, each starting there."""
        seen = set()
        result = []
        for start in range(self.n):
            if start in seen:
                continue
            cycle = [start]
            seen.add(start)
            nxt = self.images[start]
            while nxt != start:
                cycle.append(nxt)
                seen.add(nxt)
                nxt = self.images[nxt]
            result.append(tuple(cycle))
        return result

    def cycle_of(self, i: int) -> Tuple[int, ...]:
        """Orbit of i, listed as i, p(i), p(p(i)), ..."""
        orbit = [i]
        nxt = self.images[i]
        while nxt != i:
            orbit.append(nxt)
            nxt = self.images[nxt]
        return tuple(orbit)

    def order(self) -> int:
        return lcm(*(len(c) for c in self.cycles())) if self.n else 1

    def fixed_points(self) -> Tuple[int, ...]:
        return tuple(i for i, j in enumerate(self.images) if i == j)

    def extended(self, n: int, moves: Dict[int, int]) -> 'Permutation':
        """Grow to range(n): old points keep their images, new points follow moves."""
        images = list(self.images) + list(range(self.n, n))
        for i, j in moves.items():
            images[i] = j
        return Permutation(tuple(images))
