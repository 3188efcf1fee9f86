"""Line-oriented text formats.

Every format starts with '<kind> v1' and closes with 'end'; '#' starts a
comment and blank lines are ignored. Rationals are written in lowest terms.
Malformed input raises FormatError with the offending line number.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from src.builder import Provenance
from src.components.permutation import Permutation
from src.errors import FormatError, NegativeOrZeroOffDiagonal
from src.katetov import KatetovMap, katetov_check
from src.ratmetric import FiniteMetricSpace, SimpleGraph, as_rational, format_rational, validate_space
from src.tentacular import PointSequence
from src.utils import PathLike, numbered_tokens, read_text, resolve_relative, write_output

logger = logging.getLogger(__name__)


class _Cursor:
    """Walks the content lines of one file."""

    def __init__(self, text: str, kind: str):
        self.lines = list(numbered_tokens(text))
        self.position = 0
        number, tokens = self.take()
        if tokens != [kind, 'v1']:
            raise FormatError(number, 'header')

    @property
    def line(self) -> int:
        if self.position < len(self.lines):
            return self.lines[self.position][0]
        return self.lines[-1][0] + 1 if self.lines else 1

    def peek(self) -> Optional[str]:
        if self.position < len(self.lines):
            return self.lines[self.position][1][0]
        return None

    def take(self) -> Tuple[int, List[str]]:
        if self.position >= len(self.lines):
            raise FormatError(self.line, 'missing-end')
        entry = self.lines[self.position]
        self.position += 1
        return entry

    def expect(self, keyword: str, count: Optional[int] = None) -> Tuple[int, List[str]]:
        number, tokens = self.take()
        if tokens[0] != keyword:
            raise FormatError(number, f'expected-{keyword}')
        if count is not None and len(tokens) != count + 1:
            raise FormatError(number, 'arity')
        return number, tokens[1:]

    def finish(self) -> None:
        number, tokens = self.take()
        if tokens != ['end']:
            raise FormatError(number, 'expected-end')
        if self.position < len(self.lines):
            raise FormatError(self.line, 'trailing')


def _int(number: int, token: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise FormatError(number, 'integer')
    if value < 0:
        raise FormatError(number, 'integer')
    return value


def _index(number: int, token: str, n: int) -> int:
    value = _int(number, token)
    if value >= n:
        raise FormatError(number, 'index')
    return value


def _rational(number: int, token: str) -> Fraction:
    try:
        return as_rational(token)
    except (TypeError, ValueError):
        raise FormatError(number, 'rational')


# UMS spaces

def format_ums(space: FiniteMetricSpace, with_labels: bool = True) -> List[str]:
    lines = ['ums v1', f"n {space.n}"]
    default = tuple(str(i) for i in range(space.n))
    if with_labels and space.labels != default:
        lines.append('labels ' + ' '.join(space.labels))
    for i in range(space.n):
        for j in range(i + 1, space.n):
            lines.append(f"d {i} {j} {format_rational(space.d(i, j))}")
    lines.append('end')
    return lines


def parse_ums(text: str, check_triangles: bool = True) -> FiniteMetricSpace:
    """Read a UMS text; the metric axioms are checked, triangles optionally."""
    cursor = _Cursor(text, 'ums')
    number, args = cursor.expect('n', 1)
    n = _int(number, args[0])
    labels: Tuple[str, ...] = ()
    if cursor.peek() == 'labels':
        number, args = cursor.expect('labels')
        if len(args) != n:
            raise FormatError(number, 'labels')
        labels = tuple(args)
    entries: Dict[Tuple[int, int], Fraction] = {}
    while cursor.peek() == 'd':
        number, args = cursor.expect('d', 3)
        i, j = _index(number, args[0], n), _index(number, args[1], n)
        if i == j:
            raise FormatError(number, 'diagonal')
        key = (min(i, j), max(i, j))
        if key in entries:
            raise FormatError(number, 'duplicate-pair')
        entries[key] = _rational(number, args[2])
    end_line = cursor.line
    cursor.finish()
    if len(entries) != n * (n - 1) // 2:
        raise FormatError(end_line, 'missing-pair')
    rows = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), value in entries.items():
        rows[i][j] = rows[j][i] = value
    if check_triangles:
        return validate_space(rows, labels)
    for (i, j) in sorted(entries):
        if entries[(i, j)] <= 0:
            raise NegativeOrZeroOffDiagonal(i, j)
    return FiniteMetricSpace.from_rows(rows, labels)


def read_ums(path: PathLike, check_triangles: bool = True) -> FiniteMetricSpace:
    space = parse_ums(read_text(path), check_triangles)
    logger.info(f"Read {space.n} points from {path}")
    return space


def write_ums(path: PathLike, space: FiniteMetricSpace) -> None:
    write_output(path, format_ums(space))


# Graphs

def format_graph(graph: SimpleGraph) -> List[str]:
    return ['graph v1', f"n {graph.n}"] + [f"e {u} {v}" for u, v in sorted(graph.edges)] + ['end']


def parse_graph(text: str) -> SimpleGraph:
    cursor = _Cursor(text, 'graph')
    number, args = cursor.expect('n', 1)
    n = _int(number, args[0])
    edges = []
    while cursor.peek() == 'e':
        number, args = cursor.expect('e', 2)
        edges.append((_index(number, args[0], n), _index(number, args[1], n)))
    cursor.finish()
    return SimpleGraph(n, frozenset(edges))


def read_graph(path: PathLike) -> SimpleGraph:
    return parse_graph(read_text(path))


# Katetov maps

@dataclass(frozen=True)
class KmapFile:
    """Contents of a kmap file before its space is loaded."""
    space_ref: str
    values: Tuple[Fraction, ...]
    support: Optional[Tuple[int, ...]] = None


def format_kmap(f: KatetovMap, space_ref: str) -> List[str]:
    lines = ['kmap v1', f"space {space_ref}", f"n {len(f.values)}"]
    lines.extend(f"v {i} {format_rational(v)}" for i, v in enumerate(f.values))
    if f.support is not None:
        lines.append(' '.join(['support', *(str(s) for s in f.support)]))
    lines.append('end')
    return lines


def parse_kmap(text: str) -> KmapFile:
    cursor = _Cursor(text, 'kmap')
    _, args = cursor.expect('space', 1)
    space_ref = args[0]
    number, args = cursor.expect('n', 1)
    n = _int(number, args[0])
    values: Dict[int, Fraction] = {}
    while cursor.peek() == 'v':
        number, args = cursor.expect('v', 2)
        i = _index(number, args[0], n)
        if i in values:
            raise FormatError(number, 'duplicate-value')
        values[i] = _rational(number, args[1])
    support = None
    if cursor.peek() == 'support':
        number, args = cursor.expect('support')
        support = tuple(_index(number, a, n) for a in args)
    end_line = cursor.line
    cursor.finish()
    if len(values) != n:
        raise FormatError(end_line, 'missing-value')
    return KmapFile(space_ref, tuple(values[i] for i in range(n)), support)


def read_kmap(path: PathLike, space: Optional[FiniteMetricSpace] = None) -> KatetovMap:
    """Load a kmap and check it against its space (loaded from the file unless given)."""
    raw = parse_kmap(read_text(path))
    if space is None:
        space = read_ums(resolve_relative(path, raw.space_ref))
    return katetov_check(space, raw.values, raw.support)


def write_kmap(path: PathLike, f: KatetovMap, space_path: PathLike) -> None:
    """Write f; the space is referenced relative to the kmap's directory when possible."""
    space_path = Path(space_path)
    try:
        reference = space_path.resolve().relative_to(Path(path).resolve().parent)
    except ValueError:
        reference = space_path.resolve()
    write_output(path, format_kmap(f, reference.as_posix()))


# Glue maps

def format_glue(pairs: Sequence[Tuple[int, int]]) -> List[str]:
    return ['glue v1'] + [f"g {u} {v}" for u, v in pairs] + ['end']


def parse_glue(text: str) -> Tuple[Tuple[int, int], ...]:
    cursor = _Cursor(text, 'glue')
    pairs = []
    while cursor.peek() == 'g':
        number, args = cursor.expect('g', 2)
        pairs.append((_int(number, args[0]), _int(number, args[1])))
    cursor.finish()
    return tuple(pairs)


def read_glue(path: PathLike) -> Tuple[Tuple[int, int], ...]:
    return parse_glue(read_text(path))


# Tower provenance

def format_prov(provenance: Sequence[Provenance], truncated: bool = False) -> List[str]:
    lines = ['prov v1']
    if truncated:
        lines.append('truncated')
    lines.extend(p.report_line() for p in provenance)
    lines.append('end')
    return lines


def parse_prov(text: str) -> Tuple[Tuple[Provenance, ...], bool]:
    cursor = _Cursor(text, 'prov')
    truncated = False
    if cursor.peek() == 'truncated':
        cursor.expect('truncated', 0)
        truncated = True
    records = []
    while cursor.peek() == 'p':
        number, args = cursor.expect('p')
        if len(args) < 6 or args[1] != 'level' or args[3] != 'base' or args[5] != 'support':
            raise FormatError(number, 'prov-fields')
        if 'values' not in args:
            raise FormatError(number, 'prov-fields')
        values_at = args.index('values')
        support = tuple(_int(number, a) for a in args[6:values_at])
        values = tuple(_rational(number, a) for a in args[values_at + 1:])
        if len(support) != len(values):
            raise FormatError(number, 'prov-fields')
        records.append(Provenance(_int(number, args[0]), _int(number, args[2]), _int(number, args[4]),
                                  support, values))
    cursor.finish()
    return tuple(records), truncated


def read_prov(path: PathLike) -> Tuple[Tuple[Provenance, ...], bool]:
    return parse_prov(read_text(path))


# Isometry systems

def format_perm(phi: Permutation, base: Sequence[int]) -> List[str]:
    lines = ['perm v1', f"n {phi.n}"]
    lines.extend(f"m {i} {j}" for i, j in enumerate(phi.images) if i != j)
    lines.append(' '.join(['base', *(str(b) for b in base)]))
    lines.append('end')
    return lines


def parse_perm(text: str) -> Tuple[Permutation, Tuple[int, ...]]:
    cursor = _Cursor(text, 'perm')
    number, args = cursor.expect('n', 1)
    n = _int(number, args[0])
    moves = []
    while cursor.peek() == 'm':
        number, args = cursor.expect('m', 2)
        moves.append((_index(number, args[0], n), _index(number, args[1], n)))
    number, args = cursor.expect('base')
    base = tuple(_index(number, a, n) for a in args)
    cursor.finish()
    try:
        phi = Permutation.from_pairs(n, moves)
    except ValueError:
        raise FormatError(number, 'not-a-permutation')
    return phi, base


def read_perm(path: PathLike) -> Tuple[Permutation, Tuple[int, ...]]:
    return parse_perm(read_text(path))


def write_perm(path: PathLike, phi: Permutation, base: Sequence[int]) -> None:
    write_output(path, format_perm(phi, base))


# Sequences

def format_seq(order: Sequence[int], space_ref: str) -> List[str]:
    return ['seq v1', f"space {space_ref}", ' '.join(['order', *(str(i) for i in order)]), 'end']


def parse_seq(text: str) -> Tuple[str, Tuple[int, ...], int]:
    """Space reference, order, and the line number of the order line."""
    cursor = _Cursor(text, 'seq')
    _, args = cursor.expect('space', 1)
    space_ref = args[0]
    number, args = cursor.expect('order')
    order = tuple(_int(number, a) for a in args)
    if len(set(order)) != len(order):
        raise FormatError(number, 'repeated-point')
    cursor.finish()
    return space_ref, order, number


def read_seq(path: PathLike) -> PointSequence:
    space_ref, order, number = parse_seq(read_text(path))
    space = read_ums(resolve_relative(path, space_ref))
    if any(i >= space.n for i in order):
        raise FormatError(number, 'index')
    return PointSequence(space, order)


def write_seq(path: PathLike, order: Sequence[int], space_ref: str) -> None:
    write_output(path, format_seq(order, space_ref))
