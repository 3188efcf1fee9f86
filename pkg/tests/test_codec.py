"""Text formats: headers, comments, error positions and file references."""
from fractions import Fraction

import pytest

from src.builder import Provenance
from src.codec import (
    format_glue,
    format_graph,
    format_perm,
    format_prov,
    format_ums,
    parse_glue,
    parse_graph,
    parse_perm,
    parse_prov,
    parse_ums,
    read_kmap,
    read_perm,
    read_seq,
    write_kmap,
    write_perm,
    write_seq,
    write_ums,
)
from src.components.permutation import Permutation
from src.errors import FormatError, LipschitzViolation, NegativeOrZeroOffDiagonal, TriangleViolation
from src.katetov import KatetovMap
from src.ratmetric import FiniteMetricSpace, SimpleGraph
from src.tentacular import nat_line

SAMPLE = """\
# two points half a unit apart, and a third
ums v1
n 3
labels a b c
d 0 1 1/2
d 0 2 1   # trailing comment
d 2 1 1
end
"""


def pair(d):
    return FiniteMetricSpace.from_rows([[0, d], [d, 0]])


def format_error(text, parse=parse_ums):
    with pytest.raises(FormatError) as info:
        parse(text)
    return info.value.report_line()


# -- UMS ---------------------------------------------------------------------

def test_parse_sample():
    space = parse_ums(SAMPLE)
    assert space.labels == ('a', 'b', 'c')
    assert space.rows() == [[0, Fraction(1, 2), 1], [Fraction(1, 2), 0, 1], [1, 1, 0]]


def test_format_writes_lowest_terms():
    assert format_ums(nat_line(3)) == ['ums v1', 'n 3', 'd 0 1 1', 'd 0 2 2', 'd 1 2 1', 'end']
    lines = format_ums(parse_ums(SAMPLE))
    assert lines[2] == 'labels a b c'
    assert 'd 0 1 1/2' in lines
    assert parse_ums('\n'.join(lines)) == parse_ums(SAMPLE)


@pytest.mark.parametrize('text, expected', [
    ('ums v2\nn 1\nend\n', 'FormatError 1 header'),
    ('ums v1\nn 1\n', 'FormatError 3 missing-end'),
    ('ums v1\nn 3\nd 0 1 1\nend\n', 'FormatError 4 missing-pair'),
    ('ums v1\nn 2\nd 0 1 1\nd 1 0 1\nend\n', 'FormatError 4 duplicate-pair'),
    ('ums v1\nn 2\nd 1 1 1\nend\n', 'FormatError 3 diagonal'),
    ('ums v1\nn 2\nd 0 2 1\nend\n', 'FormatError 3 index'),
    ('ums v1\nn 2\nd 0 1 0.5\nend\n', 'FormatError 3 rational'),
    ('ums v1\nn 2\nd 0 1\nend\n', 'FormatError 3 arity'),
    ('ums v1\nn 1\nend\nd 0 1 1\n', 'FormatError 4 trailing'),
    ('ums v1\nn 2\nlabels a\nd 0 1 1\nend\n', 'FormatError 3 labels'),
])
def test_ums_format_errors(text, expected):
    assert format_error(text) == expected


def test_metric_errors_pass_through():
    bad = 'ums v1\nn 3\nd 0 1 1\nd 0 2 3\nd 1 2 1\nend\n'
    with pytest.raises(TriangleViolation) as info:
        parse_ums(bad)
    assert info.value.report_line() == 'TriangleViolation 0 1 2'
    assert parse_ums(bad, check_triangles=False).d(0, 2) == 3
    with pytest.raises(NegativeOrZeroOffDiagonal):
        parse_ums('ums v1\nn 2\nd 0 1 0\nend\n', check_triangles=False)


# -- Graphs and glue ---------------------------------------------------------

def test_parse_graph():
    graph = parse_graph('graph v1\nn 3\ne 0 1\ne 2 1\nend\n')
    assert graph.n == 3
    assert len(graph.edges) == 2
    assert format_error('graph v1\nn 2\ne 0 5\nend\n', parse_graph) == 'FormatError 3 index'


def test_parse_glue():
    assert parse_glue('glue v1\ng 0 1\ng 2 0\nend\n') == ((0, 1), (2, 0))
    assert format_error('glue v1\ng 0 -1\nend\n', parse_glue) == 'FormatError 2 integer'


def test_graph_writes_back():
    graph = SimpleGraph(4, frozenset({(0, 1), (2, 1), (3, 2)}))
    lines = format_graph(graph)
    assert lines[2:5] == ['e 0 1', 'e 1 2', 'e 2 3']
    assert parse_graph('\n'.join(lines)) == graph


def test_glue_writes_back():
    pairs = ((0, 1), (2, 0))
    assert parse_glue('\n'.join(format_glue(pairs))) == pairs
    assert parse_glue('\n'.join(format_glue(()))) == ()


# -- Katetov maps ------------------------------------------------------------

def test_kmap_resolves_its_space(tmp_path):
    write_ums(tmp_path / 's.ums', pair(1))
    (tmp_path / 'f.kmap').write_text('kmap v1\nspace s.ums\nn 2\nv 0 1\nv 1 2\nsupport 0\nend\n')
    f = read_kmap(tmp_path / 'f.kmap')
    assert f.values == (1, 2)
    assert f.support == (0,)
    assert f.base == pair(1)


def test_kmap_is_checked(tmp_path):
    write_ums(tmp_path / 's.ums', pair(1))
    (tmp_path / 'bad.kmap').write_text('kmap v1\nspace s.ums\nn 2\nv 0 1/5\nv 1 2\nend\n')
    with pytest.raises(LipschitzViolation):
        read_kmap(tmp_path / 'bad.kmap')
    (tmp_path / 'short.kmap').write_text('kmap v1\nspace s.ums\nn 2\nv 0 1\nend\n')
    with pytest.raises(FormatError) as info:
        read_kmap(tmp_path / 'short.kmap')
    assert info.value.reason == 'missing-value'


def test_written_kmap_refers_to_a_sibling(tmp_path):
    space_path = tmp_path / 's.ums'
    write_ums(space_path, pair(2))
    write_kmap(tmp_path / 'f.kmap', KatetovMap(pair(2), (Fraction(3, 2), Fraction(1, 2))), space_path)
    assert 'space s.ums' in (tmp_path / 'f.kmap').read_text().splitlines()
    assert read_kmap(tmp_path / 'f.kmap').values == (Fraction(3, 2), Fraction(1, 2))


def test_kmap_support_is_written_back(tmp_path):
    space_path = tmp_path / 's.ums'
    write_ums(space_path, pair(2))
    write_kmap(tmp_path / 'f.kmap', KatetovMap(pair(2), (1, 3), support=(0,)), space_path)
    assert 'support 0' in (tmp_path / 'f.kmap').read_text().splitlines()
    f = read_kmap(tmp_path / 'f.kmap')
    assert f.values == (1, 3)
    assert f.support == (0,)


# -- Provenance and permutations ---------------------------------------------

def test_provenance_lines():
    records = (Provenance(1, 1, 1, (0,), (Fraction(1),)),
               Provenance(2, 1, 2, (0, 1), (Fraction(1, 2), Fraction(1))))
    lines = format_prov(records, truncated=True)
    assert lines[1] == 'truncated'
    assert lines[3] == 'p 2 level 1 base 2 support 0 1 values 1/2 1'
    assert parse_prov('\n'.join(lines)) == (records, True)


def test_provenance_field_errors():
    text = 'prov v1\np 1 level 1 base 1 support 0 values\nend\n'
    assert format_error(text, parse_prov) == 'FormatError 2 prov-fields'


def test_parse_perm():
    phi, base = parse_perm('perm v1\nn 3\nm 0 1\nm 1 0\nbase 2\nend\n')
    assert phi.images == (1, 0, 2)
    assert base == (2,)
    assert format_error('perm v1\nn 2\nm 0 1\nbase\nend\n', parse_perm) == 'FormatError 4 not-a-permutation'


@pytest.mark.parametrize('base', [(3,), (0, 3), ()])
def test_perm_writes_back(tmp_path, base):
    phi = Permutation.from_cycles(4, [[0, 2, 1]])
    lines = format_perm(phi, base)
    assert lines[-2] == ' '.join(['base', *(str(b) for b in base)])
    assert parse_perm('\n'.join(lines)) == (phi, base)
    write_perm(tmp_path / 'phi.perm', phi, base)
    assert read_perm(tmp_path / 'phi.perm') == (phi, base)


def test_empty_base_has_no_trailing_space():
    assert format_perm(Permutation.identity(2), ())[-2] == 'base'


# -- Sequences ---------------------------------------------------------------

def test_read_seq(tmp_path):
    write_ums(tmp_path / 'line.ums', nat_line(4))
    (tmp_path / 'a.seq').write_text('seq v1\nspace line.ums\norder 0 2 3\nend\n')
    assert read_seq(tmp_path / 'a.seq').order == (0, 2, 3)
    (tmp_path / 'b.seq').write_text('seq v1\nspace line.ums\norder 0 4\nend\n')
    with pytest.raises(FormatError) as info:
        read_seq(tmp_path / 'b.seq')
    assert info.value.report_line() == 'FormatError 3 index'
    (tmp_path / 'c.seq').write_text('seq v1\nspace line.ums\norder 0 1 0\nend\n')
    with pytest.raises(FormatError) as info:
        read_seq(tmp_path / 'c.seq')
    assert info.value.reason == 'repeated-point'


def test_seq_writes_back(tmp_path):
    write_ums(tmp_path / 'line.ums', nat_line(4))
    write_seq(tmp_path / 'walk.seq', (3, 1, 0), 'line.ums')
    assert (tmp_path / 'walk.seq').read_text() == 'seq v1\nspace line.ums\norder 3 1 0\nend\n'
    walk = read_seq(tmp_path / 'walk.seq')
    assert walk.order == (3, 1, 0)
    assert walk.space.n == 4
