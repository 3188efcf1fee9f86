"""Katetov tower growth, provenance and injectivity audits."""
from fractions import Fraction

import numpy as np
import pytest

from src.builder import (
    Provenance,
    TowerApprox,
    TowerConfig,
    audit_tower,
    build_tower,
    extend_on_demand,
    injectivity_audit,
    realize,
)
from src.errors import BaseMismatch, DuplicatePoint
from src.katetov import KatetovMap, katetov_extend, kuratowski
from src.ratmetric import FiniteMetricSpace, check_space, find_embedding

UNIVERSAL_GRID = ['1/2', '1', '3/2', '2', '5/2', '3']


@pytest.fixture
def point():
    return FiniteMetricSpace(np.zeros((1, 1), dtype=int))


def pair(d):
    return FiniteMetricSpace.from_rows([[0, d], [d, 0]])


def config(grid, support, depth, budget=5000):
    return TowerConfig(tuple(grid), support, depth, budget)


# -- Configuration -----------------------------------------------------------

def test_config_normalises_grid():
    cfg = config(['2', 1, '2'], 1, 1)
    assert cfg.grid == (Fraction(1), Fraction(2))


@pytest.mark.parametrize('grid, support, depth, budget', [
    ([], 1, 1, 10),
    ([0], 1, 1, 10),
    ([1], 0, 1, 10),
    ([1], 1, -1, 10),
    ([1], 1, 1, 0),
])
def test_config_rejects_bad_values(grid, support, depth, budget):
    with pytest.raises(ValueError):
        config(grid, support, depth, budget)


def test_config_from_dict():
    cfg = TowerConfig.from_dict({'grid': ['1/2', 1], 'max_support': 2, 'depth': 3, 'max_points': 100})
    assert cfg.grid == (Fraction(1, 2), Fraction(1))
    assert TowerConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize('data', [
    {'grid': [1], 'max_support': 2, 'depth': 3},
    {'grid': '1', 'max_support': 2, 'depth': 3, 'max_points': 100},
    {'grid': [1], 'max_support': '2', 'depth': 3, 'max_points': 100},
    {'grid': [1.5], 'max_support': 2, 'depth': 3, 'max_points': 100},
])
def test_config_from_dict_errors(data):
    with pytest.raises(ValueError):
        TowerConfig.from_dict(data)


# -- Realize -----------------------------------------------------------------

def test_realize_adds_one_point(point):
    grown = realize(point, KatetovMap(point, (1,)))
    assert grown.rows() == [[0, 1], [1, 0]]


def test_realize_rejects_kuratowski_maps(make_space):
    space = make_space(4)
    with pytest.raises(DuplicatePoint) as info:
        realize(space, kuratowski(space, 2))
    assert info.value.existing == 2


# -- Tower -------------------------------------------------------------------

def test_one_level_from_a_point(point):
    approx = build_tower(point, config([1, 2], 1, 1))
    assert approx.top.rows() == [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    assert approx.depth == 1
    assert not approx.truncated
    assert approx.provenance[0].report_line() == 'p 1 level 1 base 1 support 0 values 1'
    assert approx.provenance[1].report_line() == 'p 2 level 1 base 1 support 0 values 2'


def test_depth_zero_keeps_seed(point):
    approx = build_tower(point, config([1, 2], 1, 0))
    assert approx.levels == (point,)
    assert approx.witness_level() == 0


def test_second_level_over_unit_grid(point):
    approx = build_tower(point, config([1], 2, 2))
    assert approx.levels[1].rows() == [[0, 1], [1, 0]]
    added = [(p.support, p.values) for p in approx.provenance if p.level == 2]
    assert added == [((0,), (1,)), ((1,), (1,)), ((0, 1), (1, 1))]
    assert approx.top.n == 5


def test_levels_are_nested_and_witnesses_exact(point):
    approx = build_tower(point, config([1, 2], 2, 2))
    for lower, upper in zip(approx.levels, approx.levels[1:]):
        assert upper.subspace(range(lower.n)).rows() == lower.rows()
        check_space(upper)
    for record in approx.provenance:
        base = approx.top.subspace(range(record.base))
        k = katetov_extend(base, record.support, record.values)
        for x in range(record.base):
            assert approx.top.d(record.index, x) == k(x)


def test_budget_truncates(point):
    approx = build_tower(point, config([1, 2], 1, 3, budget=2))
    assert approx.truncated
    assert approx.top.n == 2
    assert approx.complete_depth == 0
    assert approx.budget_error().report_line() == 'BudgetExceeded 2'


def test_from_top_rebuilds_levels(point):
    approx = build_tower(point, config([1, 2], 2, 2))
    rebuilt = TowerApprox.from_top(approx.top, approx.provenance)
    assert [level.rows() for level in rebuilt.levels] == [level.rows() for level in approx.levels]


# -- Audit -------------------------------------------------------------------

def test_audit_finds_the_missing_midpoint():
    report = injectivity_audit(pair(1), [1], 2)
    assert report.report_lines() == ['audit checked 3 realized 2 failures 1', 'fail support 0 1 values 1 1']
    assert not report.passed


def test_audit_single_points_on_a_line():
    line = FiniteMetricSpace(np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]]))
    report = injectivity_audit(line, [1, 2], 1)
    assert [(f.support, f.values) for f in report.failures] == [((1,), (Fraction(2),))]


def test_audit_tolerance_and_workers(make_space):
    space = make_space(6)
    serial = injectivity_audit(space, [1, 2, 3], 2, workers=1, chunk_size=1)
    parallel = injectivity_audit(space, [1, 2, 3], 2, workers=4, chunk_size=2)
    assert serial == parallel
    loose = injectivity_audit(space, [1, 2, 3], 2, eps=3)
    assert loose.passed
    with pytest.raises(ValueError):
        injectivity_audit(space, [1], 1, eps=-1)


def test_audit_is_clean_by_construction(point):
    approx = build_tower(point, config([1, 2], 2, 2))
    assert audit_tower(approx, [1, 2], 2).passed


def test_truncated_tower_audits_its_last_complete_level(point):
    full = build_tower(point, config([1, 2], 2, 2))
    approx = build_tower(point, config([1, 2], 2, 3, budget=full.top.n + 3))
    assert approx.truncated
    assert approx.depth == 3
    assert approx.complete_depth == 2
    assert approx.witness_level() == 1
    assert approx.levels[2].rows() == full.top.rows()
    assert approx.top.n == full.top.n + 3
    assert audit_tower(approx, [1, 2], 2).passed


def test_budget_met_exactly_leaves_an_empty_partial_level(point):
    approx = build_tower(point, config([1, 2], 1, 2, budget=3))
    assert approx.truncated
    assert [level.n for level in approx.levels] == [1, 3, 3]
    assert approx.complete_depth == 1
    assert audit_tower(approx, [1, 2], 1).passed


def test_extend_on_demand_fills_an_audit_failure():
    approx = TowerApprox.from_seed(pair(1))
    before = audit_tower(approx, [1], 2)
    grown = extend_on_demand(approx, KatetovMap(pair(1), (1, 1)))
    after = injectivity_audit(grown.top, [1], 2, subset=range(2))
    assert len(after.failures) < len(before.failures)
    assert grown.provenance[-1] == Provenance(2, 1, 2, (0, 1), (Fraction(1), Fraction(1)))
    with pytest.raises(DuplicatePoint) as info:
        extend_on_demand(grown, KatetovMap(pair(1), (1, 1)))
    assert info.value.existing == 2
    with pytest.raises(DuplicatePoint):
        extend_on_demand(grown, kuratowski(pair(1), 0))
    with pytest.raises(BaseMismatch):
        extend_on_demand(grown, KatetovMap(pair(2), (1, 1)))


@pytest.mark.slow
def test_universality_and_audit_at_desk_scale(point):
    approx = build_tower(point, config(UNIVERSAL_GRID, 3, 3, 5000))
    assert approx.complete_depth >= 2
    for rows in ([[0, 1, 1], [1, 0, 1], [1, 1, 0]],
                 [[0, 1, 1], [1, 0, 2], [1, 2, 0]],
                 [[0, 1, 2], [1, 0, 2], [2, 2, 0]],
                 [[0, 2, 2], [2, 0, 2], [2, 2, 0]]):
        find_embedding(FiniteMetricSpace(np.array(rows)), approx.top)
    report = audit_tower(approx, UNIVERSAL_GRID, 2)
    assert report.passed
    assert report.checked > 0
