from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from src.amalgam import double_with_swap
from src.errors import AlphaTooLarge, HypothesisViolated, NotNice
from src.homogeneity import (
    avoidance_extension,
    back_and_forth,
    back_and_forth_realizing,
    distance_trace,
    epsilon_net,
    is_nice,
    is_uniqueness_set,
    nice_sphere,
    separate_pair,
    separating_extension,
    uniqueness_kernel,
)
from src.katetov import KatetovMap, katetov_check, sup_distance
from src.ratmetric import FiniteMetricSpace, PartialIsometry, check_space


def line(n):
    idx = np.arange(n)
    return FiniteMetricSpace(np.abs(idx[:, None] - idx[None, :]))


def pair(d):
    return FiniteMetricSpace.from_rows([[0, d], [d, 0]])


@pytest.fixture
def separation_core():
    """x1 with x, y both at distance 2 from it and 1 apart."""
    return FiniteMetricSpace(np.array([[0, 2, 2], [2, 0, 1], [2, 1, 0]]))


# -- Distance traces ---------------------------------------------------------

def test_trace_of_outside_point(equilateral):
    assert distance_trace(equilateral, [0, 1], 2).values == (1, 1)


def test_trace_of_inside_point_is_kuratowski(equilateral):
    assert distance_trace(equilateral, [0, 1], 0).values == (0, 1)


def test_traces_are_one_lipschitz(make_space):
    space = make_space(6)
    subset = [0, 2, 4]
    for z, w in combinations(range(space.n), 2):
        tz = distance_trace(space, subset, z)
        tw = distance_trace(space, subset, w)
        katetov_check(tz.base, tz.values)
        assert sup_distance(tz, tw) <= space.d(z, w)


# -- Back and forth ----------------------------------------------------------

def test_identity_completes_without_steps():
    space = line(4)
    p = PartialIsometry(space, space, ((1, 1), (2, 2)))
    trace = back_and_forth(space, p, [1, 2])
    assert trace.completed
    assert trace.report_lines() == ['Completed steps 0']


def test_stuck_reports_the_forced_map():
    space = line(3)
    p = PartialIsometry(space, space, ((1, 2),))
    trace = back_and_forth(space, p, [0])
    assert not trace.completed
    assert trace.stuck_point == 0
    assert trace.forced_points == (2,)
    assert trace.forced.values == (1,)
    assert trace.report_lines() == ['Stuck step 0 point 0', 'forced points 2 values 1']


def test_realizing_the_forced_map_completes():
    space = line(3)
    p = PartialIsometry(space, space, ((1, 2),))
    grown, trace = back_and_forth_realizing(space, p, [0])
    assert grown.n == 4
    assert grown.row(3) == (3, 2, 1, 0)
    assert trace.completed
    assert trace.isometry.pairs == ((1, 2), (0, 3))
    assert trace.report_lines() == ['Completed steps 1', 'step forth 0 3 forced 1']


def test_back_step_maps_from_the_range_side():
    space = line(3)
    p = PartialIsometry(space, space, ((0, 2),))
    trace = back_and_forth(space, p, [], back_targets=[1])
    assert trace.completed
    assert trace.steps[0].direction == 'back'
    assert trace.isometry.pairs == ((0, 2), (1, 1))


def test_every_step_is_an_isometry(make_space):
    for _ in range(20):
        space = make_space(6)
        p = PartialIsometry(space, space, ((0, 0),))
        trace = back_and_forth(space, p, [1, 2, 3], back_targets=[4, 5])
        PartialIsometry.checked(space, space, trace.isometry.pairs)


# -- Uniqueness sets and nice maps -------------------------------------------

def test_uniqueness_sets(equilateral):
    assert is_uniqueness_set(equilateral, [0, 1, 2]).unique
    report = is_uniqueness_set(equilateral, [0])
    assert report.witness == (1, 2)
    assert report.report_line() == 'unique false witness 1 2'
    assert is_uniqueness_set(equilateral, [0, 1]).report_line() == 'unique true'
    with pytest.raises(ValueError):
        is_uniqueness_set(equilateral, [])


@pytest.mark.parametrize('d, values, nice', [
    (2, (2, 2), True),
    (2, (1, 1), False),
    (1, (1, 2), False),
])
def test_is_nice(d, values, nice):
    space = pair(d)
    assert is_nice(space, KatetovMap(space, values)) is nice


def test_separating_extension_bounds(separation_core):
    extension = separating_extension(separation_core, [0], 1, 2, [2], '1/2')
    assert extension.alpha_max == 1
    assert extension.g.values == (2, Fraction(7, 2), 4)
    assert extension.indices == (0, 1, 2)


def test_zero_alpha_gives_the_plain_extension(separation_core):
    extension = separating_extension(separation_core, [0], 1, 2, [2], 0)
    assert extension.g.values == (2, 4, 4)


def test_separating_extension_errors(separation_core, forced_config):
    with pytest.raises(AlphaTooLarge) as info:
        separating_extension(separation_core, [0], 1, 2, [2], 2)
    assert (info.value.alpha, info.value.alpha_max) == (2, 1)
    with pytest.raises(HypothesisViolated):
        separating_extension(separation_core, [0], 1, 1, [2])
    with pytest.raises(HypothesisViolated):
        separating_extension(line(3), [0], 1, 2, [1])
    tangent = FiniteMetricSpace.from_rows([
        [0, 1, '1/2', '1/2'],
        [1, 0, '1/2', '1/2'],
        ['1/2', '1/2', 0, '1/2'],
        ['1/2', '1/2', '1/2', 0],
    ])
    with pytest.raises(NotNice):
        separating_extension(tangent, [0, 1], 2, 3, [1, 2])


def test_separate_pair_realizes_a_distinguishing_point(separation_core):
    space, z = separate_pair(separation_core, [0], [2], 1, 2)
    check_space(space)
    assert z == 3
    assert space.d(z, 1) == Fraction(7, 2)
    assert space.d(z, 2) == 4


def test_separation_on_random_doubles(rng, make_space):
    for _ in range(100):
        n = rng.randint(2, 5)
        base = make_space(n)
        glued = sorted(rng.sample(range(n), rng.randint(1, n - 1)))
        space, swap = double_with_swap(base, glued)
        values = [base.diameter()] * len(glued)
        assert is_nice(base.subspace(glued), KatetovMap(base.subspace(glued), values))
        images = swap.mapping()
        for x in range(n):
            if x in glued:
                continue
            grown, z = separate_pair(space, glued, values, x, images[x])
            assert grown.d(z, x) != grown.d(z, images[x])


def test_uniqueness_kernel_after_separating_every_clash(rng, make_space):
    for _ in range(100):
        n = rng.randint(2, 5)
        base = make_space(n)
        glued = sorted(rng.sample(range(n), rng.randint(1, n - 1)))
        space, _ = double_with_swap(base, glued)
        # values at most a quarter of the least distance above the diameter keep every bound strict
        step = min(base.d(i, j) for i, j in combinations(range(n), 2)) / 8
        values = [base.diameter() + rng.randint(0, 2) * step for _ in glued]
        assert is_nice(space.subspace(glued), KatetovMap(space.subspace(glued), values))
        for _ in range(space.n):
            kernel = uniqueness_kernel(space, glued, values)
            if kernel.report.unique:
                break
            x, y = kernel.report.witness
            space, z = separate_pair(space, glued, values, x, y)
            assert distance_trace(space, glued, z).values == tuple(values)
            assert space.d(z, x) != space.d(z, y)
        final = uniqueness_kernel(space, glued, values)
        assert final.report.unique
        assert is_uniqueness_set(space, final.kernel).unique


def test_nice_sphere_and_kernel():
    space = line(5)
    assert nice_sphere(space, [0, 4], [2, 2]) == (2,)
    kernel = uniqueness_kernel(space, [0, 4], [2, 2])
    assert kernel.kernel == (0, 2, 4)
    assert kernel.report.unique
    empty = uniqueness_kernel(space, [0, 4], [1, 1])
    assert empty.sphere_empty
    assert empty.kernel == (0, 4)


# -- Avoidance ---------------------------------------------------------------

def test_epsilon_net_on_a_line():
    assert epsilon_net(line(5), range(5), 1) == (0, 2, 4)


def test_avoidance_single_target():
    result = avoidance_extension(pair(3), [0], [1], [1], 3, 1)
    assert result.g(1) == 4
    assert result.margin == 0
    assert result.report_lines() == ['avoid margin 0 values 1 4', 'cert 1 net 1 bound 4']


def test_avoidance_preconditions():
    with pytest.raises(HypothesisViolated):
        avoidance_extension(pair(3), [0], [1], [1], 3, 2)
    with pytest.raises(HypothesisViolated):
        avoidance_extension(pair(3), [0], [1], [1], 4, 1)


def test_avoidance_on_random_configurations(make_space, make_katetov):
    for _ in range(100):
        space = make_space(6)
        f = make_katetov(space)
        targets = [0, 1]
        values = [f(t) for t in targets]
        if min(values) == 0:
            continue
        net = list(epsilon_net(space, range(2, 6), 1))
        M = min(space.d(t, x) for t in targets for x in net)
        eps = min(values)
        result = avoidance_extension(space, targets, values, net, M, eps)
        assert all(result.g(x) >= M + eps for x in net)
        assert all(bound >= M for _, _, bound in result.certificate)
