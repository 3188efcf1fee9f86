import pytest

from src.components.permutation import Permutation


def test_cycles_start_at_least_element():
    p = Permutation((1, 2, 0, 4, 3, 5))
    assert p.cycles() == [(0, 1, 2), (3, 4), (5,)]
    assert p.cycle_of(2) == (2, 0, 1)
    assert p.order() == 6
    assert p.fixed_points() == (5,)


def test_powers_wrap_along_cycles():
    p = Permutation.from_cycles(5, [(0, 1, 2), (3, 4)])
    assert p.power(3).cycles() == [(0,), (1,), (2,), (3, 4)]
    assert p.power(-1) == p.inverse()
    assert p.power(6) == Permutation.identity(5)


def test_compose_and_inverse():
    p = Permutation((1, 2, 0))
    q = Permutation((0, 2, 1))
    assert p.compose(q).images == (1, 0, 2)
    assert p.compose(p.inverse()) == Permutation.identity(3)
    with pytest.raises(ValueError):
        p.compose(Permutation.identity(4))


def test_from_pairs():
    assert Permutation.from_pairs(4, [(0, 3), (3, 0)]).images == (3, 1, 2, 0)
    with pytest.raises(ValueError):
        Permutation.from_pairs(3, [(0, 1)])
    with pytest.raises(ValueError):
        Permutation.from_pairs(3, [(0, 1), (0, 2)])


def test_extended_keeps_old_images():
    p = Permutation((1, 0))
    grown = p.extended(4, {2: 3, 3: 2})
    assert grown.images == (1, 0, 3, 2)


def test_identity_of_empty_set():
    assert Permutation.identity(0).order() == 1
