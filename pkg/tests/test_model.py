from __future__ import annotations

import itertools

import pytest

from hierselect.model import (
    ModelAlpha,
    check_strong_hierarchy,
    default_max_size,
    enumerate_models,
    neighborhood,
    universe_elements,
)
from hierselect.moves import AddInteraction, AddMain, RemoveMain


def is_strict_subset(small, large):
    return small.issubset(large) and small != large


@pytest.mark.parametrize(
    "alpha, expected",
    [
        (ModelAlpha((0, 1), ((0, 1),)), True),
        (ModelAlpha((0,), ((0, 1),)), False),
        (ModelAlpha(), True),
        (ModelAlpha((0, 1, 2), ((0, 2), (1, 2))), True),
        (ModelAlpha((0, 1, 2), ((0, 2), (1, 3))), False),
    ],
)
def test_check_strong_hierarchy(alpha, expected):
    assert check_strong_hierarchy(alpha) is expected


def test_canonical_form():
    first = ModelAlpha((3, 1, 1), ((3, 1), (0, 2), (1, 3)))
    second = ModelAlpha((1, 3), ((0, 2), (1, 3)))

    assert first == second
    assert hash(first) == hash(second)
    assert first.mains == (1, 3)
    assert first.interactions == ((0, 2), (1, 3))
    assert first.terms == (1, 3, (0, 2), (1, 3))
    assert first.size == len(first) == 4


def test_model_helpers():
    alpha = ModelAlpha.from_terms([2, (0, 2), 0, (2, 3), 3])
    assert alpha == ModelAlpha((0, 2, 3), ((0, 2), (2, 3)))
    assert 2 in alpha
    assert (0, 2) in alpha
    assert 1 not in alpha
    assert (0, 3) not in alpha
    assert alpha.incident(2) == ((0, 2), (2, 3))
    assert alpha.incident(1) == ()
    assert alpha.variables() == {0, 2, 3}
    assert ModelAlpha((0,)).issubset(alpha)
    assert not alpha.issubset(ModelAlpha((0,)))


@pytest.mark.parametrize(
    "alpha, names, expected",
    [
        (ModelAlpha(), None, "∅"),
        (ModelAlpha((0, 2), ((0, 2),)), None, "{x1, x3, x1:x3}"),
        (ModelAlpha((1,)), ("age", "dose"), "{dose}"),
    ],
)
def test_describe(alpha, names, expected):
    assert alpha.describe(names) == expected


@pytest.mark.parametrize("n, expected", [(1, 0), (10, 5), (201, 100)])
def test_default_max_size(n, expected):
    assert default_max_size(n) == expected


def test_universe_elements():
    assert universe_elements([2, 0, 1]) == [0, (0, 1), (0, 2), 1, (1, 2), 2]
    assert universe_elements([]) == []


@pytest.mark.parametrize("size, expected", [(0, 1), (1, 2), (2, 5), (3, 18), (4, 113)])
def test_enumerate_models(size, expected):
    models = list(enumerate_models(range(size)))
    assert len(models) == expected
    assert len(set(models)) == expected
    assert all(check_strong_hierarchy(alpha) for alpha in models)


def test_neighborhood_of_empty_model():
    moves = neighborhood(ModelAlpha(), [0, 1])
    assert moves == [AddMain(0), AddInteraction(0, 1), AddMain(1)]


def test_neighborhood_only_shrinks():
    assert neighborhood(ModelAlpha((0,)), [0]) == [RemoveMain(0)]


@pytest.mark.parametrize("d", range(1, 7))
def test_neighborhood_count(d):
    assert len(neighborhood(ModelAlpha(), range(d))) == d + d * (d - 1) // 2


def test_neighborhood_keeps_mains_outside_universe():
    alpha = ModelAlpha((0, 5), ((0, 5),))
    moves = neighborhood(alpha, [0, 1])
    elements = {move.element for move in moves}

    assert 5 in elements
    assert (0, 5) in elements
    assert (1, 5) not in elements
    assert 1 in elements
    assert (0, 1) in elements


def test_neighborhood_size_cap():
    alpha = ModelAlpha((0,))
    moves = neighborhood(alpha, range(3), max_size=2)

    assert RemoveMain(0) in moves
    assert AddMain(1) in moves
    # Adding (1, 2) would give three terms plus the existing main.
    assert AddInteraction(1, 2) not in moves
    assert all(move.apply(alpha).size <= 2 for move in moves)


UNIVERSE = range(4)
ALL_MODELS = list(enumerate_models(UNIVERSE))


@pytest.mark.parametrize("alpha", ALL_MODELS, ids=lambda alpha: alpha.describe())
def test_neighborhood_closure(alpha):
    results = []
    for move in neighborhood(alpha, UNIVERSE):
        result = move.apply(alpha)
        assert check_strong_hierarchy(result)
        results.append(result)

        if move.is_addition:
            between = [
                other
                for other in ALL_MODELS
                if is_strict_subset(alpha, other) and is_strict_subset(other, result)
            ]
            if between:
                # Only pulling in missing parents leaves room in between,
                # and the result is then the smallest SH superset.
                assert isinstance(move, AddInteraction)
                assert not all(j in alpha.mains for j in move.element)
                assert all(move.element not in other for other in between)
        else:
            between = [
                other
                for other in ALL_MODELS
                if is_strict_subset(result, other) and is_strict_subset(other, alpha)
            ]
            if between:
                # Only a cascading main removal skips models, and none of
                # them drops the main.
                assert isinstance(move, RemoveMain)
                assert alpha.incident(move.j)
                assert all(move.j in other.mains for other in between)

    # Distinct moves lead to distinct neighbors.
    assert len(set(results)) == len(results)


def test_neighborhood_reaches_every_model():
    # Every SH model is reachable from the empty model through additions.
    seen = {ModelAlpha()}
    frontier = [ModelAlpha()]
    while frontier:
        alpha = frontier.pop()
        for move in neighborhood(alpha, UNIVERSE):
            result = move.apply(alpha)
            if move.is_addition and result not in seen:
                seen.add(result)
                frontier.append(result)
    assert seen == set(ALL_MODELS)


def test_enumerate_models_order():
    models = list(enumerate_models([0, 1]))
    assert models == [
        ModelAlpha(),
        ModelAlpha((0,)),
        ModelAlpha((1,)),
        ModelAlpha((0, 1)),
        ModelAlpha((0, 1), ((0, 1),)),
    ]
    assert list(itertools.islice(enumerate_models([3, 1]), 2)) == [
        ModelAlpha(),
        ModelAlpha((1,)),
    ]
