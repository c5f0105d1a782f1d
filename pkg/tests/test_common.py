from __future__ import annotations

import json

import numpy as np
import pytest

from hierselect.common import (
    ConstantColumnWarning,
    Dataset,
    _guarded,
    dump_json,
    is_interaction,
    json_ready,
    normalize_pair,
    standardize_columns,
    term_key,
    term_name,
)


@pytest.mark.parametrize(
    "term, expected", [(0, False), (3, False), ((0, 1), True), ((2, 5), True)]
)
def test_is_interaction(term, expected):
    assert is_interaction(term) is expected


def test_term_key_natural_order():
    terms = [(1, 2), 2, (0, 2), 1, 0, (0, 1)]
    assert sorted(terms, key=term_key) == [0, (0, 1), (0, 2), 1, (1, 2), 2]


@pytest.mark.parametrize(
    "j, k, expected", [(0, 1, (0, 1)), (4, 2, (2, 4)), (7, 3, (3, 7))]
)
def test_normalize_pair(j, k, expected):
    assert normalize_pair(j, k) == expected


def test_normalize_pair_rejects_self_interaction():
    with pytest.raises(ValueError):
        normalize_pair(2, 2)


@pytest.mark.parametrize(
    "term, expected", [(0, "x1"), (2, "x3"), ((0, 2), "x1:x3")]
)
def test_term_name(term, expected):
    assert term_name(term, ["x1", "x2", "x3"]) == expected


def test_standardize_columns():
    rng = np.random.default_rng(0)
    raw = rng.normal(5.0, 3.0, size=(50, 3))
    standardized, keep = standardize_columns(raw)

    assert keep.all()
    np.testing.assert_allclose(standardized.sum(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose((standardized**2).sum(axis=0), 50.0)


def test_constant_column_is_dropped():
    rng = np.random.default_rng(1)
    raw = np.column_stack([rng.standard_normal(20), np.full(20, 3.0), rng.standard_normal(20)])

    with pytest.warns(ConstantColumnWarning, match="'b'"):
        dataset = Dataset.from_arrays(raw, np.zeros(20), names=["a", "b", "c"])
    assert dataset.names == ("a", "c")
    assert dataset.p == 2
    assert dataset.is_standardized()


def test_dataset_features():
    rng = np.random.default_rng(2)
    dataset = Dataset.from_arrays(rng.standard_normal((10, 3)), rng.standard_normal(10))

    assert dataset.names == ("x1", "x2", "x3")
    assert (dataset.n, dataset.p) == (10, 3)
    np.testing.assert_array_equal(dataset.feature((0, 2)), dataset.X[:, 0] * dataset.X[:, 2])

    design = dataset.design([1, (0, 2)])
    assert design.shape == (10, 3)
    np.testing.assert_array_equal(design[:, 0], 1.0)
    np.testing.assert_array_equal(design[:, 1], dataset.X[:, 1])
    np.testing.assert_array_equal(design[:, 2], dataset.feature((0, 2)))

    assert dataset.term_name((1, 2)) == "x2:x3"
    assert dataset.index_of("x3") == 2
    with pytest.raises(KeyError):
        dataset.index_of("x9")


def test_dataset_trials_broadcast():
    dataset = Dataset.from_arrays(np.arange(12.0).reshape(6, 2) ** 2, np.ones(6), trials=4)
    np.testing.assert_array_equal(dataset.trials, np.full(6, 4.0))


@pytest.mark.parametrize(
    "y, X, names",
    [
        (np.zeros(3), np.zeros((4, 2)), ("a", "b")),
        (np.zeros(4), np.zeros((4, 2)), ("a",)),
        (np.zeros(4), np.zeros(4), ()),
    ],
)
def test_dataset_shape_errors(y, X, names):
    with pytest.raises(ValueError):
        Dataset(y=y, X=X, names=names)


def test_guarded():
    @_guarded(ZeroDivisionError, default=-1)
    def divide(a, b):
        return a / b

    assert divide(4, 2) == 2
    assert divide(1, 0) == -1

    @_guarded((KeyError, IndexError))
    def lookup(container, key):
        return container[key]

    assert lookup([], 0) is None
    assert lookup({}, "a") is None
    with pytest.raises(TypeError):
        lookup(None, 0)


@pytest.mark.parametrize(
    "value, expected",
    [
        (1.5, 1.5),
        (float("nan"), None),
        (float("-inf"), None),
        (np.float64(np.inf), None),
        ("inf", "inf"),
        (3, 3),
        ({"a": [1.0, float("nan")], "b": (float("inf"), {"c": 2.0})}, {"a": [1.0, None], "b": [None, {"c": 2.0}]}),
    ],
)
def test_json_ready(value, expected):
    assert json_ready(value) == expected


def test_dump_json_is_strict():
    text = dump_json({"statistic": float("-inf"), "error": float("nan"), "value": 0.25})
    assert "Infinity" not in text
    assert "NaN" not in text
    assert json.loads(text) == {"statistic": None, "error": None, "value": 0.25}
