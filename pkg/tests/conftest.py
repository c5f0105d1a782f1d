from __future__ import annotations

import numpy as np
import pytest

from hierselect.common import Dataset


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="run the Monte Carlo acceptance tests",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return

    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_gaussian(n=100, p=4, terms=None, noise=1.0, seed=0):
    """A standardized gaussian dataset whose response is built from the
    given ``{term: coefficient}`` map plus noise."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, p))
    dataset = Dataset.from_arrays(raw, np.zeros(n))
    y = 1.0 + noise * rng.standard_normal(n)
    for term, value in (terms or {}).items():
        y = y + value * dataset.feature(term)
    return Dataset(y=y, X=dataset.X, names=dataset.names)


def make_binomial(n=200, p=4, terms=None, trials=10, seed=0):
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, p))
    dataset = Dataset.from_arrays(raw, np.zeros(n), trials=trials)
    eta = np.full(n, -0.2)
    for term, value in (terms or {}).items():
        eta = eta + value * dataset.feature(term)
    y = rng.binomial(trials, 1 / (1 + np.exp(-eta))).astype(float)
    return Dataset(y=y, X=dataset.X, names=dataset.names, trials=dataset.trials)


def make_poisson(n=100, p=4, terms=None, seed=0):
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, p))
    dataset = Dataset.from_arrays(raw, np.zeros(n))
    eta = np.full(n, 0.5)
    for term, value in (terms or {}).items():
        eta = eta + value * dataset.feature(term)
    y = rng.poisson(np.exp(eta)).astype(float)
    return Dataset(y=y, X=dataset.X, names=dataset.names)
