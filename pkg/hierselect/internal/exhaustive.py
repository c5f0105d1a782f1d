from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from typing import Any

from hierselect.common import Dataset
from hierselect.context import fit_or_none
from hierselect.glm import ExponentialFamily, FitResult
from hierselect.model import enumerate_models
from hierselect.penalization import penalized_objective

logger = logging.getLogger(__name__)


def fit_all_models(
    family: ExponentialFamily,
    dataset: Dataset,
    universe: Iterable[int] | None = None,
    **options: Any,
) -> list[FitResult]:
    """Fit every strong-hierarchy model over ``universe`` (all variables
    by default). Models that can't be fit are left out."""
    universe = range(dataset.p) if universe is None else universe
    fits = []
    for alpha in enumerate_models(universe):
        if alpha.size + 1 > dataset.n:
            continue
        if (fit := fit_or_none(family, dataset, alpha, **options)) is None:
            logger.debug("Skipping %s", alpha.describe(dataset.names))
            continue
        fits.append(fit)
    return fits


def best_fit(fits: Sequence[FitResult], lam: float) -> FitResult:
    """The fit with the largest penalized objective; the earliest one
    wins ties."""
    if not fits:
        raise ValueError("No fitted models to choose from")
    return max(fits, key=lambda fit: penalized_objective(fit, lam))


def exhaustive_select(
    family: ExponentialFamily,
    dataset: Dataset,
    lam: float,
    universe: Iterable[int] | None = None,
    *,
    fits: Sequence[FitResult] | None = None,
    **options: Any,
) -> FitResult:
    """Maximize the penalized objective over every strong-hierarchy
    model of ``universe``. Precomputed ``fits`` can be passed to reuse
    them across penalties."""
    if fits is None:
        fits = fit_all_models(family, dataset, universe, **options)
    return best_fit(fits, lam)
