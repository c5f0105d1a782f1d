"""Conditional screening of candidate variables given a base model.

Both screens rank every variable outside the base model's mains by the
strongest single-column signal it carries, either on its own or as the
product with another outside variable, and keep the top ``d_γ`` of them.
ASSIS measures that signal with the score test at the base fit (one
MLE in total); ALRSIS refits every expanded model and uses the drop in
deviance.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy.linalg import qr

from hierselect.common import Dataset, Term
from hierselect.glm import (
    DomainError,
    ExponentialFamily,
    FitResult,
    fit_design,
    fit_mle,
)
from hierselect.internal.linalg import SingularDesign
from hierselect.model import ModelAlpha

__all__ = [
    "DegenerateWeights",
    "ScreenMethod",
    "ScreenResult",
    "WorkingQuantities",
    "alrsis_screen",
    "assis_screen",
    "column_score",
    "default_gamma",
    "screen",
    "score_statistic",
    "screen_size",
    "working_quantities",
]

logger = logging.getLogger(__name__)

# Candidate directions whose component outside the model span is shorter
# than this (relative to the direction itself) carry no new information.
SPAN_TOLERANCE = 1e-10

# Number of candidate rows handled per block in the vectorized scan.
_BLOCK_SIZE = 64


class DegenerateWeights(ArithmeticError):
    """Every IRLS weight of the base fit vanished."""


class ScreenMethod(str, Enum):
    ASSIS = "assis"
    ALRSIS = "alrsis"
    NONE = "none"


@dataclass(frozen=True)
class ScreenResult:
    """The outcome of one screen: aggregated statistics for every
    candidate and the shrunk set ``𝒜`` (base mains plus the top
    ``d_gamma`` candidates)."""

    base_alpha: ModelAlpha
    stats: dict[int, float]
    shrunk: tuple[int, ...]
    d_gamma: int
    method: ScreenMethod
    selected: tuple[int, ...] = ()

    def ranking(self) -> list[int]:
        """Candidates ordered by decreasing statistic, ties by index."""
        return sorted(self.stats, key=lambda j: (-self.stats[j], j))


@dataclass(frozen=True, eq=False)
class WorkingQuantities:
    """The IRLS quantities of a fitted base model.

    ``q`` holds an orthonormal basis of the column space of
    ``W^{1/2} X_α``; projections go through it instead of forming the
    ``n × n`` hat matrix.
    """

    dataset: Dataset
    alpha: ModelAlpha
    z: np.ndarray
    w: np.ndarray
    sqrt_w: np.ndarray
    q: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    phi: float

    def project(self, v: np.ndarray) -> np.ndarray:
        """Apply ``P_α`` to ``v``."""
        return self.q @ (self.q.T @ v)

    def residualize(self, v: np.ndarray) -> np.ndarray:
        """Apply ``I − P_α`` to ``v``."""
        return v - self.project(v)

    def direction(self, x: np.ndarray) -> np.ndarray:
        """The part of the weighted column ``W^{1/2} x`` outside the
        model span."""
        return self.residualize(self.sqrt_w * x)


def working_quantities(
    family: ExponentialFamily,
    dataset: Dataset,
    fit: FitResult,
) -> WorkingQuantities:
    """Build the working response, weights, projection and residual of
    the base model from its fit."""
    eta = fit.eta
    mu = family.mean(eta)
    w = family.variance(eta)
    if not np.any(w > np.finfo(float).tiny):
        raise DegenerateWeights(
            f"All IRLS weights vanish at {fit.alpha.describe(dataset.names)}"
        )
    w = np.maximum(w, np.finfo(float).tiny)
    sqrt_w = np.sqrt(w)
    y_minus_mu = dataset.y - mu
    z = eta + y_minus_mu / w

    X = dataset.design(fit.alpha.terms)
    q, _ = qr(sqrt_w[:, None] * X, mode="economic")

    # W^{1/2}(z − Xβ̂) reduces to (y − μ̂)/√w under the canonical link.
    weighted_residual = y_minus_mu / sqrt_w
    r = weighted_residual - q @ (q.T @ weighted_residual)
    return WorkingQuantities(
        dataset=dataset,
        alpha=fit.alpha,
        z=z,
        w=w,
        sqrt_w=sqrt_w,
        q=q,
        r=r,
        phi=fit.phi_hat,
    )


def column_score(wq: WorkingQuantities, x: np.ndarray) -> float:
    """Score statistic for adding the column ``x`` to the base model."""
    v = wq.sqrt_w * np.asarray(x, dtype=float)
    s = wq.residualize(v)
    s_norm = np.linalg.norm(s)
    if s_norm < SPAN_TOLERANCE * max(1.0, float(np.linalg.norm(v))):
        return 0.0
    return float(np.dot(wq.r, s) ** 2 / (wq.phi * s_norm**2))


def score_statistic(wq: WorkingQuantities, j: int, k: int | None = None) -> float:
    """Score statistic for adding ``x_j ∘ x_k`` to the base model, or the
    plain main effect ``x_j`` when ``k`` is `None`."""
    if j in wq.alpha.mains:
        raise ValueError(f"Variable {j} is already a main effect of the base model")
    if k is None:
        return column_score(wq, wq.dataset.feature(j))
    if k == j:
        raise ValueError(f"An interaction needs two distinct variables, got ({j}, {k})")
    return column_score(wq, wq.dataset.feature((j, k)))


def default_gamma(n: int) -> float:
    if n < 2:
        raise DomainError(f"The default screening fraction needs n ≥ 2, got {n}")
    return 1.0 / np.log(n)


def screen_size(gamma: float, n: int) -> int:
    """``d_γ = ⌊γn⌋``, at least one."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return max(1, int(np.floor(gamma * n)))


def _candidates(dataset: Dataset, base_alpha: ModelAlpha) -> list[int]:
    mains = set(base_alpha.mains)
    return [j for j in range(dataset.p) if j not in mains]


def _shrink(
    base_alpha: ModelAlpha,
    stats: dict[int, float],
    d_gamma: int,
    method: ScreenMethod,
) -> ScreenResult:
    ranking = sorted(stats, key=lambda j: (-stats[j], j))
    selected = tuple(ranking[:d_gamma])
    shrunk = tuple(sorted(set(base_alpha.mains).union(selected)))
    return ScreenResult(
        base_alpha=base_alpha,
        stats=stats,
        shrunk=shrunk,
        d_gamma=d_gamma,
        method=method,
        selected=selected,
    )


def _base_fit(
    family: ExponentialFamily,
    dataset: Dataset,
    base_alpha: ModelAlpha,
    fit: FitResult | None,
    options: dict[str, Any],
) -> FitResult:
    if fit is not None:
        if fit.alpha != base_alpha:
            raise ValueError("The given fit doesn't belong to the base model")
        return fit
    return fit_mle(family, dataset, base_alpha, strict=True, **options)


def aggregated_scores(wq: WorkingQuantities, candidates: Sequence[int]) -> np.ndarray:
    """``aS_j`` for every candidate: the largest score statistic of
    ``x_j`` alone or of ``x_j ∘ x_k`` with another candidate ``k``.

    The pair statistics are computed in blocks of rows straight from the
    main columns, without materializing any interaction column.
    """
    X = wq.dataset.X[:, list(candidates)]
    m = X.shape[1]
    if m == 0:
        return np.empty(0)

    # Main effects.
    V = wq.sqrt_w[:, None] * X
    S = V - wq.q @ (wq.q.T @ V)
    best = _ratio(wq.r @ S, (S**2).sum(axis=0), (V**2).sum(axis=0), wq.phi)

    weighted_r = wq.r * wq.sqrt_w
    weighted_q = wq.q * wq.sqrt_w[:, None]
    qr_ = wq.q.T @ wq.r
    X_squared = X**2
    for start in range(0, m, _BLOCK_SIZE):
        block = slice(start, min(start + _BLOCK_SIZE, m))
        XB = X[:, block]

        # ⟨r, v⟩ and ‖v‖² for v = W^{1/2}(x_j ∘ x_k).
        numerator = (XB * weighted_r[:, None]).T @ X
        v_norm = (XB**2 * wq.w[:, None]).T @ X_squared
        projected = np.zeros_like(v_norm)
        for column, coefficient in zip(weighted_q.T, qr_):
            qv = (XB * column[:, None]).T @ X
            projected += qv**2
            numerator -= coefficient * qv

        s_norm = np.maximum(v_norm - projected, 0.0)
        pair = _ratio(numerator, s_norm, v_norm, wq.phi)
        rows = np.arange(block.start, block.stop)
        pair[rows - block.start, rows] = 0.0
        best[block] = np.maximum(best[block], pair.max(axis=1))
    return best


def _ratio(
    numerator: np.ndarray,
    s_squared: np.ndarray,
    v_squared: np.ndarray,
    phi: float,
) -> np.ndarray:
    degenerate = np.sqrt(s_squared) < SPAN_TOLERANCE * np.sqrt(np.maximum(v_squared, 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = numerator**2 / (phi * s_squared)
    return np.where(degenerate, 0.0, ratio)


def assis_screen(
    family: ExponentialFamily,
    dataset: Dataset,
    base_alpha: ModelAlpha,
    gamma: float | None = None,
    *,
    fit: FitResult | None = None,
    **options: Any,
) -> ScreenResult:
    """Screen with aggregated score statistics. Only the base model is
    fit (or the given ``fit`` reused)."""
    gamma = default_gamma(dataset.n) if gamma is None else gamma
    d_gamma = screen_size(gamma, dataset.n)

    base = _base_fit(family, dataset, base_alpha, fit, options)
    wq = working_quantities(family, dataset, base)
    candidates = _candidates(dataset, base_alpha)
    values = aggregated_scores(wq, candidates)
    stats = {j: float(value) for j, value in zip(candidates, values)}
    return _shrink(base_alpha, stats, d_gamma, ScreenMethod.ASSIS)


def expanded_deviance_drop(
    family: ExponentialFamily,
    dataset: Dataset,
    base: FitResult,
    term: Term,
    **options: Any,
) -> float:
    """``G²_α − G²_{α ∪ {term}}`` from a full refit of the expanded
    model; ``-inf`` if that fit fails."""
    X = np.column_stack([dataset.design(base.alpha.terms), dataset.feature(term)])
    try:
        expanded = fit_design(family, dataset.y, X, eta_start=base.eta, **options)
    except SingularDesign:
        logger.debug("Expanded fit with %s is singular", dataset.term_name(term))
        return float("-inf")

    if not expanded.converged:
        logger.debug("Expanded fit with %s did not converge", dataset.term_name(term))
        return float("-inf")
    return max(base.deviance - expanded.deviance, 0.0)


def alrsis_screen(
    family: ExponentialFamily,
    dataset: Dataset,
    base_alpha: ModelAlpha,
    gamma: float | None = None,
    *,
    fit: FitResult | None = None,
    **options: Any,
) -> ScreenResult:
    """Screen with aggregated likelihood-ratio statistics, refitting the
    expanded model of every candidate column."""
    gamma = default_gamma(dataset.n) if gamma is None else gamma
    d_gamma = screen_size(gamma, dataset.n)

    base = _base_fit(family, dataset, base_alpha, fit, options)
    candidates = _candidates(dataset, base_alpha)
    stats = {
        j: expanded_deviance_drop(family, dataset, base, j, **options)
        for j in candidates
    }
    for position, j in enumerate(candidates):
        for k in candidates[position + 1 :]:
            drop = expanded_deviance_drop(family, dataset, base, (j, k), **options)
            stats[j] = max(stats[j], drop)
            stats[k] = max(stats[k], drop)
    return _shrink(base_alpha, stats, d_gamma, ScreenMethod.ALRSIS)


def screen(
    method: ScreenMethod | str,
    family: ExponentialFamily,
    dataset: Dataset,
    base_alpha: ModelAlpha,
    gamma: float | None = None,
    **options: Any,
) -> ScreenResult:
    """Run the screen named by ``method``. ``"none"`` keeps every
    variable."""
    method = ScreenMethod(method)
    if method is ScreenMethod.ASSIS:
        return assis_screen(family, dataset, base_alpha, gamma, **options)
    elif method is ScreenMethod.ALRSIS:
        return alrsis_screen(family, dataset, base_alpha, gamma, **options)

    options.pop("fit", None)
    candidates = _candidates(dataset, base_alpha)
    return ScreenResult(
        base_alpha=base_alpha,
        stats={},
        shrunk=tuple(range(dataset.p)),
        d_gamma=len(candidates),
        method=method,
        selected=tuple(candidates),
    )
