from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from hierselect.common import Dataset, _guarded
from hierselect.glm import ExponentialFamily, FitResult, NotConverged, fit_mle
from hierselect.internal.linalg import SingularDesign
from hierselect.model import ModelAlpha, default_max_size
from hierselect.validate_inputs import ConfigError

SCREENING_METHODS = ("assis", "alrsis", "none")
SEARCH_STRATEGIES = ("f1ls", "b1ls", "exhaustive")

# Largest universe the exhaustive strategy accepts.
EXHAUSTIVE_LIMIT = 5


@dataclass
class Configuration:
    """Search settings for a selection session.

    restarts: independent local searches per round.
    rounds: screen-then-search rounds; later rounds re-screen from the
        previous winner.
    gamma: screening fraction (``d_γ = ⌊γn⌋``), `None` for ``1/log n``.
    seed: root of every random stream.
    max_size: cap on ``|α|``, `None` for ``⌊n/2⌋``.
    screening: assis, alrsis, or none.
    strategy: f1ls, b1ls, or exhaustive.
    max_passes: full passes allowed per restart.
    tol, max_iter: IRLS convergence settings.
    workers: processes used for the restarts.
    debug_mode: run every restart in this process, whatever
        ``workers`` says.
    """

    restarts: int = 10
    rounds: int = 2
    gamma: float | None = None
    seed: int = 0
    max_size: int | None = None
    screening: str = "assis"
    strategy: str = "f1ls"
    max_passes: int = 50
    tol: float = 1e-8
    max_iter: int = 100
    workers: int = 1
    debug_mode: bool = False

    def __post_init__(self) -> None:
        for name in ("restarts", "rounds", "max_passes", "max_iter", "workers"):
            if (value := getattr(self, name)) < 1:
                raise ConfigError(f"'{name}' must be a positive integer, got {value}")
        if self.seed < 0:
            raise ConfigError(f"'seed' must be non-negative, got {self.seed}")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError(f"'gamma' must be positive, got {self.gamma}")
        if self.max_size is not None and self.max_size < 0:
            raise ConfigError(f"'max_size' must be non-negative, got {self.max_size}")
        if not self.tol > 0:
            raise ConfigError(f"'tol' must be positive, got {self.tol}")
        if self.screening not in SCREENING_METHODS:
            raise ConfigError(
                f"'screening' must be one of these: {', '.join(SCREENING_METHODS)}"
            )
        if self.strategy not in SEARCH_STRATEGIES:
            raise ConfigError(
                f"'strategy' must be one of these: {', '.join(SEARCH_STRATEGIES)}"
            )

    @property
    def fit_options(self) -> dict[str, Any]:
        return {"tol": self.tol, "max_iter": self.max_iter}

    def size_cap(self, n: int) -> int:
        return default_max_size(n) if self.max_size is None else self.max_size


@_guarded((SingularDesign, NotConverged))
def fit_or_none(
    family: ExponentialFamily,
    dataset: Dataset,
    alpha: ModelAlpha,
    **options: Any,
) -> FitResult | None:
    """Fit ``alpha`` strictly; `None` when it is singular or IRLS fails."""
    return fit_mle(family, dataset, alpha, strict=True, **options)


@dataclass
class RunConfig:
    """Everything the command line decides for a ``fit`` or ``screen``
    run. ``lambda_override``, when set, is used instead of ``κ/n``."""

    family: str = "gaussian"
    response_column: str = "y"
    trials_column: str | None = None
    kappa_rule: str | None = None
    lambda_override: float | None = None
    search: Configuration = field(default_factory=Configuration)


@dataclass
class SearchContext:
    """The knowledge base of one restart: the data, the shrunk universe,
    the penalty and a cache of every model fit so far (keyed by the
    canonical model, failures stored as `None`)."""

    family: ExponentialFamily
    dataset: Dataset
    universe: tuple[int, ...]
    lam: float
    config: Configuration = field(default_factory=Configuration)
    cache: dict[ModelAlpha, FitResult | None] = field(default_factory=dict, repr=False)

    @property
    def max_size(self) -> int:
        return self.config.size_cap(self.dataset.n)

    def fit(self, alpha: ModelAlpha, eta_start: np.ndarray | None = None) -> FitResult | None:
        """Fit ``alpha`` (starting IRLS from ``eta_start``) or return the
        cached fit. Returns `None` when the model can't be fit."""
        if alpha in self.cache:
            return self.cache[alpha]

        result = fit_or_none(
            self.family,
            self.dataset,
            alpha,
            eta_start=eta_start,
            **self.config.fit_options,
        )
        self.cache[alpha] = result
        return result

    def fresh(self) -> SearchContext:
        """Return a copy of this context with an empty fit cache."""
        return replace(self, cache={})
