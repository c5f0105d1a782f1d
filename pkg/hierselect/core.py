from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

from hierselect.common import Dataset
from hierselect.context import EXHAUSTIVE_LIMIT, Configuration, SearchContext
from hierselect.glm import DomainError, ExponentialFamily, FitResult, null_fit
from hierselect.internal.exhaustive import best_fit, fit_all_models
from hierselect.model import ModelAlpha, check_strong_hierarchy
from hierselect.penalization import SearchState, penalized_objective, run_restart
from hierselect.runner import run_tasks
from hierselect.screening import ScreenResult, screen

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundResult:
    """One screen followed by the restarts run on its shrunk set."""

    index: int
    screen: ScreenResult
    states: tuple[SearchState, ...]
    best: SearchState

    @property
    def objectives(self) -> tuple[float, ...]:
        return tuple(state.objective for state in self.states)


@dataclass(frozen=True)
class SelectionResult:
    """The selected model, its fit and how the search got there."""

    alpha_hat: ModelAlpha
    fit: FitResult
    lam: float
    kappa: float | None
    objective: float
    restarts: tuple[float, ...]
    rounds: int
    screen_sets: tuple[tuple[int, ...], ...]
    screens: tuple[ScreenResult, ...] = field(repr=False)
    round_results: tuple[RoundResult, ...] = field(repr=False)
    converged: bool = True


def _restart_task(task: tuple[SearchContext, int]) -> SearchState | None:
    context, rng_seed = task
    try:
        return run_restart(context, rng_seed)
    except ValueError as exc:
        logger.warning("Restart with seed %d failed: %s", rng_seed, exc)
        return None


@dataclass
class Session:
    """A selection session over one dataset: the family, the data and the
    search configuration."""

    family: ExponentialFamily
    dataset: Dataset
    config: Configuration = field(default_factory=Configuration)

    def screen(self, base_alpha: ModelAlpha, fit: FitResult | None = None) -> ScreenResult:
        """Screen the variables outside ``base_alpha``'s mains."""
        options: dict[str, Any] = dict(self.config.fit_options)
        if fit is not None and self.config.screening != "none":
            options["fit"] = fit
        return screen(
            self.config.screening,
            self.family,
            self.dataset,
            base_alpha,
            self.config.gamma,
            **options,
        )

    def _context(self, universe: tuple[int, ...], lam: float) -> SearchContext:
        return SearchContext(
            family=self.family,
            dataset=self.dataset,
            universe=universe,
            lam=lam,
            config=self.config,
        )

    def _search_exhaustive(self, context: SearchContext) -> list[SearchState | None]:
        if len(context.universe) > EXHAUSTIVE_LIMIT:
            raise DomainError(
                f"The exhaustive strategy handles at most {EXHAUSTIVE_LIMIT} "
                f"variables, the shrunk set has {len(context.universe)}"
            )
        fits = fit_all_models(
            self.family, self.dataset, context.universe, **self.config.fit_options
        )
        fits = [fit for fit in fits if fit.alpha.size <= context.max_size]
        if not fits:
            return [None]
        fit = best_fit(fits, context.lam)
        return [
            SearchState(fit.alpha, fit, penalized_objective(fit, context.lam), converged=True)
        ]

    def run_round(
        self,
        index: int,
        base_alpha: ModelAlpha,
        lam: float,
        base_fit: FitResult | None = None,
    ) -> RoundResult:
        """Screen from ``base_alpha`` and run every restart of round
        ``index`` (0-based) on the shrunk set."""
        screen_result = self.screen(base_alpha, base_fit)
        context = self._context(screen_result.shrunk, lam)
        logger.info(
            "Round %d: searching %d variables screened from %s",
            index + 1,
            len(screen_result.shrunk),
            base_alpha.describe(self.dataset.names),
        )

        config = self.config
        if config.strategy == "exhaustive":
            outcomes = self._search_exhaustive(context)
        else:
            first_seed = config.seed + index * config.restarts
            tasks = [(context, first_seed + offset) for offset in range(config.restarts)]
            outcomes = run_tasks(
                _restart_task, tasks, workers=1 if config.debug_mode else config.workers
            )

        states = tuple(state for state in outcomes if state is not None)
        if not states:
            fit = null_fit(self.family, self.dataset, **config.fit_options)
            states = (SearchState(fit.alpha, fit, penalized_objective(fit, lam)),)

        # max() keeps the first of equal objectives, i.e. the lowest seed.
        best = max(states, key=lambda state: state.objective)
        logger.info(
            "Round %d: best objective %.6g at %s",
            index + 1,
            best.objective,
            best.alpha.describe(self.dataset.names),
        )
        return RoundResult(index, screen_result, states, best)

    def select(self, lam: float, kappa: float | None = None) -> SelectionResult:
        """Run every round with penalty ``lam`` and return the best model
        found in any of them."""
        if not lam >= 0:
            raise DomainError(f"lambda must be non-negative, got {lam}")

        base_alpha = ModelAlpha.empty()
        base_fit: FitResult | None = None
        best: SearchState | None = None
        rounds: list[RoundResult] = []
        for index in range(self.config.rounds):
            round_result = self.run_round(index, base_alpha, lam, base_fit)
            rounds.append(round_result)
            if best is None or round_result.best.objective > best.objective:
                best = round_result.best
            base_alpha, base_fit = best.alpha, best.fit

        assert best is not None
        assert check_strong_hierarchy(best.alpha)
        return SelectionResult(
            alpha_hat=best.alpha,
            fit=best.fit,
            lam=lam,
            kappa=kappa,
            objective=best.objective,
            restarts=tuple(
                objective for round_result in rounds for objective in round_result.objectives
            ),
            rounds=len(rounds),
            screen_sets=tuple(round_result.screen.shrunk for round_result in rounds),
            screens=tuple(round_result.screen for round_result in rounds),
            round_results=tuple(rounds),
            converged=all(
                state.converged for round_result in rounds for state in round_result.states
            ),
        )


def select(
    family: ExponentialFamily,
    dataset: Dataset,
    lam: float,
    config: Configuration | None = None,
    kappa: float | None = None,
) -> SelectionResult:
    """Select mains and interactions of ``dataset`` under strong
    hierarchy with penalty ``lam``."""
    session = Session(family, dataset, config or Configuration())
    return session.select(lam, kappa)
