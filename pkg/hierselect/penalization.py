"""The penalized objective and the local searches that maximize it.

A search state always holds an MLE fit of a strong-hierarchy model, so
the L0 penalty of the state reduces to the number of selected terms.
Moves come from :py:mod:`hierselect.moves`; a move is accepted only when
it raises the penalized objective.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from hierselect.common import Term, is_interaction
from hierselect.context import SearchContext
from hierselect.glm import DomainError, FitResult
from hierselect.model import ModelAlpha, neighborhood, universe_elements
from hierselect.moves import BaseMove, InvalidMove, move_for

__all__ = [
    "SearchState",
    "b1ls_step",
    "f1ls_pass",
    "initial_state",
    "l0_penalty",
    "move_gain",
    "penalized_objective",
    "restart_generator",
    "run_restart",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchState:
    """A point of the local search and the moves that led to it."""

    alpha: ModelAlpha
    fit: FitResult
    objective: float
    rng_seed: int = 0
    trace: tuple[tuple[BaseMove, float], ...] = field(default=(), repr=False)
    passes: int = 0
    converged: bool = False


def penalized_objective(fit: FitResult, lam: float) -> float:
    """``ℓ − (nλ/2)(|α_M| + |α_I|)`` for an MLE fit of an SH model."""
    if not lam >= 0:
        raise DomainError(f"lambda must be non-negative, got {lam}")
    return fit.loglik - fit.n_obs * lam / 2 * fit.alpha.size


def l0_penalty(beta: dict[Term, float]) -> int:
    """Count the penalized groups of a coefficient map directly: each
    variable with a nonzero main or incident interaction coefficient,
    plus each nonzero interaction."""
    active_variables: set[int] = set()
    interactions = 0
    for term, value in beta.items():
        if value == 0:
            continue
        if is_interaction(term):
            interactions += 1
            active_variables.update(term)  # type: ignore
        else:
            active_variables.add(term)  # type: ignore
    return len(active_variables) + interactions


def initial_state(context: SearchContext, alpha: ModelAlpha, rng_seed: int = 0) -> SearchState:
    fit = context.fit(alpha)
    if fit is None:
        raise ValueError(f"Can't start a search from {alpha.describe(context.dataset.names)}")
    return SearchState(alpha, fit, penalized_objective(fit, context.lam), rng_seed)


def _evaluate(
    context: SearchContext, state: SearchState, move: BaseMove
) -> tuple[float, FitResult | None]:
    try:
        candidate = move.apply(state.alpha)
    except InvalidMove:
        return float("-inf"), None

    fit = context.fit(candidate, eta_start=state.fit.eta)
    if fit is None:
        logger.debug("Rejecting %s: the model can't be fit", move.describe(context.dataset.names))
        return float("-inf"), None
    return penalized_objective(fit, context.lam) - state.objective, fit


def move_gain(context: SearchContext, state: SearchState, move: BaseMove) -> float:
    """``ℓ_λ(α̃) − ℓ_λ(α)`` for ``α̃ = move(α)``; ``-inf`` when ``α̃``
    can't be fit. Positive gains mean ``α̃`` is preferred."""
    gain, _ = _evaluate(context, state, move)
    return gain


def _accept(
    context: SearchContext,
    state: SearchState,
    move: BaseMove,
    gain: float,
    fit: FitResult,
) -> SearchState:
    return replace(
        state,
        alpha=fit.alpha,
        fit=fit,
        objective=penalized_objective(fit, context.lam),
        trace=(*state.trace, (move, gain)),
    )


def _admissible(context: SearchContext, state: SearchState, move: BaseMove) -> bool:
    if not move.applies_within(context.universe, state.alpha):
        return False
    return move.result_size(state.alpha) <= context.max_size


def f1ls_pass(
    context: SearchContext,
    state: SearchState,
    order: Sequence[Term],
) -> SearchState:
    """Examine every element of ``order`` once, moving to the neighbor it
    determines as soon as that neighbor improves the objective."""
    for element in order:
        move = move_for(state.alpha, element)
        if not _admissible(context, state, move):
            continue

        gain, fit = _evaluate(context, state, move)
        if gain > 0:
            assert fit is not None
            logger.debug("Accepted %s (gain %.6g)", move.describe(context.dataset.names), gain)
            state = _accept(context, state, move, gain, fit)
    return state


def b1ls_step(context: SearchContext, state: SearchState) -> SearchState:
    """Scan the whole neighborhood and move to its best member if that
    improves the objective; ties go to the first move in natural
    order."""
    best: tuple[float, BaseMove, FitResult] | None = None
    for move in neighborhood(state.alpha, context.universe, context.max_size):
        gain, fit = _evaluate(context, state, move)
        if gain > 0 and (best is None or gain > best[0]):
            assert fit is not None
            best = (gain, move, fit)

    if best is None:
        return state

    gain, move, fit = best
    logger.debug("Accepted %s (gain %.6g)", move.describe(context.dataset.names), gain)
    return _accept(context, state, move, gain, fit)


def restart_generator(seed: int) -> np.random.Generator:
    """The counter-based random stream of a single restart."""
    return np.random.Generator(np.random.Philox(seed))


def run_restart(
    context: SearchContext,
    rng_seed: int,
    start: ModelAlpha | None = None,
) -> SearchState:
    """Run one local search from ``start`` (the empty model by default)
    until a full pass accepts no move or the pass cap is hit."""
    context = context.fresh()
    config = context.config
    state = initial_state(context, start or ModelAlpha.empty(), rng_seed)
    rng = restart_generator(rng_seed)
    elements = universe_elements(context.universe)

    for passes in range(1, config.max_passes + 1):
        before = state.alpha
        if config.strategy == "b1ls":
            state = b1ls_step(context, state)
        else:
            order = [elements[index] for index in rng.permutation(len(elements))]
            state = f1ls_pass(context, state, order)

        if state.alpha == before:
            return replace(state, passes=passes, converged=True)

    logger.warning(
        "Restart with seed %d hit the cap of %d passes at %s",
        rng_seed,
        config.max_passes,
        state.alpha.describe(context.dataset.names),
    )
    return replace(state, passes=config.max_passes, converged=False)
