from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from hierselect.common import Term, normalize_pair, term_key
from hierselect.model import ModelAlpha

__all__ = [
    "BaseMove",
    "AddMain",
    "RemoveMain",
    "AddInteraction",
    "RemoveInteraction",
    "InvalidMove",
    "apply_move",
    "move_for",
]


class InvalidMove(ValueError):
    """A move that can't be applied to the given model."""


class BaseMove:
    """A step between a model and one of its neighbors. Each move is
    identified by its diff element (a main index or a pair)."""

    @property
    def element(self) -> Term:
        raise NotImplementedError

    @property
    def is_addition(self) -> bool:
        raise NotImplementedError

    def apply(self, alpha: ModelAlpha) -> ModelAlpha:
        """Return the neighbor of ``alpha`` this move leads to."""
        raise NotImplementedError

    def reverse(self, alpha: ModelAlpha) -> BaseMove:
        """Return the move that undoes this one when applied to
        ``self.apply(alpha)`` (exact only for non-cascading moves)."""
        raise NotImplementedError

    def variables(self) -> tuple[int, ...]:
        element = self.element
        return element if isinstance(element, tuple) else (element,)

    def applies_within(self, universe: Iterable[int], alpha: ModelAlpha) -> bool:
        if not self.is_addition:
            return True
        universe = set(universe)
        return all(j in universe for j in self.variables())

    def result_size(self, alpha: ModelAlpha) -> int:
        return self.apply(alpha).size

    def sort_key(self) -> tuple[int, int]:
        return term_key(self.element)

    def describe(self, names: list[str] | tuple[str, ...] | None = None) -> str:
        element = self.element
        if names is None:
            label = repr(element)
        elif isinstance(element, tuple):
            label = f"{names[element[0]]}:{names[element[1]]}"
        else:
            label = names[element]
        return f"{type(self).__name__}({label})"


@dataclass(frozen=True)
class AddMain(BaseMove):
    """Add main effect ``j`` and nothing else."""

    j: int

    @property
    def element(self) -> Term:
        return self.j

    @property
    def is_addition(self) -> bool:
        return True

    def apply(self, alpha: ModelAlpha) -> ModelAlpha:
        if self.j in alpha.mains:
            raise InvalidMove(f"Main effect {self.j} is already in the model")
        return ModelAlpha((*alpha.mains, self.j), alpha.interactions)

    def reverse(self, alpha: ModelAlpha) -> BaseMove:
        return RemoveMain(self.j)


@dataclass(frozen=True)
class RemoveMain(BaseMove):
    """Remove main effect ``j`` together with every interaction that
    involves it."""

    j: int

    @property
    def element(self) -> Term:
        return self.j

    @property
    def is_addition(self) -> bool:
        return False

    def apply(self, alpha: ModelAlpha) -> ModelAlpha:
        if self.j not in alpha.mains:
            raise InvalidMove(f"Main effect {self.j} is not in the model")
        mains = tuple(j for j in alpha.mains if j != self.j)
        interactions = tuple(pair for pair in alpha.interactions if self.j not in pair)
        return ModelAlpha(mains, interactions)

    def reverse(self, alpha: ModelAlpha) -> BaseMove:
        return AddMain(self.j)


@dataclass(frozen=True)
class AddInteraction(BaseMove):
    """Add the pair ``(j, k)`` and any of its parents that are missing."""

    j: int
    k: int

    def __post_init__(self) -> None:
        j, k = normalize_pair(self.j, self.k)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)

    @property
    def element(self) -> Term:
        return (self.j, self.k)

    @property
    def is_addition(self) -> bool:
        return True

    def apply(self, alpha: ModelAlpha) -> ModelAlpha:
        if self.element in alpha.interactions:
            raise InvalidMove(f"Interaction {self.element} is already in the model")
        return ModelAlpha(
            (*alpha.mains, self.j, self.k),
            (*alpha.interactions, (self.j, self.k)),
        )

    def reverse(self, alpha: ModelAlpha) -> BaseMove:
        return RemoveInteraction(self.j, self.k)


@dataclass(frozen=True)
class RemoveInteraction(BaseMove):
    """Remove only the pair ``(j, k)``."""

    j: int
    k: int

    def __post_init__(self) -> None:
        j, k = normalize_pair(self.j, self.k)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)

    @property
    def element(self) -> Term:
        return (self.j, self.k)

    @property
    def is_addition(self) -> bool:
        return False

    def apply(self, alpha: ModelAlpha) -> ModelAlpha:
        if self.element not in alpha.interactions:
            raise InvalidMove(f"Interaction {self.element} is not in the model")
        interactions = tuple(
            pair for pair in alpha.interactions if pair != self.element
        )
        return ModelAlpha(alpha.mains, interactions)

    def reverse(self, alpha: ModelAlpha) -> BaseMove:
        return AddInteraction(self.j, self.k)


def apply_move(alpha: ModelAlpha, move: BaseMove) -> ModelAlpha:
    """Apply ``move`` to ``alpha``; raises :py:class:`InvalidMove` if the
    move doesn't fit the model."""
    return move.apply(alpha)


def move_for(alpha: ModelAlpha, element: Term) -> BaseMove:
    """Return the unique move whose diff element is ``element``: a
    removal if the element is in ``alpha``, an addition otherwise."""
    if isinstance(element, tuple):
        j, k = normalize_pair(*element)
        if (j, k) in alpha.interactions:
            return RemoveInteraction(j, k)
        return AddInteraction(j, k)

    if element in alpha.mains:
        return RemoveMain(element)
    return AddMain(element)
