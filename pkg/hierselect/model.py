from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from itertools import chain, combinations
from typing import TYPE_CHECKING

from hierselect.common import Term, normalize_pair, term_name

if TYPE_CHECKING:
    from hierselect.moves import BaseMove


@dataclass(frozen=True)
class ModelAlpha:
    """A candidate model: a set of main effects and a set of interaction
    pairs. The stored form is canonical (mains ascending, pairs with the
    smaller index first and in lexicographic order) so equal models
    compare and hash equal.

    Models that violate strong hierarchy can be represented (so they can
    be checked); every model produced by a move satisfies it.
    """

    mains: tuple[int, ...] = ()
    interactions: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        mains = tuple(sorted(set(int(j) for j in self.mains)))
        interactions = tuple(
            sorted(set(normalize_pair(int(j), int(k)) for j, k in self.interactions))
        )
        object.__setattr__(self, "mains", mains)
        object.__setattr__(self, "interactions", interactions)

    @classmethod
    def empty(cls) -> ModelAlpha:
        return cls()

    @classmethod
    def from_terms(cls, terms: Iterable[Term]) -> ModelAlpha:
        mains = []
        interactions = []
        for term in terms:
            if isinstance(term, tuple):
                interactions.append(term)
            else:
                mains.append(term)
        return cls(tuple(mains), tuple(interactions))

    @property
    def size(self) -> int:
        """Number of penalized terms, ``|α_M| + |α_I|``."""
        return len(self.mains) + len(self.interactions)

    @property
    def terms(self) -> tuple[Term, ...]:
        """Mains followed by interactions; the column order of the design."""
        return (*self.mains, *self.interactions)

    def __contains__(self, term: object) -> bool:
        if isinstance(term, tuple):
            return term in self.interactions
        return term in self.mains

    def __len__(self) -> int:
        return self.size

    def issubset(self, other: ModelAlpha) -> bool:
        return set(self.mains) <= set(other.mains) and set(self.interactions) <= set(
            other.interactions
        )

    def incident(self, j: int) -> tuple[tuple[int, int], ...]:
        """Interactions of this model that involve variable ``j``."""
        return tuple(pair for pair in self.interactions if j in pair)

    def describe(self, names: Sequence[str] | None = None) -> str:
        if not self.size:
            return "∅"
        if names is None:
            names = [f"x{index + 1}" for index in range(max(self.variables()) + 1)]
        return "{" + ", ".join(term_name(term, names) for term in self.terms) + "}"

    def variables(self) -> set[int]:
        return set(self.mains).union(*self.interactions)


def check_strong_hierarchy(alpha: ModelAlpha) -> bool:
    """Return `True` iff both parents of every interaction are mains of
    the model."""
    mains = set(alpha.mains)
    return all(j in mains and k in mains for j, k in alpha.interactions)


def default_max_size(n: int) -> int:
    return n // 2


def universe_elements(universe: Iterable[int]) -> list[Term]:
    """All diff elements over ``universe``: its mains and every pair of
    them, in natural order."""
    variables = sorted(set(universe))
    elements: list[Term] = []
    for j in variables:
        elements.append(j)
        elements.extend((j, k) for k in variables if k > j)
    return elements


def neighborhood(
    alpha: ModelAlpha,
    universe: Iterable[int],
    max_size: int | None = None,
) -> list[BaseMove]:
    """Return every move leading to a neighbor of ``alpha`` over the
    variables of ``universe`` (in natural order of the diff element).

    Moves whose result would hold more than ``max_size`` terms are left
    out.
    """
    from hierselect.moves import move_for

    universe = set(universe)
    elements = universe_elements(universe | set(alpha.mains))

    moves = []
    for element in elements:
        move = move_for(alpha, element)
        if not move.applies_within(universe, alpha):
            continue
        if max_size is not None and move.result_size(alpha) > max_size:
            continue
        moves.append(move)
    return moves


def enumerate_models(universe: Iterable[int]) -> Iterator[ModelAlpha]:
    """Yield every strong-hierarchy model over ``universe``: for each
    subset of mains, every subset of the pairs among them."""
    variables = sorted(set(universe))
    for size in range(len(variables) + 1):
        for mains in combinations(variables, size):
            pairs = list(combinations(mains, 2))
            for pair_subset in chain.from_iterable(
                combinations(pairs, count) for count in range(len(pairs) + 1)
            ):
                yield ModelAlpha(mains, pair_subset)
