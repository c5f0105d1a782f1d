from __future__ import annotations

import json
import math
import warnings
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import wraps
from typing import Any, Callable, TypeVar, Union

import numpy as np

T = TypeVar("T")

# A main effect is a column index, an interaction is an ordered pair of them.
Term = Union[int, tuple[int, int]]

_CENTER_TOLERANCE = 1e-8
_SCALE_TOLERANCE = 1e-6


class ConstantColumnWarning(UserWarning):
    """A predictor without variation was dropped from the dataset."""


def is_interaction(term: Term) -> bool:
    """Return `True` if the given ``term`` is an interaction pair."""
    return isinstance(term, tuple)


def term_key(term: Term) -> tuple[int, int]:
    """Sort key for the natural order of terms: main ``j`` comes right
    before every pair that starts with ``j``, pairs are lexicographic."""
    if is_interaction(term):
        return term  # type: ignore
    return (term, -1)  # type: ignore


def normalize_pair(j: int, k: int) -> tuple[int, int]:
    """Return the pair ``(j, k)`` with its smaller index first."""
    if j == k:
        raise ValueError(f"An interaction needs two distinct variables, got ({j}, {k})")
    return (j, k) if j < k else (k, j)


def term_name(term: Term, names: Sequence[str]) -> str:
    """Render the given ``term`` with variable ``names``, using ``a:b``
    for interactions."""
    if is_interaction(term):
        j, k = term  # type: ignore
        return f"{names[j]}:{names[k]}"
    return names[term]  # type: ignore


def standardize_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Center every column of ``X`` and scale it so its squared norm
    equals the number of rows.

    Returns the standardized matrix (constant columns removed) together
    with a boolean mask of the columns that were kept.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"Expected a 2-dimensional design, got shape {X.shape}")

    n = X.shape[0]
    centered = X - X.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    scale = np.abs(X).max(axis=0, initial=0.0)
    keep = norms > 1e-12 * np.maximum(scale, 1.0) * np.sqrt(n)
    standardized = centered[:, keep] * (np.sqrt(n) / norms[keep])
    return standardized, keep


@dataclass(frozen=True, eq=False)
class Dataset:
    """A response vector together with standardized main-effect columns.

    Interaction columns are never stored; :py:meth:`Dataset.feature`
    builds them on demand as the elementwise product of two
    standardized mains.
    """

    y: np.ndarray
    X: np.ndarray
    names: tuple[str, ...]
    trials: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError(
                f"Incompatible shapes: y {self.y.shape} and X {self.X.shape}"
            )
        if len(self.names) != self.X.shape[1]:
            raise ValueError(
                f"Expected {self.X.shape[1]} variable names, got {len(self.names)}"
            )

    @classmethod
    def from_arrays(
        cls,
        X: Any,
        y: Any,
        names: Iterable[str] | None = None,
        trials: Any = None,
    ) -> Dataset:
        """Standardize ``X`` and build a dataset. Constant columns can't
        be standardized, so they are dropped with a
        :py:class:`ConstantColumnWarning`."""
        raw = np.asarray(X, dtype=float)
        if raw.ndim != 2:
            raise ValueError(f"Expected a 2-dimensional design, got shape {raw.shape}")

        if names is None:
            all_names = tuple(f"x{index + 1}" for index in range(raw.shape[1]))
        else:
            all_names = tuple(names)

        standardized, keep = standardize_columns(raw)
        for name, kept in zip(all_names, keep):
            if not kept:
                warnings.warn(
                    f"Dropping constant column {name!r}: it can't be standardized",
                    ConstantColumnWarning,
                    stacklevel=2,
                )

        if trials is not None:
            trials = np.broadcast_to(
                np.asarray(trials, dtype=float), (raw.shape[0],)
            ).copy()

        kept_names = tuple(name for name, kept in zip(all_names, keep) if kept)
        return cls(
            y=np.asarray(y, dtype=float),
            X=standardized,
            names=kept_names,
            trials=trials,
        )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def is_standardized(self) -> bool:
        """Check the centering and scaling invariants of the mains."""
        n = self.n
        sums = np.abs(self.X.sum(axis=0))
        norms = (self.X**2).sum(axis=0)
        return bool(
            np.all(sums <= _CENTER_TOLERANCE * n)
            and np.all(np.abs(norms - n) <= _SCALE_TOLERANCE * n)
        )

    def feature(self, term: Term) -> np.ndarray:
        """Return the column for a main effect or an interaction."""
        if is_interaction(term):
            j, k = term  # type: ignore
            return self.X[:, j] * self.X[:, k]
        return self.X[:, term]

    def design(self, terms: Sequence[Term]) -> np.ndarray:
        """Return the design matrix with an intercept column followed by
        the columns of ``terms`` (in the given order)."""
        matrix = np.empty((self.n, len(terms) + 1))
        matrix[:, 0] = 1.0
        for position, term in enumerate(terms, 1):
            matrix[:, position] = self.feature(term)
        return matrix

    def term_name(self, term: Term) -> str:
        return term_name(term, self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"Unknown variable {name!r}") from None


def _guarded(
    exc_type: type[BaseException] | tuple[type[BaseException], ...],
    /,
    default: Any = None,
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """Return ``default`` instead of raising any of ``exc_type``."""

    def outer(func):
        @wraps(func)
        def inner(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except exc_type:
                return default

        return inner

    return outer


def json_ready(value: Any) -> Any:
    """Replace non-finite floats in nested dicts, lists and tuples with
    ``None``. JSON has no encoding for NaN or infinities."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    elif isinstance(value, dict):
        return {key: json_ready(item) for key, item in value.items()}
    elif isinstance(value, (list, tuple)):
        return [json_ready(item) for item in value]
    return value


def dump_json(data: Any) -> str:
    return json.dumps(json_ready(data), indent=2, sort_keys=True, allow_nan=False)
