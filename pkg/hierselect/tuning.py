from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from hierselect.glm import DomainError, FitResult

__all__ = [
    "GicPath",
    "KappaKind",
    "KappaRule",
    "default_kappa_rule",
    "gic",
    "gic_grid",
    "kappa",
    "lambda_closed_form",
    "lambda_grid",
]


class KappaKind(str, Enum):
    BIC = "bic"
    HBIC4 = "hbic4"
    EBIC = "ebic"
    AIC = "aic"
    HBIC = "hbic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class KappaRule:
    """How the GIC complexity weight ``κ`` is chosen.

    ``epsilon`` switches HBIC4 to the ``(4 + ε) log(n ∨ p)`` form.
    """

    kind: KappaKind
    value: float | None = None
    epsilon: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", KappaKind(self.kind))
        if self.kind is KappaKind.CUSTOM:
            if self.value is None or not self.value > 0 or not math.isfinite(self.value):
                raise DomainError(f"A custom kappa must be positive and finite, got {self.value}")
        elif self.value is not None:
            raise DomainError(f"Only a custom kappa rule takes a value, not {self.kind.value}")
        if self.epsilon is not None:
            if self.kind is not KappaKind.HBIC4:
                raise DomainError("Only the hbic4 rule takes an epsilon")
            if not self.epsilon > 0:
                raise DomainError(f"epsilon must be positive, got {self.epsilon}")

    @classmethod
    def parse(cls, text: str | float | KappaRule) -> KappaRule:
        """Accept a rule name (``bic``, ``hbic4``, ``ebic``, ``aic``,
        ``hbic``) or a positive number."""
        if isinstance(text, KappaRule):
            return text
        if isinstance(text, (int, float)):
            return cls(KappaKind.CUSTOM, float(text))

        name = text.strip().lower()
        if name != KappaKind.CUSTOM.value:
            try:
                return cls(KappaKind(name))
            except ValueError:
                pass
        try:
            value = float(name)
        except ValueError:
            valid = ", ".join(kind.value for kind in KappaKind if kind is not KappaKind.CUSTOM)
            raise DomainError(
                f"Unknown kappa rule {text!r}; use one of {valid} or a positive number"
            ) from None
        return cls(KappaKind.CUSTOM, value)

    @property
    def name(self) -> str:
        if self.kind is KappaKind.CUSTOM:
            return f"{self.value:g}"
        return self.kind.value


def kappa(rule: KappaRule | str, n: int, p: int) -> float:
    """Evaluate the complexity weight of ``rule`` for ``n`` observations
    and ``p`` variables."""
    rule = KappaRule.parse(rule)
    if n < 1 or p < 1:
        raise DomainError(f"kappa needs n ≥ 1 and p ≥ 1, got n={n}, p={p}")

    if rule.kind is KappaKind.CUSTOM:
        assert rule.value is not None
        return rule.value
    elif rule.kind is KappaKind.BIC:
        value = math.log(n)
    elif rule.kind is KappaKind.AIC:
        value = 2.0
    elif rule.kind is KappaKind.HBIC:
        value = 2 * math.log(p)
    elif rule.kind is KappaKind.HBIC4:
        if rule.epsilon is None:
            value = max(math.log(n), 4 * math.log(p))
        else:
            value = (4 + rule.epsilon) * math.log(max(n, p))
    else:
        if n < 3:
            raise DomainError(f"The ebic rule needs n ≥ 3 (log log n > 0), got n={n}")
        value = math.log(p) * math.log(math.log(n))

    if not value > 0:
        raise DomainError(f"The {rule.name} rule gives a non-positive kappa for n={n}, p={p}")
    return value


def default_kappa_rule(n: int, p: int) -> KappaRule:
    """EBIC when ``p > n``, BIC otherwise."""
    return KappaRule(KappaKind.EBIC if p > n else KappaKind.BIC)


def lambda_closed_form(kappa_value: float, n: int) -> float:
    """``λ = κ/n``, the penalty whose SHL0 selection minimizes
    ``GIC_κ``."""
    if not kappa_value > 0:
        raise DomainError(f"kappa must be positive, got {kappa_value}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return kappa_value / n


def gic(fit: FitResult, kappa_value: float) -> float:
    """``−2ℓ + κ·df`` with the intercept counted in ``df``."""
    return -2.0 * fit.loglik + kappa_value * fit.df


def lambda_grid(kappa_value: float, n: int, num: int = 100, span: float = 4.0) -> np.ndarray:
    """``num`` log-spaced penalties from ``κ/(span·n)`` to ``span·κ/n``."""
    center = lambda_closed_form(kappa_value, n)
    if not span > 1:
        raise DomainError(f"span must exceed 1, got {span}")
    return np.geomspace(center / span, center * span, num)


@dataclass(frozen=True)
class GicPath:
    """The selected fit and its GIC for each penalty of a grid."""

    lambdas: tuple[float, ...]
    fits: tuple[FitResult, ...]
    values: tuple[float, ...]

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.values))

    @property
    def best(self) -> FitResult:
        return self.fits[self.best_index]


def gic_grid(
    selector: Callable[[float], FitResult],
    lambdas: Sequence[float],
    kappa_value: float,
) -> GicPath:
    """Run ``selector`` at every penalty of ``lambdas`` and record the GIC
    of each selected fit."""
    fits = tuple(selector(float(lam)) for lam in lambdas)
    return GicPath(
        lambdas=tuple(float(lam) for lam in lambdas),
        fits=fits,
        values=tuple(gic(fit, kappa_value) for fit in fits),
    )
