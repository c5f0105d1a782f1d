"""Exponential-family GLMs with canonical links.

Each family is described by its cumulant function b(θ) and the two
derivatives b′ (the mean) and b″ (the variance function). Under the
canonical link the linear predictor η is the natural parameter θ, so
the IRLS weights are simply b″(η).
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy.special import expit, gammaln, xlogy

from hierselect.common import Dataset, Term
from hierselect.internal.linalg import (
    SingularDesign,
    weighted_inverse,
    weighted_least_squares,
)
from hierselect.model import ModelAlpha

__all__ = [
    "DomainError",
    "ExponentialFamily",
    "FamilyKind",
    "FitResult",
    "NotConverged",
    "SingularDesign",
    "deviance",
    "fit_design",
    "fit_mle",
    "log_likelihood",
    "null_fit",
]

logger = logging.getLogger(__name__)

# |η| is clamped at this value when computing IRLS weights.
ETA_CLAMP = 30.0
MAX_STEP_HALVINGS = 10
SCORE_TOLERANCE = 1e-7


class DomainError(ValueError):
    """An argument lies outside the domain of the computation."""


class NotConverged(RuntimeError):
    """IRLS stopped before converging. The partial fit is kept in
    ``result``."""

    def __init__(self, message: str, result: Any = None) -> None:
        super().__init__(message)
        self.result = result


class FamilyKind(str, Enum):
    GAUSSIAN = "gaussian"
    BINOMIAL = "binomial"
    POISSON = "poisson"


@dataclass(frozen=True, eq=False)
class ExponentialFamily:
    """A response distribution with its canonical link.

    For the binomial family ``trials`` holds the number of trials of each
    observation (a scalar is broadcast) and responses are success
    counts.
    """

    kind: FamilyKind
    trials: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if self.kind is FamilyKind.BINOMIAL:
            trials = np.atleast_1d(
                np.asarray(1 if self.trials is None else self.trials, dtype=float)
            )
            if np.any(trials <= 0) or np.any(trials != np.round(trials)):
                raise DomainError("Binomial trials must be positive integers")
            object.__setattr__(self, "trials", trials)
        elif self.trials is not None:
            raise DomainError(f"Only the binomial family takes trials, not {self.kind.value}")

    @classmethod
    def gaussian(cls) -> ExponentialFamily:
        return cls(FamilyKind.GAUSSIAN)

    @classmethod
    def binomial(cls, trials: Any = 1) -> ExponentialFamily:
        return cls(FamilyKind.BINOMIAL, trials)

    @classmethod
    def poisson(cls) -> ExponentialFamily:
        return cls(FamilyKind.POISSON)

    @classmethod
    def from_name(cls, name: str, trials: Any = None) -> ExponentialFamily:
        try:
            kind = FamilyKind(name.lower())
        except ValueError:
            valid = ", ".join(kind.value for kind in FamilyKind)
            raise DomainError(f"Unknown family {name!r}; valid families: {valid}") from None
        if kind is FamilyKind.BINOMIAL:
            return cls.binomial(1 if trials is None else trials)
        return cls(kind)

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def has_dispersion(self) -> bool:
        return self.kind is FamilyKind.GAUSSIAN

    def _trials(self, size: int) -> np.ndarray:
        return np.broadcast_to(self.trials, (size,))

    def cumulant(self, theta: np.ndarray) -> np.ndarray:
        """b(θ)."""
        if self.kind is FamilyKind.GAUSSIAN:
            return theta**2 / 2
        elif self.kind is FamilyKind.POISSON:
            return np.exp(theta)
        else:
            return self._trials(theta.size) * np.logaddexp(0.0, theta)

    def mean(self, eta: np.ndarray) -> np.ndarray:
        """b′(η), the mean under the canonical link."""
        if self.kind is FamilyKind.GAUSSIAN:
            return eta.copy()
        elif self.kind is FamilyKind.POISSON:
            return np.exp(np.minimum(eta, 700.0))
        else:
            return self._trials(eta.size) * expit(eta)

    def variance(self, eta: np.ndarray) -> np.ndarray:
        """b″(η) with |η| clamped, used as the IRLS weight."""
        if self.kind is FamilyKind.GAUSSIAN:
            return np.ones_like(eta)

        clamped = np.clip(eta, -ETA_CLAMP, ETA_CLAMP)
        if self.kind is FamilyKind.POISSON:
            return np.exp(clamped)
        else:
            pi = expit(clamped)
            return self._trials(eta.size) * pi * (1.0 - pi)

    def link(self, mu: np.ndarray) -> np.ndarray:
        """The canonical link g = (b′)⁻¹."""
        if self.kind is FamilyKind.GAUSSIAN:
            return mu.copy()
        elif self.kind is FamilyKind.POISSON:
            return np.log(mu)
        else:
            pi = mu / self._trials(mu.size)
            return np.log(pi) - np.log1p(-pi)

    def initial_eta(self, y: np.ndarray) -> np.ndarray:
        if self.kind is FamilyKind.GAUSSIAN:
            return y.copy()
        elif self.kind is FamilyKind.POISSON:
            return np.log(y + 0.1)
        else:
            trials = self._trials(y.size)
            return self.link(trials * (y + 0.5) / (trials + 1.0))

    def log_normalizer(self, y: np.ndarray, phi: float) -> np.ndarray:
        """c(y, φ)."""
        if self.kind is FamilyKind.GAUSSIAN:
            return -(y**2) / (2 * phi) - 0.5 * np.log(2 * np.pi * phi)
        elif self.kind is FamilyKind.POISSON:
            return -gammaln(y + 1.0)
        else:
            trials = self._trials(y.size)
            return gammaln(trials + 1.0) - gammaln(y + 1.0) - gammaln(trials - y + 1.0)

    def unit_deviance(self, y: np.ndarray, eta: np.ndarray) -> float:
        """Σ 2[ℓ_saturated − ℓ(η)] per unit dispersion, evaluated on the
        linear-predictor scale so it stays finite for extreme η."""
        if self.kind is FamilyKind.GAUSSIAN:
            return float(np.sum((y - eta) ** 2))
        elif self.kind is FamilyKind.POISSON:
            with np.errstate(over="ignore"):
                terms = xlogy(y, y) - y - y * eta + np.exp(eta)
        else:
            trials = self._trials(y.size)
            saturated = xlogy(y, y / trials) + xlogy(trials - y, (trials - y) / trials)
            terms = saturated - y * eta + trials * np.logaddexp(0.0, eta)
        return float(2.0 * np.sum(terms))

    def validate_response(self, y: np.ndarray) -> None:
        if not np.all(np.isfinite(y)):
            raise DomainError("Response contains non-finite values")
        if self.kind is FamilyKind.POISSON and np.any(y < 0):
            raise DomainError("Poisson responses must be non-negative counts")
        if self.kind is FamilyKind.BINOMIAL:
            trials = self._trials(y.size)
            if np.any(y < 0) or np.any(y > trials):
                raise DomainError("Binomial responses must lie between 0 and the trials")


@dataclass(frozen=True)
class FitResult:
    """Maximum likelihood fit of one model."""

    alpha: ModelAlpha
    beta0: float
    beta: Mapping[Term, float]
    phi_hat: float
    loglik: float
    deviance: float
    df: int
    converged: bool
    iterations: int
    n_obs: int
    std_errors: Mapping[Term, float] = field(default_factory=dict, repr=False)
    intercept_std_error: float = field(default=float("nan"), repr=False)
    deviance_trace: tuple[float, ...] = field(default=(), repr=False)
    eta: np.ndarray = field(default=None, repr=False, compare=False)  # type: ignore

    def coefficients(self) -> np.ndarray:
        """Intercept followed by the coefficients of ``alpha.terms``."""
        return np.array([self.beta0, *(self.beta[term] for term in self.alpha.terms)])


@dataclass
class _IRLSResult:
    coef: np.ndarray
    eta: np.ndarray
    deviance: float
    converged: bool
    iterations: int
    trace: list[float]


def log_likelihood(
    family: ExponentialFamily,
    y: np.ndarray,
    eta: np.ndarray,
    phi: float = 1.0,
) -> float:
    """Return Σ [yθ − b(θ)]/φ + c(y, φ) with θ = η, normalizing constant
    included."""
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(y))):
        raise DomainError("Log-likelihood needs finite responses and linear predictors")
    if not phi > 0:
        raise DomainError(f"Dispersion must be positive, got {phi}")
    if not family.has_dispersion and phi != 1.0:
        raise DomainError(f"The {family.name} family has its dispersion fixed at 1")

    if family.kind is FamilyKind.GAUSSIAN:
        # Same value as the general form, without cancelling y²/φ terms
        # when φ is near zero.
        terms = -((y - eta) ** 2) / (2 * phi) - 0.5 * np.log(2 * np.pi * phi)
    else:
        terms = (y * eta - family.cumulant(eta)) / phi + family.log_normalizer(y, phi)
    return float(np.sum(terms))


def deviance(
    family: ExponentialFamily,
    y: np.ndarray,
    mu: np.ndarray,
    phi: float = 1.0,
) -> float:
    """Return 2φ[ℓ_saturated − ℓ(μ)]; the residual sum of squares for the
    gaussian family."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if not phi > 0:
        raise DomainError(f"Dispersion must be positive, got {phi}")
    if not np.all(np.isfinite(mu)):
        raise DomainError("Fitted means must be finite")
    if family.kind is FamilyKind.POISSON and np.any(mu <= 0):
        raise DomainError("Poisson means must be positive")
    if family.kind is FamilyKind.BINOMIAL:
        trials = family._trials(mu.size)
        if np.any(mu <= 0) or np.any(mu >= trials):
            raise DomainError("Binomial means must lie strictly between 0 and the trials")

    return family.unit_deviance(y, family.link(mu))


def _no_worse(new: float, old: float) -> bool:
    return new <= old + 1e-12 * (abs(old) + 1.0)


def fit_design(
    family: ExponentialFamily,
    y: np.ndarray,
    X: np.ndarray,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
    eta_start: np.ndarray | None = None,
) -> _IRLSResult:
    """Run IRLS on an explicit design matrix (the intercept column, if
    wanted, must be part of ``X``)."""
    n = y.size
    eta = family.initial_eta(y) if eta_start is None else np.array(eta_start, dtype=float)
    mu = family.mean(eta)
    dev_old = family.unit_deviance(y, eta)

    coef_old: np.ndarray | None = None
    trace: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = family.variance(eta)
        z = eta + (y - mu) / w
        coef = weighted_least_squares(X, w, z)
        eta_new = X @ coef
        dev_new = family.unit_deviance(y, eta_new)

        if coef_old is not None and not _no_worse(dev_new, dev_old):
            for halving in range(1, MAX_STEP_HALVINGS + 1):
                coef = (coef_old + coef) / 2
                eta_new = X @ coef
                dev_new = family.unit_deviance(y, eta_new)
                logger.debug("IRLS step-halving %d: deviance %.6g", halving, dev_new)
                if _no_worse(dev_new, dev_old):
                    break
            else:
                logger.debug("IRLS step-halving exhausted at iteration %d", iterations)
                return _IRLSResult(coef_old, X @ coef_old, dev_old, False, iterations, trace)

        stalled = coef_old is not None and dev_new == dev_old
        coef_old, eta, mu = coef, eta_new, family.mean(eta_new)
        change = abs(dev_new - dev_old) / (abs(dev_new) + 0.1)
        dev_old = dev_new
        trace.append(dev_new)

        score = np.abs(X.T @ (y - mu)).max(initial=0.0)
        if change < tol and (score < SCORE_TOLERANCE * n or stalled):
            converged = True
            break

    assert coef_old is not None
    return _IRLSResult(coef_old, eta, dev_old, converged, iterations, trace)


def fit_mle(
    family: ExponentialFamily,
    dataset: Dataset,
    alpha: ModelAlpha,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
    eta_start: np.ndarray | None = None,
    strict: bool = False,
) -> FitResult:
    """Fit the maximum likelihood estimate of ``alpha`` (intercept
    always included and unpenalized).

    Raises :py:class:`SingularDesign` when the design columns are
    (numerically) dependent. A fit that doesn't converge is returned with
    ``converged=False``, or raised as :py:class:`NotConverged` when
    ``strict`` is set.
    """
    y = dataset.y
    family.validate_response(y)
    df = alpha.size + 1
    if df > dataset.n:
        raise SingularDesign(f"Model with {df} coefficients can't be fit on {dataset.n} rows")

    X = dataset.design(alpha.terms)
    irls = fit_design(family, y, X, tol=tol, max_iter=max_iter, eta_start=eta_start)

    if family.has_dispersion:
        phi_hat = max(irls.deviance / max(dataset.n - df, 1), np.finfo(float).tiny)
    else:
        phi_hat = 1.0

    covariance = phi_hat * weighted_inverse(X, family.variance(irls.eta))
    errors = np.sqrt(np.maximum(np.diag(covariance), 0.0))

    terms = alpha.terms
    result = FitResult(
        alpha=alpha,
        beta0=float(irls.coef[0]),
        beta={term: float(value) for term, value in zip(terms, irls.coef[1:])},
        phi_hat=float(phi_hat),
        loglik=log_likelihood(family, y, irls.eta, phi_hat),
        deviance=irls.deviance,
        df=df,
        converged=irls.converged,
        iterations=irls.iterations,
        n_obs=dataset.n,
        std_errors={term: float(value) for term, value in zip(terms, errors[1:])},
        intercept_std_error=float(errors[0]),
        deviance_trace=tuple(irls.trace),
        eta=irls.eta,
    )

    if not result.converged:
        message = (
            f"IRLS did not converge for {alpha.describe(dataset.names)} "
            f"after {irls.iterations} iterations"
        )
        if strict:
            raise NotConverged(message, result)
        logger.warning(message)
    return result


def null_fit(family: ExponentialFamily, dataset: Dataset, **options: Any) -> FitResult:
    """Fit the intercept-only model."""
    return fit_mle(family, dataset, ModelAlpha.empty(), **options)
