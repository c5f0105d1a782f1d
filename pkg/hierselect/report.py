from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from hierselect.common import Dataset, Term, dump_json, term_name
from hierselect.context import fit_or_none
from hierselect.core import SelectionResult
from hierselect.glm import ExponentialFamily, FitResult, null_fit
from hierselect.model import ModelAlpha
from hierselect.screening import ScreenResult
from hierselect.tuning import gic

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RelatedModel:
    """The selected model with a single term removed, and how much
    deviance that costs (in units of the dispersion)."""

    term: Term
    name: str
    deviance: float
    deviance_increase: float
    exceeds_kappa: bool | None


def _without(alpha: ModelAlpha, term: Term) -> ModelAlpha:
    if isinstance(term, tuple):
        return ModelAlpha(alpha.mains, tuple(pair for pair in alpha.interactions if pair != term))
    # Only the main itself; its interactions stay even though that
    # breaks strong hierarchy.
    return ModelAlpha(tuple(j for j in alpha.mains if j != term), alpha.interactions)


def related_models(
    family: ExponentialFamily,
    dataset: Dataset,
    fit: FitResult,
    kappa: float | None = None,
    **options: Any,
) -> list[RelatedModel]:
    """Refit ``fit.alpha`` without each of its terms in turn and report
    the increase of the deviance. Reduced models that can't be fit are
    skipped."""
    related = []
    for term in fit.alpha.terms:
        reduced = _without(fit.alpha, term)
        if (reduced_fit := fit_or_none(family, dataset, reduced, **options)) is None:
            logger.debug("Skipping the model without %s", dataset.term_name(term))
            continue

        increase = (reduced_fit.deviance - fit.deviance) / fit.phi_hat
        related.append(
            RelatedModel(
                term=term,
                name=dataset.term_name(term),
                deviance=reduced_fit.deviance,
                deviance_increase=increase,
                exceeds_kappa=None if kappa is None else increase > kappa,
            )
        )
    return related


@dataclass(frozen=True)
class FitReport:
    """Everything ``fit`` reports about a selection."""

    family: str
    n: int
    p: int
    names: tuple[str, ...]
    selection: SelectionResult
    kappa_rule: str | None
    seed: int
    null_deviance: float
    related: tuple[RelatedModel, ...] = field(default=())

    @classmethod
    def build(
        cls,
        family: ExponentialFamily,
        dataset: Dataset,
        selection: SelectionResult,
        kappa_rule: str | None = None,
        seed: int = 0,
        **options: Any,
    ) -> FitReport:
        null = null_fit(family, dataset, **options)
        return cls(
            family=family.name,
            n=dataset.n,
            p=dataset.p,
            names=dataset.names,
            selection=selection,
            kappa_rule=kappa_rule,
            seed=seed,
            null_deviance=null.deviance,
            related=tuple(
                related_models(family, dataset, selection.fit, selection.kappa, **options)
            ),
        )

    @property
    def deviance_explained(self) -> float:
        if self.null_deviance <= 0:
            return 0.0
        return (self.null_deviance - self.selection.fit.deviance) / self.null_deviance

    @property
    def gic(self) -> float | None:
        if self.selection.kappa is None:
            return None
        return gic(self.selection.fit, self.selection.kappa)

    def _name(self, term: Term) -> str:
        return term_name(term, self.names)

    def to_dict(self) -> dict[str, Any]:
        selection = self.selection
        fit = selection.fit
        alpha = selection.alpha_hat
        return {
            "schema_version": SCHEMA_VERSION,
            "family": self.family,
            "n": self.n,
            "p": self.p,
            "seed": self.seed,
            "kappa_rule": self.kappa_rule,
            "kappa": selection.kappa,
            "lambda": selection.lam,
            "selected": {
                "mains": [self.names[j] for j in alpha.mains],
                "interactions": [self._name(pair) for pair in alpha.interactions],
            },
            "intercept": {"estimate": fit.beta0, "std_error": fit.intercept_std_error},
            "coefficients": [
                {
                    "term": self._name(term),
                    "estimate": fit.beta[term],
                    "std_error": fit.std_errors.get(term),
                }
                for term in alpha.terms
            ],
            "loglik": fit.loglik,
            "deviance": fit.deviance,
            "null_deviance": self.null_deviance,
            "deviance_explained": self.deviance_explained,
            "phi_hat": fit.phi_hat,
            "df": fit.df,
            "gic": self.gic,
            "objective": selection.objective,
            "converged": fit.converged and selection.converged,
            "rounds": selection.rounds,
            "restart_objectives": list(selection.restarts),
            "screen_sets": [[self.names[j] for j in shrunk] for shrunk in selection.screen_sets],
            "related_models": [
                {
                    "removed": model.name,
                    "deviance": model.deviance,
                    "deviance_increase": model.deviance_increase,
                    "exceeds_kappa": model.exceeds_kappa,
                }
                for model in self.related
            ],
        }

    def to_json(self) -> str:
        return dump_json(self.to_dict())

    def write(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def format_text(self) -> str:
        selection = self.selection
        fit = selection.fit
        lines = [
            f"Family: {self.family} (n={self.n}, p={self.p})",
            f"Penalty: lambda={selection.lam:.6g}"
            + ("" if selection.kappa is None else f", kappa={selection.kappa:.6g}"),
            f"Selected: {selection.alpha_hat.describe(self.names)}",
            "",
            f"{'term':<24} {'estimate':>12} {'std.error':>12}",
            f"{'(intercept)':<24} {fit.beta0:>12.6g} {fit.intercept_std_error:>12.6g}",
        ]
        for term in selection.alpha_hat.terms:
            lines.append(
                f"{self._name(term):<24} {fit.beta[term]:>12.6g} {fit.std_errors[term]:>12.6g}"
            )

        lines += [
            "",
            f"Residual deviance: {fit.deviance:.6g} on {self.n - fit.df} degrees of freedom",
            f"Null deviance: {self.null_deviance:.6g}",
            f"Deviance explained: {100 * self.deviance_explained:.1f}%",
        ]
        if (value := self.gic) is not None:
            lines.append(f"GIC: {value:.6g}")

        if self.related:
            lines += ["", "Related models (one term removed):"]
            for model in self.related:
                flag = ""
                if model.exceeds_kappa is not None:
                    flag = " > kappa" if model.exceeds_kappa else " <= kappa"
                lines.append(
                    f"  without {model.name:<20} deviance +{model.deviance_increase:.6g}{flag}"
                )
        return "\n".join(lines)


def screen_report(dataset: Dataset, result: ScreenResult) -> dict[str, Any]:
    """The JSON form of a screen: the shrunk set and every candidate's
    aggregated statistic, in rank order."""
    return {
        "schema_version": SCHEMA_VERSION,
        "method": result.method.value,
        "base_model": result.base_alpha.describe(dataset.names),
        "d_gamma": result.d_gamma,
        "shrunk": [dataset.names[j] for j in result.shrunk],
        "statistics": [
            {"variable": dataset.names[j], "statistic": result.stats[j]}
            for j in result.ranking()
        ],
    }


def format_screen(dataset: Dataset, result: ScreenResult, limit: int = 20) -> str:
    lines = [
        f"Screen: {result.method.value}, d_gamma={result.d_gamma}",
        f"Shrunk set ({len(result.shrunk)}): "
        + ", ".join(dataset.names[j] for j in result.shrunk),
    ]
    ranking = result.ranking()
    if ranking:
        lines += ["", f"{'variable':<24} {'statistic':>14}"]
        for j in ranking[:limit]:
            lines.append(f"{dataset.names[j]:<24} {result.stats[j]:>14.6g}")
        if len(ranking) > limit:
            lines.append(f"... {len(ranking) - limit} more")
    return "\n".join(lines)
