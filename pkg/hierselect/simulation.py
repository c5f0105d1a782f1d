"""Monte Carlo experiments on planted interaction models.

Two true models are available: a linear model with three interactions
among the first six variables and a binomial (10 trials) logistic model
with three interactions among the first four. Each comes in three cases
that differ only in the main-effect coefficients; case ``c`` has no
main effects at all, so the mains of the true model are there only as
parents of its interactions.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import expit

from hierselect.common import Dataset, Term, dump_json, standardize_columns, term_name
from hierselect.context import Configuration
from hierselect.core import select
from hierselect.glm import DomainError, ExponentialFamily
from hierselect.model import ModelAlpha, check_strong_hierarchy
from hierselect.runner import dump_stats, run_tasks
from hierselect.tuning import KappaRule, default_kappa_rule, kappa, lambda_closed_form
from hierselect.validate_inputs import ConfigError

__all__ = [
    "PlantedModel",
    "ReplicationRecord",
    "SelectionMetrics",
    "SimConfig",
    "SimReport",
    "TrueModel",
    "evaluate_selection",
    "format_table",
    "gen_correlated_design",
    "gen_linear_response",
    "gen_logistic_response",
    "linear_truth",
    "logistic_truth",
    "planted_model",
    "run_experiment",
]

logger = logging.getLogger(__name__)

SIGNAL = 3.0
LOGISTIC_TRIALS = 10

_CASES = ("a", "b", "c")


class TrueModel(str, Enum):
    LINEAR = "linear"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class PlantedModel:
    """A true model: its coefficients (nonzero only) and its support
    ``α*``, whose mains include the parents of every interaction."""

    coefficients: dict[Term, float]
    alpha_star: ModelAlpha

    @classmethod
    def from_coefficients(cls, coefficients: dict[Term, float]) -> PlantedModel:
        alpha = ModelAlpha.from_terms(coefficients)
        parents = alpha.variables()
        return cls(coefficients, ModelAlpha(tuple(parents), alpha.interactions))

    @property
    def min_variables(self) -> int:
        return max(self.alpha_star.variables()) + 1

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        eta = np.zeros(X.shape[0])
        for term, value in self.coefficients.items():
            if isinstance(term, tuple):
                eta += value * X[:, term[0]] * X[:, term[1]]
            else:
                eta += value * X[:, term]
        return eta


def _check_case(case: str) -> str:
    if case not in _CASES:
        raise DomainError(f"Unknown case {case!r}; valid cases: {', '.join(_CASES)}")
    return case


def linear_truth(case: str) -> PlantedModel:
    """Interactions (0, 3), (0, 4), (4, 5); case a adds mains 0 to 3,
    case b mains 0 to 5."""
    mains = {"a": range(4), "b": range(6), "c": range(0)}[_check_case(case)]
    coefficients: dict[Term, float] = {j: SIGNAL for j in mains}
    coefficients.update({(0, 3): SIGNAL, (0, 4): SIGNAL, (4, 5): SIGNAL})
    return PlantedModel.from_coefficients(coefficients)


def logistic_truth(case: str) -> PlantedModel:
    """Interactions (0, 1), (0, 2), (2, 3); case a adds mains 0 and 1,
    case b mains 0 to 3."""
    mains = {"a": range(2), "b": range(4), "c": range(0)}[_check_case(case)]
    coefficients: dict[Term, float] = {j: SIGNAL for j in mains}
    coefficients.update({(0, 1): SIGNAL, (0, 2): SIGNAL, (2, 3): SIGNAL})
    return PlantedModel.from_coefficients(coefficients)


def planted_model(model: TrueModel | str, case: str) -> PlantedModel:
    if TrueModel(model) is TrueModel.LINEAR:
        return linear_truth(case)
    return logistic_truth(case)


def gen_correlated_design(
    n: int,
    p: int,
    rho: float,
    seed: int,
    return_order: bool = False,
) -> Any:
    """Draw ``n`` independent rows whose columns are AR(1) correlated
    along a random order ``τ``, so ``corr(x_j, x_k) = ρ^|τ(j) − τ(k)|``.
    Columns come back standardized."""
    if not 0 <= rho < 1:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    if n < 2 or p < 1:
        raise DomainError(f"Need n ≥ 2 and p ≥ 1, got n={n}, p={p}")

    rng = np.random.default_rng(seed)
    tau = rng.permutation(p)
    noise = rng.standard_normal((n, p))

    Z = np.empty((n, p))
    Z[:, 0] = noise[:, 0]
    scale = np.sqrt(1.0 - rho**2)
    for position in range(1, p):
        Z[:, position] = rho * Z[:, position - 1] + scale * noise[:, position]

    X, _ = standardize_columns(Z[:, tau])
    if return_order:
        return X, tau
    return X


def _check_columns(X: np.ndarray, truth: PlantedModel) -> None:
    if X.shape[1] < truth.min_variables:
        raise DomainError(
            f"The true model needs at least {truth.min_variables} variables, got {X.shape[1]}"
        )


def gen_linear_response(
    X: np.ndarray,
    case: str,
    seed: int,
    noise: bool = True,
) -> np.ndarray:
    """``y = Xβ* + ε`` with ``ε ~ N(0, I)``; ``noise=False`` leaves out
    ``ε``."""
    truth = linear_truth(case)
    _check_columns(X, truth)
    y = truth.linear_predictor(X)
    if noise:
        y = y + np.random.default_rng(seed).standard_normal(X.shape[0])
    return y


def gen_logistic_response(
    X: np.ndarray,
    case: str,
    seed: int,
    trials: int = LOGISTIC_TRIALS,
) -> np.ndarray:
    """Success counts out of ``trials`` with ``logit π = Xβ*``."""
    truth = logistic_truth(case)
    _check_columns(X, truth)
    probabilities = expit(truth.linear_predictor(X))
    return np.random.default_rng(seed).binomial(trials, probabilities).astype(float)


@dataclass(frozen=True)
class SelectionMetrics:
    """True and false positives of a selected model against ``α*``."""

    tp_main: int
    fp_main: int
    tp_inter: int
    fp_inter: int
    tp_main_pct: float
    tp_inter_pct: float
    sh_violation: bool


def _percentage(hits: int, total: int) -> float:
    return 100.0 if total == 0 else 100.0 * hits / total


def evaluate_selection(alpha_hat: ModelAlpha, alpha_star: ModelAlpha) -> SelectionMetrics:
    """Count true and false positives among the selected mains and
    interactions. TP percentages are relative to ``|α*_M|`` and
    ``|α*_I|``."""
    true_mains = set(alpha_star.mains)
    true_interactions = set(alpha_star.interactions)
    tp_main = sum(j in true_mains for j in alpha_hat.mains)
    tp_inter = sum(pair in true_interactions for pair in alpha_hat.interactions)
    return SelectionMetrics(
        tp_main=tp_main,
        fp_main=len(alpha_hat.mains) - tp_main,
        tp_inter=tp_inter,
        fp_inter=len(alpha_hat.interactions) - tp_inter,
        tp_main_pct=_percentage(tp_main, len(true_mains)),
        tp_inter_pct=_percentage(tp_inter, len(true_interactions)),
        sh_violation=not check_strong_hierarchy(alpha_hat),
    )


_DEFAULTS = {
    TrueModel.LINEAR: {"n": 200, "p": 500, "replications": 100},
    TrueModel.LOGISTIC: {"n": 500, "p": 100, "replications": 100},
}
_FULL_SCALE = {
    TrueModel.LINEAR: {"n": 200, "p": 2000, "replications": 1000},
    TrueModel.LOGISTIC: {"n": 500, "p": 100, "replications": 1000},
}


@dataclass(frozen=True)
class SimConfig:
    """A simulation experiment. ``kappa_rule=None`` picks EBIC when
    ``p > n`` and BIC otherwise; ``gamma=None`` uses ``1/log n``."""

    model: TrueModel
    n: int
    p: int
    rho: float = 0.0
    case: str = "a"
    replications: int = 100
    seed: int = 0
    kappa_rule: str | None = None
    gamma: float | None = None
    restarts: int = 10
    rounds: int = 2
    full_scale: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "model", TrueModel(self.model))
        except ValueError:
            valid = ", ".join(model.value for model in TrueModel)
            raise ConfigError(f"Unknown model {self.model!r}; valid models: {valid}") from None
        if self.case not in _CASES:
            raise ConfigError(f"Unknown case {self.case!r}; valid cases: {', '.join(_CASES)}")
        for name in ("n", "p", "replications", "restarts", "rounds", "workers"):
            if (value := getattr(self, name)) < 1:
                raise ConfigError(f"'{name}' must be a positive integer, got {value}")
        if self.seed < 0:
            raise ConfigError(f"'seed' must be non-negative, got {self.seed}")
        if not 0 <= self.rho < 1:
            raise ConfigError(f"'rho' must lie in [0, 1), got {self.rho}")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError(f"'gamma' must be positive, got {self.gamma}")
        if self.p < self.truth.min_variables:
            raise ConfigError(
                f"The {self.model.value} model needs p ≥ {self.truth.min_variables}, got {self.p}"
            )
        if self.kappa_rule is not None:
            try:
                KappaRule.parse(self.kappa_rule)
            except DomainError as exc:
                raise ConfigError(str(exc)) from None

    @classmethod
    def for_model(
        cls,
        model: TrueModel | str,
        full_scale: bool = False,
        **overrides: Any,
    ) -> SimConfig:
        """The defaults of ``model`` (desk or full scale) with
        ``overrides`` applied."""
        try:
            kind = TrueModel(model)
        except ValueError:
            valid = ", ".join(model.value for model in TrueModel)
            raise ConfigError(f"Unknown model {model!r}; valid models: {valid}") from None
        defaults = (_FULL_SCALE if full_scale else _DEFAULTS)[kind]
        return cls(model=kind, full_scale=full_scale, **{**defaults, **overrides})

    @property
    def truth(self) -> PlantedModel:
        return planted_model(self.model, self.case)

    def resolve_kappa_rule(self) -> KappaRule:
        if self.kappa_rule is None:
            return default_kappa_rule(self.n, self.p)
        return KappaRule.parse(self.kappa_rule)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["model"] = self.model.value
        return data


@dataclass(frozen=True)
class ReplicationRecord:
    index: int
    seed: int
    alpha_hat: ModelAlpha | None
    alpha_star: ModelAlpha
    metrics: SelectionMetrics | None
    sure_screened: bool | None
    runtime: float = field(default=0.0, compare=False)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _model_to_dict(alpha: ModelAlpha | None, names: list[str]) -> Any:
    if alpha is None:
        return None
    return {
        "mains": [names[j] for j in alpha.mains],
        "interactions": [term_name(pair, names) for pair in alpha.interactions],
    }


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else float("nan")


@dataclass(frozen=True)
class SimReport:
    """Aggregated metrics over every successful replication."""

    config: SimConfig
    kappa: float
    lam: float
    tp_main_pct: float
    tp_inter_pct: float
    fp_main_mean: float
    fp_inter_mean: float
    sh_violation_pct: float
    sure_screening_pct: float
    failures: int
    per_replication: tuple[ReplicationRecord, ...] = field(repr=False)

    @classmethod
    def aggregate(
        cls,
        config: SimConfig,
        kappa_value: float,
        lam: float,
        records: list[ReplicationRecord],
    ) -> SimReport:
        succeeded = [record for record in records if not record.failed]
        metrics = [record.metrics for record in succeeded if record.metrics is not None]
        return cls(
            config=config,
            kappa=kappa_value,
            lam=lam,
            tp_main_pct=_mean([m.tp_main_pct for m in metrics]),
            tp_inter_pct=_mean([m.tp_inter_pct for m in metrics]),
            fp_main_mean=_mean([m.fp_main for m in metrics]),
            fp_inter_mean=_mean([m.fp_inter for m in metrics]),
            sh_violation_pct=_mean([100.0 * m.sh_violation for m in metrics]),
            sure_screening_pct=_mean([100.0 * bool(r.sure_screened) for r in succeeded]),
            failures=len(records) - len(succeeded),
            per_replication=tuple(records),
        )

    def to_dict(self, include_timings: bool = True) -> dict[str, Any]:
        names = [f"x{index + 1}" for index in range(self.config.p)]
        replications = []
        for record in self.per_replication:
            entry: dict[str, Any] = {
                "index": record.index,
                "seed": record.seed,
                "alpha_hat": _model_to_dict(record.alpha_hat, names),
                "alpha_star": _model_to_dict(record.alpha_star, names),
                "metrics": None if record.metrics is None else asdict(record.metrics),
                "sure_screened": record.sure_screened,
                "error": record.error,
            }
            if include_timings:
                entry["runtime"] = record.runtime
            replications.append(entry)

        return {
            "schema_version": 1,
            "config": self.config.to_dict(),
            "kappa": self.kappa,
            "lambda": self.lam,
            "tp_main_pct": self.tp_main_pct,
            "tp_inter_pct": self.tp_inter_pct,
            "fp_main_mean": self.fp_main_mean,
            "fp_inter_mean": self.fp_inter_mean,
            "sh_violation_pct": self.sh_violation_pct,
            "sure_screening_pct": self.sure_screening_pct,
            "failures": self.failures,
            "per_replication": replications,
        }

    def to_json(self, include_timings: bool = True) -> str:
        return dump_json(self.to_dict(include_timings))

    def write(self, path: Path | str, include_timings: bool = True) -> None:
        Path(path).write_text(self.to_json(include_timings) + "\n")


_TABLE_COLUMNS = (
    ("Method", "{}"),
    ("ρ", "{:.1f}"),
    ("Case", "{}"),
    ("TP_M%", "{:.1f}"),
    ("TP_I%", "{:.1f}"),
    ("#FP_M", "{:.3f}"),
    ("#FP_I", "{:.3f}"),
    ("SH viol%", "{:.1f}"),
    ("Sure%", "{:.1f}"),
    ("Failed", "{}"),
)


def format_table(*reports: SimReport) -> str:
    """Render reports as an aligned plain-text table, one row each."""
    rows = [[header for header, _ in _TABLE_COLUMNS]]
    for report in reports:
        values = (
            "SHL0",
            report.config.rho,
            f"({report.config.case})",
            report.tp_main_pct,
            report.tp_inter_pct,
            report.fp_main_mean,
            report.fp_inter_mean,
            report.sh_violation_pct,
            report.sure_screening_pct,
            report.failures,
        )
        rows.append([spec.format(value) for (_, spec), value in zip(_TABLE_COLUMNS, values)])

    widths = [max(len(row[column]) for row in rows) for column in range(len(_TABLE_COLUMNS))]
    lines = ["  ".join(cell.rjust(width) for cell, width in zip(row, widths)) for row in rows]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)


def replication_seeds(seed: int, index: int) -> tuple[int, int, int]:
    """Independent seeds for the design, the response and the search of
    replication ``index``."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    design, response, search = sequence.generate_state(3)
    return int(design), int(response), int(search)


def _dataset_for(config: SimConfig, design_seed: int, response_seed: int) -> Dataset:
    X = gen_correlated_design(config.n, config.p, config.rho, design_seed)
    if config.model is TrueModel.LINEAR:
        y = gen_linear_response(X, config.case, response_seed)
        return Dataset.from_arrays(X, y)
    y = gen_logistic_response(X, config.case, response_seed)
    return Dataset.from_arrays(X, y, trials=LOGISTIC_TRIALS)


def _family_for(config: SimConfig) -> ExponentialFamily:
    if config.model is TrueModel.LINEAR:
        return ExponentialFamily.gaussian()
    return ExponentialFamily.binomial(LOGISTIC_TRIALS)


def run_replication(task: tuple[SimConfig, int, float]) -> ReplicationRecord:
    """Generate one dataset, select with penalty ``lam`` and score the
    selection. Failures are recorded instead of raised."""
    config, index, lam = task
    design_seed, response_seed, search_seed = replication_seeds(config.seed, index)
    alpha_star = config.truth.alpha_star

    started = time.perf_counter()
    try:
        dataset = _dataset_for(config, design_seed, response_seed)
        search = Configuration(
            restarts=config.restarts,
            rounds=config.rounds,
            gamma=config.gamma,
            seed=search_seed % 2**31,
        )
        result = select(_family_for(config), dataset, lam, search)
    except Exception as exc:
        logger.warning("Replication %d failed: %s", index, exc)
        return ReplicationRecord(
            index=index,
            seed=design_seed,
            alpha_hat=None,
            alpha_star=alpha_star,
            metrics=None,
            sure_screened=None,
            runtime=time.perf_counter() - started,
            error=f"{type(exc).__name__}: {exc}",
        )

    sure_screened = set(alpha_star.mains) <= set(result.screen_sets[0])
    return ReplicationRecord(
        index=index,
        seed=design_seed,
        alpha_hat=result.alpha_hat,
        alpha_star=alpha_star,
        metrics=evaluate_selection(result.alpha_hat, alpha_star),
        sure_screened=sure_screened,
        runtime=time.perf_counter() - started,
    )


def run_experiment(config: SimConfig) -> SimReport:
    """Run every replication of ``config`` with ``λ = κ/n`` and aggregate
    the selection metrics."""
    kappa_value = kappa(config.resolve_kappa_rule(), config.n, config.p)
    lam = lambda_closed_form(kappa_value, config.n)
    logger.info(
        "Running %d replications of the %s model, case %s (κ=%.4g, λ=%.4g)",
        config.replications,
        config.model.value,
        config.case,
        kappa_value,
        lam,
    )

    tasks = [(config, index, lam) for index in range(config.replications)]
    records = run_tasks(run_replication, tasks, workers=config.workers)

    failures = sum(record.failed for record in records)
    logger.info(
        "%s",
        dump_stats({"succeeded": len(records) - failures, "failed": failures}),
    )
    return SimReport.aggregate(config, kappa_value, lam, records)
