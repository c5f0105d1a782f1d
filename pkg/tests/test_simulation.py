from __future__ import annotations

import json

import numpy as np
import pytest

from hierselect.common import Dataset
from hierselect.glm import DomainError, ExponentialFamily, fit_mle
from hierselect.model import ModelAlpha
from hierselect.simulation import (
    ReplicationRecord,
    SimConfig,
    TrueModel,
    evaluate_selection,
    format_table,
    gen_correlated_design,
    gen_linear_response,
    gen_logistic_response,
    linear_truth,
    logistic_truth,
    replication_seeds,
    run_experiment,
    run_replication,
)
from hierselect.validate_inputs import ConfigError


def test_independent_design():
    X = gen_correlated_design(500, 20, 0.0, seed=1)
    corr = np.corrcoef(X, rowvar=False)
    np.fill_diagonal(corr, 0.0)
    assert np.abs(corr).max() < 0.2
    assert Dataset(y=np.zeros(500), X=X, names=tuple(map(str, range(20)))).is_standardized()


def test_ar1_design():
    X, tau = gen_correlated_design(2000, 10, 0.8, seed=2, return_order=True)
    # Column j holds position tau[j] of the AR(1) chain.
    position = np.argsort(tau)
    for step in range(9):
        j, k = position[step], position[step + 1]
        assert np.corrcoef(X[:, j], X[:, k])[0, 1] == pytest.approx(0.8, abs=0.1)
    j, k = position[0], position[2]
    assert np.corrcoef(X[:, j], X[:, k])[0, 1] == pytest.approx(0.64, abs=0.1)


def test_design_is_seeded():
    np.testing.assert_array_equal(
        gen_correlated_design(50, 8, 0.5, seed=3), gen_correlated_design(50, 8, 0.5, seed=3)
    )
    assert not np.array_equal(
        gen_correlated_design(50, 8, 0.5, seed=3), gen_correlated_design(50, 8, 0.5, seed=4)
    )


@pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5])
def test_design_domain(rho):
    with pytest.raises(DomainError):
        gen_correlated_design(50, 8, rho, seed=0)


@pytest.mark.parametrize(
    "case, mains",
    [("a", (0, 1, 2, 3, 4, 5)), ("b", (0, 1, 2, 3, 4, 5)), ("c", (0, 3, 4, 5))],
)
def test_linear_truth(case, mains):
    truth = linear_truth(case)
    assert truth.alpha_star == ModelAlpha(mains, ((0, 3), (0, 4), (4, 5)))
    assert truth.min_variables == 6


def test_linear_truth_coefficients():
    assert set(linear_truth("a").coefficients) == {0, 1, 2, 3, (0, 3), (0, 4), (4, 5)}
    assert set(linear_truth("c").coefficients) == {(0, 3), (0, 4), (4, 5)}
    assert set(linear_truth("b").coefficients.values()) == {3.0}


@pytest.mark.parametrize("case, main_count", [("a", 2), ("b", 4), ("c", 0)])
def test_logistic_truth(case, main_count):
    truth = logistic_truth(case)
    assert truth.alpha_star == ModelAlpha((0, 1, 2, 3), ((0, 1), (0, 2), (2, 3)))
    assert sum(not isinstance(term, tuple) for term in truth.coefficients) == main_count


def test_noiseless_linear_response():
    X = gen_correlated_design(200, 10, 0.0, seed=5)
    y = gen_linear_response(X, "b", seed=6, noise=False)
    dataset = Dataset(y=y, X=X, names=tuple(f"x{j + 1}" for j in range(10)))
    fit = fit_mle(ExponentialFamily.gaussian(), dataset, linear_truth("b").alpha_star)
    assert fit.deviance == pytest.approx(0.0, abs=1e-12)


def test_hierarchy_stress_case():
    X = gen_correlated_design(2000, 8, 0.0, seed=7)
    y = gen_linear_response(X, "c", seed=8)
    assert abs(np.corrcoef(y, X[:, 1])[0, 1]) < 0.1
    assert abs(np.corrcoef(y, X[:, 0] * X[:, 3])[0, 1]) > 0.4


def test_linear_response_variance():
    X = gen_correlated_design(5000, 8, 0.0, seed=9)
    y = gen_linear_response(X, "a", seed=10)
    # Seven terms of coefficient 3 plus unit noise.
    assert np.var(y) == pytest.approx(7 * 9 + 1, rel=0.1)


def test_logistic_response():
    X = gen_correlated_design(2000, 6, 0.0, seed=11)
    y = gen_logistic_response(X, "b", seed=12)
    assert y.min() >= 0 and y.max() <= 10
    assert np.array_equal(y, np.round(y))

    zeros = np.zeros((2000, 6))
    assert gen_logistic_response(zeros, "a", seed=13).mean() / 10 == pytest.approx(0.5, abs=0.05)


def test_logistic_coefficients_within_errors():
    covered = 0
    truth = logistic_truth("b")
    for seed in range(20):
        X = gen_correlated_design(500, 6, 0.0, seed=seed)
        y = gen_logistic_response(X, "b", seed=100 + seed)
        dataset = Dataset(y=y, X=X, names=tuple(f"x{j + 1}" for j in range(6)), trials=np.full(500, 10.0))
        fit = fit_mle(ExponentialFamily.binomial(10), dataset, truth.alpha_star)
        for term, value in truth.coefficients.items():
            covered += abs(fit.beta[term] - value) <= 2 * fit.std_errors[term]
    assert covered >= 0.9 * 20 * len(truth.coefficients)


@pytest.mark.parametrize("response", [gen_linear_response, gen_logistic_response])
def test_response_needs_columns(response):
    with pytest.raises(DomainError):
        response(np.zeros((10, 3)), "a", seed=0)


def test_evaluate_selection():
    star = linear_truth("a").alpha_star
    perfect = evaluate_selection(star, star)
    assert (perfect.tp_main_pct, perfect.tp_inter_pct) == (100.0, 100.0)
    assert (perfect.fp_main, perfect.fp_inter) == (0, 0)
    assert not perfect.sh_violation

    empty = evaluate_selection(ModelAlpha(), star)
    assert (empty.tp_main_pct, empty.tp_inter_pct, empty.fp_main, empty.fp_inter) == (0.0, 0.0, 0, 0)

    noisy = evaluate_selection(ModelAlpha((*star.mains, 9), star.interactions), star)
    assert noisy.fp_main == 1
    assert noisy.tp_main == 6

    broken = evaluate_selection(ModelAlpha((0,), ((0, 3),)), star)
    assert broken.sh_violation
    assert broken.tp_main + broken.fp_main == 1
    assert broken.tp_inter + broken.fp_inter == 1


def test_sim_config_defaults():
    linear = SimConfig.for_model("linear")
    assert (linear.n, linear.p, linear.replications) == (200, 500, 100)
    full = SimConfig.for_model("linear", full_scale=True)
    assert (full.n, full.p, full.replications) == (200, 2000, 1000)
    logistic = SimConfig.for_model(TrueModel.LOGISTIC, p=20)
    assert (logistic.n, logistic.p) == (500, 20)
    assert logistic.resolve_kappa_rule().name == "bic"
    assert linear.resolve_kappa_rule().name == "ebic"


@pytest.mark.parametrize(
    "overrides",
    [
        {"replications": 0},
        {"case": "d"},
        {"rho": 1.0},
        {"seed": -1},
        {"gamma": 0.0},
        {"p": 5},
        {"kappa_rule": "mdl"},
        {"model": "probit"},
    ],
)
def test_sim_config_errors(overrides):
    options = {"model": "linear", "n": 50, "p": 10, **overrides}
    with pytest.raises(ConfigError):
        SimConfig(**options)


def test_replication_seeds():
    assert replication_seeds(0, 3) == replication_seeds(0, 3)
    assert replication_seeds(0, 3) != replication_seeds(0, 4)
    assert replication_seeds(0, 3) != replication_seeds(1, 3)
    assert len(set(replication_seeds(5, 0))) == 3


def test_run_replication():
    config = SimConfig(model="linear", n=100, p=12, case="a", replications=1, restarts=2)
    record = run_replication((config, 0, np.log(100) / 100))
    assert isinstance(record, ReplicationRecord)
    assert not record.failed
    assert record.metrics.tp_main_pct == 100.0
    assert record.metrics.tp_inter_pct == 100.0
    assert not record.metrics.sh_violation
    assert record.sure_screened
    assert record.runtime > 0
    assert record == run_replication((config, 0, np.log(100) / 100))


def test_failed_replication():
    config = SimConfig(model="linear", n=100, p=12, replications=1)
    record = run_replication((config, 0, -1.0))
    assert record.failed
    assert record.alpha_hat is None
    assert record.error.startswith("DomainError")


def test_run_experiment():
    config = SimConfig(model="logistic", n=150, p=8, case="b", replications=2, restarts=2)
    report = run_experiment(config)

    assert report.failures == 0
    assert report.sh_violation_pct == 0.0
    assert len(report.per_replication) == 2
    for percentage in (report.tp_main_pct, report.tp_inter_pct, report.sure_screening_pct):
        assert 0.0 <= percentage <= 100.0
    assert report.fp_main_mean >= 0 and report.fp_inter_mean >= 0
    assert report.lam == pytest.approx(report.kappa / 150)

    assert run_experiment(config) == report

    data = json.loads(report.to_json())
    assert data["schema_version"] == 1
    assert data["config"]["model"] == "logistic"
    assert len(data["per_replication"]) == 2
    assert "runtime" in data["per_replication"][0]
    assert "runtime" not in report.to_dict(include_timings=False)["per_replication"][0]

    table = format_table(report)
    header, rule, row = table.splitlines()
    assert header.split()[0] == "Method"
    assert set(rule.replace(" ", "")) == {"-"}
    assert row.split()[:3] == ["SHL0", "0.0", "(b)"]
