from __future__ import annotations

import json
import math

import numpy as np
import pytest
from conftest import make_gaussian

from hierselect.common import dump_json
from hierselect.context import Configuration
from hierselect.core import select
from hierselect.glm import ExponentialFamily, fit_mle
from hierselect.model import ModelAlpha
from hierselect.report import (
    SCHEMA_VERSION,
    FitReport,
    format_screen,
    related_models,
    screen_report,
)
from hierselect.screening import ScreenMethod, ScreenResult, assis_screen

GAUSSIAN = ExponentialFamily.gaussian()


@pytest.fixture
def report():
    dataset = make_gaussian(n=120, p=6, terms={0: 1.5, 2: 1.0, (0, 2): 1.5}, seed=1)
    kappa_value = math.log(dataset.n)
    selection = select(
        GAUSSIAN, dataset, kappa_value / dataset.n, Configuration(restarts=3), kappa=kappa_value
    )
    return dataset, FitReport.build(GAUSSIAN, dataset, selection, kappa_rule="bic", seed=0)


def test_fit_report_dict(report):
    dataset, fit_report = report
    data = json.loads(fit_report.to_json())
    selection = fit_report.selection

    assert data["schema_version"] == SCHEMA_VERSION == 1
    assert data["family"] == "gaussian"
    assert (data["n"], data["p"]) == (120, 6)
    assert data["kappa_rule"] == "bic"
    assert data["lambda"] == pytest.approx(math.log(120) / 120)
    assert {"x1", "x3"} <= set(data["selected"]["mains"])
    assert "x1:x3" in data["selected"]["interactions"]
    assert [entry["term"] for entry in data["coefficients"]] == [
        dataset.term_name(term) for term in selection.alpha_hat.terms
    ]
    assert data["gic"] == pytest.approx(-2 * selection.fit.loglik + math.log(120) * selection.fit.df)
    assert data["deviance_explained"] == pytest.approx(
        (data["null_deviance"] - data["deviance"]) / data["null_deviance"]
    )
    assert 0 < data["deviance_explained"] < 1
    assert len(data["restart_objectives"]) == 6
    assert len(data["screen_sets"]) == 2
    assert len(data["related_models"]) == selection.alpha_hat.size


def test_fit_report_text(report):
    _, fit_report = report
    text = fit_report.format_text()
    assert text.startswith("Family: gaussian (n=120, p=6)")
    assert "x1:x3" in text
    assert "Null deviance" in text
    assert "GIC:" in text
    assert "Deviance explained:" in text


def test_fit_report_write(report, tmp_path):
    _, fit_report = report
    path = tmp_path / "report.json"
    fit_report.write(path)
    assert json.loads(path.read_text()) == fit_report.to_dict()


def test_related_models():
    dataset = make_gaussian(n=100, p=4, terms={0: 2.0, 1: 0.05, (0, 1): 2.0}, seed=2)
    fit = fit_mle(GAUSSIAN, dataset, ModelAlpha((0, 1), ((0, 1),)))
    related = {model.term: model for model in related_models(GAUSSIAN, dataset, fit, math.log(100))}

    assert set(related) == {0, 1, (0, 1)}
    assert all(model.deviance_increase >= 0 for model in related.values())
    assert related[(0, 1)].exceeds_kappa
    assert related[(0, 1)].name == "x1:x2"

    without_pair = fit_mle(GAUSSIAN, dataset, ModelAlpha((0, 1)))
    assert related[(0, 1)].deviance == pytest.approx(without_pair.deviance)
    assert related[(0, 1)].deviance_increase == pytest.approx(
        (without_pair.deviance - fit.deviance) / fit.phi_hat
    )

    assert all(model.exceeds_kappa is None for model in related_models(GAUSSIAN, dataset, fit))


def test_screen_report():
    dataset = make_gaussian(n=80, p=8, terms={(1, 5): 2.0}, seed=3)
    result = assis_screen(GAUSSIAN, dataset, ModelAlpha(), gamma=0.05)
    data = screen_report(dataset, result)

    assert data["schema_version"] == 1
    assert data["method"] == "assis"
    assert data["base_model"] == "∅"
    assert data["d_gamma"] == 4
    assert len(data["shrunk"]) == 4
    statistics = [entry["statistic"] for entry in data["statistics"]]
    assert statistics == sorted(statistics, reverse=True)
    assert {entry["variable"] for entry in data["statistics"][:2]} == {"x2", "x6"}

    text = format_screen(dataset, result, limit=3)
    assert "d_gamma=4" in text
    assert "... 5 more" in text
    assert np.isfinite(statistics).all()


def test_screen_json_has_no_special_floats():
    dataset = make_gaussian(n=40, p=6, seed=2)
    stats = {j: float(j) for j in range(dataset.p)}
    stats[4] = float("-inf")
    result = ScreenResult(
        base_alpha=ModelAlpha(),
        stats=stats,
        shrunk=(5, 3),
        d_gamma=2,
        method=ScreenMethod.ALRSIS,
    )

    def reject(token):
        raise ValueError(f"unexpected {token}")

    data = json.loads(dump_json(screen_report(dataset, result)), parse_constant=reject)
    assert data["statistics"][-1] == {"variable": "x5", "statistic": None}
