from __future__ import annotations

import logging
import sys
from argparse import ArgumentParser, Namespace
from dataclasses import replace
from pathlib import Path

from hierselect.common import dump_json
from hierselect.context import Configuration, RunConfig
from hierselect.core import Session
from hierselect.glm import DomainError, ExponentialFamily, FamilyKind, NotConverged
from hierselect.ingest import ParseError, ingest_csv
from hierselect.internal.linalg import SingularDesign
from hierselect.model import ModelAlpha
from hierselect.report import FitReport, format_screen, screen_report
from hierselect.runner import _determine_workers
from hierselect.screening import DegenerateWeights
from hierselect.simulation import format_table, run_experiment
from hierselect.tuning import KappaRule, default_kappa_rule, kappa, lambda_closed_form
from hierselect.validate_inputs import ConfigError, load_sim_config, validate_main_inputs

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_INPUT = 2


def _add_search_options(parser: ArgumentParser) -> None:
    parser.add_argument("src", type=Path)
    parser.add_argument(
        "--family",
        choices=[kind.value for kind in FamilyKind],
        default=FamilyKind.GAUSSIAN.value,
    )
    parser.add_argument("--response", default="y")
    parser.add_argument("--trials")
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", action="store_true", default=False)
    parser.add_argument("--out", type=Path)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="hierselect")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="screen and select a model from a CSV file")
    _add_search_options(fit)
    fit.add_argument("--kappa", help="bic, hbic4, ebic, aic, hbic or a positive number")
    fit.add_argument("--lambda", dest="lam", type=float)
    fit.add_argument("--restarts", type=int, default=10)
    fit.add_argument("--rounds", type=int, default=2)
    fit.add_argument("--screening", choices=["assis", "alrsis", "none"], default="assis")
    fit.add_argument("--strategy", choices=["f1ls", "b1ls", "exhaustive"], default="f1ls")
    fit.add_argument("--max-size", type=int)
    fit.add_argument("--threads", type=int, default=1)

    screen = commands.add_parser("screen", help="run a single screen from the empty model")
    _add_search_options(screen)
    screen.add_argument("--method", choices=["assis", "alrsis"], default="assis")

    simulate = commands.add_parser("simulate", help="run a simulation configuration file")
    simulate.add_argument("src", type=Path)
    simulate.add_argument("--out", type=Path)
    simulate.add_argument("--threads", type=int)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--no-timings", action="store_true", default=False)
    return parser


def _run_config(options: Namespace) -> RunConfig:
    search = Configuration(
        restarts=options.restarts,
        rounds=options.rounds,
        gamma=options.gamma,
        seed=options.seed,
        max_size=options.max_size,
        screening=options.screening,
        strategy=options.strategy,
        workers=_determine_workers(options.threads),
    )
    return RunConfig(
        family=options.family,
        response_column=options.response,
        trials_column=options.trials,
        kappa_rule=options.kappa,
        lambda_override=options.lam,
        search=search,
    )


def _family(config: RunConfig, trials: object) -> ExponentialFamily:
    return ExponentialFamily.from_name(config.family, trials)


def _emit(text: str, out: Path | None, payload: str | None) -> None:
    print(text)
    if out is not None and payload is not None:
        out.write_text(payload + "\n")


def cmd_fit(options: Namespace) -> int:
    config = _run_config(options)
    dataset = ingest_csv(options.src, config.response_column, config.trials_column)
    family = _family(config, dataset.trials)

    rule = None
    kappa_value = None
    if config.lambda_override is not None:
        lam = config.lambda_override
    else:
        rule = (
            default_kappa_rule(dataset.n, dataset.p)
            if config.kappa_rule is None
            else KappaRule.parse(config.kappa_rule)
        )
        kappa_value = kappa(rule, dataset.n, dataset.p)
        lam = lambda_closed_form(kappa_value, dataset.n)

    session = Session(family, dataset, config.search)
    selection = session.select(lam, kappa_value)
    report = FitReport.build(
        family,
        dataset,
        selection,
        kappa_rule=None if rule is None else rule.name,
        seed=config.search.seed,
        **config.search.fit_options,
    )

    payload = report.to_json()
    _emit(payload if options.json else report.format_text(), options.out, payload)
    return EXIT_OK


def cmd_screen(options: Namespace) -> int:
    dataset = ingest_csv(options.src, options.response, options.trials)
    family = ExponentialFamily.from_name(options.family, dataset.trials)
    search = Configuration(gamma=options.gamma, seed=options.seed, screening=options.method)
    result = Session(family, dataset, search).screen(ModelAlpha.empty())

    payload = dump_json(screen_report(dataset, result))
    _emit(payload if options.json else format_screen(dataset, result), options.out, payload)
    return EXIT_OK


def cmd_simulate(options: Namespace) -> int:
    config = load_sim_config(options.src)
    overrides = {}
    if options.threads is not None:
        overrides["workers"] = options.threads
    if options.seed is not None:
        overrides["seed"] = options.seed
    if overrides:
        config = replace(config, **overrides)

    report = run_experiment(config)
    print(format_table(report))
    if options.out is not None:
        report.write(options.out, include_timings=not options.no_timings)
    return EXIT_OK


_COMMANDS = {"fit": cmd_fit, "screen": cmd_screen, "simulate": cmd_simulate}


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    options = parser.parse_args(argv)
    _configure_logging(options.verbose)

    try:
        validate_main_inputs(options)
        return _COMMANDS[options.command](options)
    except (ConfigError, ParseError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularDesign, NotConverged, DegenerateWeights) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
