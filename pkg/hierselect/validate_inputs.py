from __future__ import annotations

import configparser
from argparse import Namespace
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable

if TYPE_CHECKING:
    from hierselect.simulation import SimConfig

_SIM_SECTION = "simulation"


class ConfigError(ValueError):
    """An invalid option or configuration file."""


def validate_main_inputs(options: Namespace) -> None:
    """Validates options parsed from the ``main`` runner.

    Note
    ----
    A ``--trials`` column is only meaningful for the binomial family; it
    is rejected for the others.
    """
    if (source := getattr(options, "src", None)) is not None:
        if not source.exists():
            raise ConfigError(f"Given input '{source!s}' doesn't exist")

    for name in ("restarts", "rounds", "threads"):
        value = getattr(options, name, None)
        if value is not None and value < 1:
            raise ConfigError(f"--{name} must be a positive integer, got {value}")

    if (gamma := getattr(options, "gamma", None)) is not None and not gamma > 0:
        raise ConfigError(f"--gamma must be positive, got {gamma}")

    if (lam := getattr(options, "lam", None)) is not None and not lam >= 0:
        raise ConfigError(f"--lambda must be non-negative, got {lam}")

    family = getattr(options, "family", None)
    if getattr(options, "trials", None) is not None and family != "binomial":
        raise ConfigError(f"--trials can only be used with the binomial family, not {family}")


def _as_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in {"1", "yes", "true", "on"}:
        return True
    elif lowered in {"0", "no", "false", "off"}:
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_float(value: str) -> float | None:
    if value.strip().lower() in {"", "none", "default"}:
        return None
    return float(value)


_SIM_KEYS: dict[str, Callable[[str], Any]] = {
    "model": str.strip,
    "n": int,
    "p": int,
    "rho": float,
    "case": str.strip,
    "replications": int,
    "seed": int,
    "kappa": str.strip,
    "gamma": _optional_float,
    "restarts": int,
    "rounds": int,
    "full_scale": _as_bool,
    "workers": int,
}


def _read_sections(path: Path) -> configparser.ConfigParser:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"Can't read configuration file '{path!s}': {exc}") from None

    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), default_section="__defaults__"
    )
    if not text.lstrip().startswith("["):
        text = f"[{_SIM_SECTION}]\n" + text
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"Malformed configuration file '{path!s}': {exc}") from None
    return parser


def load_sim_config(path: Path | str) -> SimConfig:
    """Read a simulation configuration from a flat ``key = value`` file.

    The ``[simulation]`` header is optional. Keys that aren't given fall
    back to the defaults of the chosen ``model`` (and ``full_scale``).
    """
    from hierselect.simulation import SimConfig

    path = Path(path)
    parser = _read_sections(path)
    if parser.sections() != [_SIM_SECTION]:
        raise ConfigError(
            f"Expected a single [{_SIM_SECTION}] section in '{path!s}', "
            f"got {parser.sections()}"
        )

    raw = dict(parser[_SIM_SECTION])
    if unknown := sorted(set(raw) - set(_SIM_KEYS)):
        raise ConfigError(
            f"Unknown keys in '{path!s}': {', '.join(unknown)} "
            f"(valid keys: {', '.join(_SIM_KEYS)})"
        )

    values: dict[str, Any] = {}
    for key, text in raw.items():
        try:
            values[key] = _SIM_KEYS[key](text)
        except ValueError:
            raise ConfigError(f"Invalid value for {key!r} in '{path!s}': {text!r}") from None

    if "model" not in values:
        raise ConfigError(f"Missing required key 'model' in '{path!s}'")
    if "kappa" in values:
        values["kappa_rule"] = values.pop("kappa")
    return SimConfig.for_model(**values)
