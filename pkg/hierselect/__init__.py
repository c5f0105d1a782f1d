from __future__ import annotations

import logging

from hierselect.common import ConstantColumnWarning, Dataset
from hierselect.context import Configuration, RunConfig
from hierselect.core import SelectionResult, Session, select
from hierselect.glm import (
    DomainError,
    ExponentialFamily,
    FitResult,
    NotConverged,
    SingularDesign,
    fit_mle,
)
from hierselect.model import ModelAlpha, check_strong_hierarchy
from hierselect.moves import (
    AddInteraction,
    AddMain,
    InvalidMove,
    RemoveInteraction,
    RemoveMain,
    apply_move,
)
from hierselect.screening import ScreenResult, alrsis_screen, assis_screen
from hierselect.tuning import KappaRule, gic, kappa, lambda_closed_form

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())


def _check_asserts():
    import sys
    import warnings

    if sys.flags.optimize >= 1:
        warnings.warn(
            "The search re-checks strong hierarchy of every selected "
            "model with assert statements, but the current session "
            "disables them with -O/-OO options.",
            stacklevel=3,
        )


_check_asserts()
