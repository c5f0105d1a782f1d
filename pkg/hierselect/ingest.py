from __future__ import annotations

from os import PathLike
from typing import Union

import numpy as np
import pandas as pd

from hierselect.common import Dataset
from hierselect.validate_inputs import ConfigError

PathType = Union[str, "PathLike[str]"]


class ParseError(ValueError):
    """A cell of the input file that isn't a number. ``row`` is the
    1-based data row (the header not counted)."""

    def __init__(self, message: str, row: int, column: str) -> None:
        super().__init__(message)
        self.row = row
        self.column = column


def _numeric(frame: pd.DataFrame) -> pd.DataFrame:
    converted = {}
    for column in frame.columns:
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce")
        if (invalid := values.isna() | ~np.isfinite(values)).any():
            position = int(np.flatnonzero(invalid.to_numpy())[0])
            cell = raw.iloc[position]
            problem = "Missing value" if cell == "" else f"Non-numeric value {cell!r}"
            raise ParseError(
                f"{problem} in column {column!r}, row {position + 1}",
                row=position + 1,
                column=column,
            )
        converted[column] = values.astype(float)
    return pd.DataFrame(converted, index=frame.index)


def ingest_csv(
    path: PathType,
    response_column: str,
    trials_column: str | None = None,
) -> Dataset:
    """Read a CSV file with a header row into a :py:class:`Dataset`.

    Every column other than the response (and the trials column, for
    binomial data) becomes a standardized main effect named after its
    header. Constant columns are dropped with a warning.
    """
    try:
        # The header is read as a data row so duplicate names survive.
        frame = pd.read_csv(
            path, dtype=str, header=None, keep_default_na=False, skipinitialspace=True
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ConfigError(f"Can't read '{path!s}': {exc}") from None

    header = [str(column).strip() for column in frame.iloc[0]]
    frame = frame.iloc[1:].reset_index(drop=True)
    frame.columns = pd.Index(header)
    if frame.columns.duplicated().any():
        duplicates = sorted(set(frame.columns[frame.columns.duplicated()]))
        raise ConfigError(f"Duplicate columns in '{path!s}': {', '.join(duplicates)}")

    special = [response_column] + ([trials_column] if trials_column is not None else [])
    for column in special:
        if column not in frame.columns:
            raise ConfigError(
                f"Column {column!r} not found in '{path!s}'; "
                f"available columns: {', '.join(frame.columns)}"
            )
    if trials_column == response_column:
        raise ConfigError("The response and trials columns must differ")

    predictors = [column for column in frame.columns if column not in special]
    if not predictors:
        raise ConfigError(f"'{path!s}' has no predictor columns")
    if frame.empty:
        raise ConfigError(f"'{path!s}' has no data rows")

    numeric = _numeric(frame)
    trials = None if trials_column is None else numeric[trials_column].to_numpy()
    return Dataset.from_arrays(
        numeric[predictors].to_numpy(),
        numeric[response_column].to_numpy(),
        names=predictors,
        trials=trials,
    )
