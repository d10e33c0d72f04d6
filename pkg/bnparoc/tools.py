# -*- coding: utf-8 -*-
"""
PURPOSE:
    A series of accessories used throughout the covariate-adjusted ROC
    tools: the study dataset container, CSV ingestion, argument checks and
    the package's error classes.
"""

from dataclasses import dataclass, field
import numpy as np
import pandas as pd


class DataValidationError(ValueError):
    """
    Raised when input data cannot be used as given (missing columns,
    malformed rows, unknown factor levels, degenerate knots).
    """


class NumericalFailure(ArithmeticError):
    """
    Raised when a numerical step cannot be rescued, e.g. a posterior
    precision matrix that stays non positive-definite after jitter.

    Parameters
    ----------
    message : str
        Human readable description
    details : dict
        Diagnostic values (component index, jitter, ...) that the command
        line interface writes to its diagnostic file
    """
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = dict(details or {})


@dataclass
class Group:
    """
    Test outcomes and covariates of one disease-status group.
    """
    y: np.ndarray
    covariates: pd.DataFrame

    def __len__(self):
        return len(self.y)


@dataclass
class Dataset:
    """
    Test outcomes, covariate records and disease-status labels for one
    study.

    Parameters
    ----------
    y : array-like
        Test outcomes
    status : array-like
        Disease status, True (or 1) for diseased subjects
    covariates : pd.DataFrame
        One row per subject, one column per covariate. May have no columns.
    """
    y: np.ndarray
    status: np.ndarray
    covariates: pd.DataFrame = field(default=None)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.status = np.asarray(self.status).astype(bool).ravel()
        if self.covariates is None:
            self.covariates = pd.DataFrame(index=range(len(self.y)))
        self.covariates = pd.DataFrame(self.covariates).reset_index(drop=True)

        if len(self.status) != len(self.y):
            raise DataValidationError(
                '\ny and status have different lengths'
            )
        if len(self.covariates.index) != len(self.y):
            raise DataValidationError(
                '\ncovariate table and y have different lengths'
            )
        if not np.all(np.isfinite(self.y)):
            raise DataValidationError('\nNon-finite test outcome')

    @property
    def healthy(self):
        """
        The nondiseased group
        """
        return self._group(~self.status)

    @property
    def diseased(self):
        """
        The diseased group
        """
        return self._group(self.status)

    def _group(self, mask):
        return Group(
            y=self.y[mask],
            covariates=self.covariates.loc[mask].reset_index(drop=True)
        )

    @classmethod
    def from_groups(cls, healthy, diseased):
        """
        Stacks a nondiseased and a diseased group into one dataset.
        """
        covariates = pd.concat(
            [healthy.covariates, diseased.covariates],
            ignore_index=True
        )
        return cls(
            y=np.concatenate([healthy.y, diseased.y]),
            status=np.concatenate([
                np.zeros(len(healthy.y), dtype=bool),
                np.ones(len(diseased.y), dtype=bool)
            ]),
            covariates=covariates
        )

    def to_frame(self, response='y', status='status'):
        frame = self.covariates.copy()
        frame.insert(0, status, self.status.astype(int))
        frame.insert(0, response, self.y)
        return frame


def _data_lines(path):
    """
    File line numbers of the non-blank lines, header first. pandas skips
    blank lines, so row i of a frame sits on line _data_lines(path)[i + 1].
    """
    with open(path, encoding='utf-8') as file:
        return [
            number for number, text in enumerate(file, start=1)
            if text.strip()
        ]


def read_dataset(
        path,
        tag=1,
        response='y',
        status='status'
):
    """
    Reads a study CSV file. The file needs a header row, a response
    column, a status column and one column per covariate.

    Parameters
    ----------
    path : str
        Location of the CSV file (UTF-8, '.' decimal separator)
    tag : int or str
        Value of the status column that marks a diseased subject. All
        other values are nondiseased.
    response : str
        Name of the test outcome column
    status : str
        Name of the disease status column

    Returns
    -------
    Dataset
    """
    try:
        frame = pd.read_csv(path, encoding='utf-8')
    except pd.errors.ParserError as err:
        raise DataValidationError('\nMalformed CSV: ' + str(err))
    except pd.errors.EmptyDataError:
        raise DataValidationError('\n' + str(path) + ' is empty')

    for column in (response, status):
        if column not in frame.columns:
            raise DataValidationError(
                '\nColumn \'' + column + '\' not found'
            )

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    bad_rows = numeric.isna().any(axis=1) | frame.isna().any(axis=1)
    if bad_rows.any():
        row = int(np.flatnonzero(bad_rows.values)[0])
        line = _data_lines(path)[row + 1]
        raise DataValidationError(
            '\nNon-numeric or missing value on line {0}'.format(line)
        )

    diseased = (numeric[status] == float(tag)).values
    covariates = numeric.drop(columns=[response, status])
    return Dataset(
        y=numeric[response].values,
        status=diseased,
        covariates=covariates
    )


def write_dataset(
        dataset,
        path
):
    dataset.to_frame().to_csv(path, index=False)


def check_probability(
        value,
        name,
        include_lower=False,
        include_upper=False
):
    """
    Makes sure that value is a number inside (0, 1), optionally including
    either endpoint.

    Returns
    -------
    float
        The value, as a float
    """
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise TypeError('\nNon-numeric ' + name)

    lower_ok = value >= 0 if include_lower else value > 0
    upper_ok = value <= 1 if include_upper else value < 1
    if not (lower_ok and upper_ok and np.isfinite(value)):
        raise ValueError(
            '\n{0} outside of {1}0, 1{2}'.format(
                name,
                '[' if include_lower else '(',
                ']' if include_upper else ')'
            )
        )
    return value


def check_positive(
        value,
        name
):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise TypeError('\nNon-numeric ' + name)
    if not (value > 0 and np.isfinite(value)):
        raise ValueError('\n' + name + ' must be > 0')
    return value
