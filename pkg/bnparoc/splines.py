# -*- coding: utf-8 -*-
"""
PURPOSE:
    Cubic B-spline bases with quantile knots, and construction of the
    design rows z of an additive model specification (linear terms, smooth
    terms, factor-by-curve interactions, binary factors).

    Knots are computed from nondiseased covariates and reused to evaluate
    the basis at diseased covariates. Points outside the knot range are
    clamped to the nearest boundary before evaluation.
"""

from dataclasses import dataclass, field
import re
import warnings
import numpy as np
import pandas as pd
from scipy.interpolate import BSpline
from .tools import DataValidationError

DEGREE = 3
BOUNDARY_CONVENTION = (
    'clamped cubic, boundary knots repeated 4 times, '
    'first basis function dropped, out-of-range points clamped'
)


@dataclass(frozen=True)
class KnotSet:
    """
    Boundary and interior knots of a cubic spline.

    Parameters
    ----------
    low : float
        Lower boundary knot
    high : float
        Upper boundary knot
    interior : tuple
        Sorted interior knots, strictly inside (low, high)
    """
    low: float
    high: float
    interior: tuple = ()

    def __post_init__(self):
        points = np.concatenate([[self.low], self.interior, [self.high]])
        if not np.all(np.diff(points) > 0):
            raise DataValidationError(
                '\nKnots must be strictly increasing'
            )

    @property
    def n_interior(self):
        return len(self.interior)

    @property
    def dimension(self):
        """
        Number of basis columns used in a design matrix
        """
        return self.n_interior + DEGREE

    @property
    def knot_vector(self):
        """
        Full clamped knot vector
        """
        return np.concatenate([
            np.repeat(self.low, DEGREE + 1),
            self.interior,
            np.repeat(self.high, DEGREE + 1)
        ])

    def to_dict(self):
        return {
            'low': float(self.low),
            'high': float(self.high),
            'interior': [float(knot) for knot in self.interior]
        }


def knot_sequence(values, n_interior):
    """
    Places boundary knots at the extremes of the data and interior knot k
    at the k/(K+1) empirical quantile.

    Parameters
    ----------
    values : array-like
        Covariate values
    n_interior : int
        Number of interior knots K >= 0

    Returns
    -------
    KnotSet
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise DataValidationError('\nCannot place knots on empty data')
    if n_interior < 0:
        raise ValueError('\nNumber of interior knots must be >= 0')
    if not np.all(np.isfinite(values)):
        raise DataValidationError('\nNon-finite covariate value')
    if np.unique(values).size < n_interior + 2:
        raise DataValidationError(
            '\nFewer than K+2 distinct values, knots are degenerate'
        )

    probabilities = np.arange(1, n_interior + 1) / (n_interior + 1.)
    interior = np.quantile(values, probabilities)
    low, high = values.min(), values.max()
    points = np.concatenate([[low], interior, [high]])
    if not np.all(np.diff(points) > 0):
        raise DataValidationError(
            '\nDuplicate knots from tied data; use fewer knots'
        )
    return KnotSet(
        low=float(low),
        high=float(high),
        interior=tuple(float(knot) for knot in interior)
    )


def bspline_basis(x, knots, full=False):
    """
    Evaluates the clamped cubic B-spline basis.

    Parameters
    ----------
    x : float or array-like
        Evaluation point(s). Values outside [low, high] are clamped.
    knots : KnotSet
    full : bool
        If True return all K+4 basis functions (which sum to one),
        otherwise the K+3 functions left after dropping the first one

    Returns
    -------
    np.ndarray
        (K+3,) or (K+4,) for scalar x, one row per point otherwise
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise ValueError('\nNon-finite evaluation point')
    x = np.clip(x, knots.low, knots.high)

    vector = knots.knot_vector
    n_basis = len(vector) - DEGREE - 1
    basis = BSpline(vector, np.eye(n_basis), DEGREE, extrapolate=True)(x)
    basis = np.clip(basis, 0., None)
    if not full:
        basis = basis[:, 1:]
    return basis[0] if scalar else basis


def count_clamped(x, knots):
    x = np.asarray(x, dtype=float)
    return int(np.sum((x < knots.low) | (x > knots.high)))


@dataclass(frozen=True)
class Linear:
    covariate: str

    @property
    def dimension(self):
        return 1

    @property
    def covariates(self):
        return (self.covariate,)

    def columns(self, frame, knots):
        return frame[self.covariate].values.astype(float)[:, None]

    def describe(self):
        return self.covariate


@dataclass(frozen=True)
class Smooth:
    """
    Cubic B-spline curve in one continuous covariate.
    """
    covariate: str
    n_interior: int = 4

    @property
    def dimension(self):
        return self.n_interior + DEGREE

    @property
    def covariates(self):
        return (self.covariate,)

    @property
    def knot_key(self):
        return self.covariate, self.n_interior

    def columns(self, frame, knots):
        return bspline_basis(
            frame[self.covariate].values.astype(float),
            knots[self.knot_key]
        )

    def describe(self):
        return 's({0}, K={1})'.format(self.covariate, self.n_interior)


def _level_index(values, factor, levels):
    values = np.asarray(values, dtype=float)
    index = np.full(values.shape, -1)
    for position, level in enumerate(levels):
        index[values == level] = position
    if np.any(index < 0):
        bad = values[index < 0][0]
        raise DataValidationError(
            '\nValue {0} of factor {1} outside of levels {2}'.format(
                bad,
                factor,
                tuple(levels)
            )
        )
    return index


@dataclass(frozen=True)
class Factor:
    """
    Binary factor, coded as the indicator of its second level.
    """
    covariate: str
    levels: tuple = (0, 1)

    @property
    def dimension(self):
        return 1

    @property
    def covariates(self):
        return (self.covariate,)

    def columns(self, frame, knots):
        index = _level_index(
            frame[self.covariate].values,
            self.covariate,
            self.levels
        )
        return (index == 1).astype(float)[:, None]

    def describe(self):
        return 'f({0})'.format(self.covariate)


@dataclass(frozen=True)
class FactorByCurve:
    """
    A separate smooth curve in `covariate` for every level of `factor`.
    The block of the inactive level is zero.
    """
    covariate: str
    factor: str
    n_interior: int = 4
    levels: tuple = (0, 1)

    @property
    def dimension(self):
        return len(self.levels) * (self.n_interior + DEGREE)

    @property
    def covariates(self):
        return self.covariate, self.factor

    @property
    def knot_key(self):
        return self.covariate, self.n_interior

    def columns(self, frame, knots):
        basis = bspline_basis(
            frame[self.covariate].values.astype(float),
            knots[self.knot_key]
        )
        index = _level_index(
            frame[self.factor].values,
            self.factor,
            self.levels
        )
        blocks = [
            basis * (index == position)[:, None]
            for position in range(len(self.levels))
        ]
        return np.hstack(blocks)

    def describe(self):
        return 's({0}, K={1}, by={2})'.format(
            self.covariate,
            self.n_interior,
            self.factor
        )


_SMOOTH = re.compile(r'^s\((?P<args>.*)\)$')
_FACTOR = re.compile(r'^f\(\s*(?P<name>\w+)\s*\)$')
_NAME = re.compile(r'^\w+$')


def _split_terms(rhs):
    terms = []
    depth = 0
    current = ''
    for char in rhs:
        if char == '(':
            depth += 1
        elif char == ')':
            depth -= 1
        if char == '+' and depth == 0:
            terms.append(current.strip())
            current = ''
        else:
            current += char
    terms.append(current.strip())
    if depth != 0 or any(not term for term in terms):
        raise ValueError('\nMalformed model formula')
    return terms


def _parse_smooth(args, default_k):
    pieces = [piece.strip() for piece in args.split(',')]
    if not _NAME.match(pieces[0]):
        raise ValueError('\nBad smooth term covariate: ' + pieces[0])
    options = {'K': default_k, 'by': None}
    for piece in pieces[1:]:
        key, _, value = piece.partition('=')
        key, value = key.strip(), value.strip()
        if key == 'K':
            try:
                options['K'] = int(value)
            except ValueError:
                raise ValueError('\nK must be an integer')
        elif key == 'by':
            options['by'] = value
        else:
            raise ValueError('\nUnknown smooth option ' + key)
    if options['by'] is None:
        return Smooth(pieces[0], options['K'])
    return FactorByCurve(pieces[0], options['by'], options['K'])


@dataclass(frozen=True)
class ModelSpec:
    """
    Additive mean structure of a mixture component.

    A FactorByCurve term without a matching Factor term gets the factor
    main effect column appended right after it.

    Parameters
    ----------
    terms : tuple
        Linear, Smooth, FactorByCurve and Factor terms
    intercept : bool
        Include a leading column of ones
    response : str
        Name of the test outcome column
    """
    terms: tuple = field(default_factory=tuple)
    intercept: bool = True
    response: str = 'y'

    def __post_init__(self):
        explicit = {
            term.covariate for term in self.terms if isinstance(term, Factor)
        }
        expanded = []
        for term in self.terms:
            expanded.append(term)
            if isinstance(term, FactorByCurve) and \
                    term.factor not in explicit:
                expanded.append(Factor(term.factor, term.levels))
                explicit.add(term.factor)
        object.__setattr__(self, 'terms', tuple(expanded))
        if self.dimension < 1:
            raise ValueError('\nModel has no columns')

    @property
    def dimension(self):
        """
        Design dimension Q
        """
        return int(self.intercept) + sum(term.dimension for term in self.terms)

    @property
    def covariates(self):
        names = []
        for term in self.terms:
            for name in term.covariates:
                if name not in names:
                    names.append(name)
        return names

    @property
    def is_linear(self):
        return all(isinstance(term, (Linear, Factor)) for term in self.terms)

    @classmethod
    def parse(cls, formula, default_k=4):
        """
        Parses a formula such as ``y ~ gender + s(age, K=0, by=gender)``.

        Supported terms: a bare covariate name (linear, or a factor if the
        same name appears as a ``by`` variable), ``f(name)``,
        ``s(name, K=k)``, ``s(name, K=k, by=factor)``, ``1`` and ``0`` /
        ``-1`` to remove the intercept.
        """
        lhs, sep, rhs = formula.partition('~')
        if not sep:
            raise ValueError('\nModel formula needs a ~')
        response = lhs.strip() or 'y'
        intercept = True
        rhs = rhs.strip()
        if re.search(r'-\s*1$', rhs):
            intercept = False
            rhs = re.sub(r'-\s*1$', '', rhs).strip() or '1'

        parsed = []
        for token in _split_terms(rhs):
            if token == '1':
                continue
            if token == '0':
                intercept = False
                continue
            smooth = _SMOOTH.match(token)
            factor = _FACTOR.match(token)
            if smooth:
                parsed.append(_parse_smooth(smooth.group('args'), default_k))
            elif factor:
                parsed.append(Factor(factor.group('name')))
            elif _NAME.match(token):
                parsed.append(Linear(token))
            else:
                raise ValueError('\nCannot parse model term ' + token)

        by_names = {
            term.factor for term in parsed if isinstance(term, FactorByCurve)
        }
        terms = [
            Factor(term.covariate)
            if isinstance(term, Linear) and term.covariate in by_names
            else term
            for term in parsed
        ]
        return cls(tuple(terms), intercept, response)

    def describe(self):
        pieces = ['1' if self.intercept else '0']
        pieces += [term.describe() for term in self.terms]
        return self.response + ' ~ ' + ' + '.join(pieces)

    def linear_counterpart(self):
        """
        The same covariates entering linearly. Smooth and factor-by-curve
        terms become linear terms in their continuous covariate.
        """
        terms = []
        for term in self.terms:
            if isinstance(term, (Smooth, FactorByCurve)):
                term = Linear(term.covariate)
            if term not in terms:
                terms.append(term)
        return ModelSpec(tuple(terms), self.intercept, self.response)

    def check_covariates(self, frame):
        for name in self.covariates:
            if name not in frame.columns:
                raise DataValidationError(
                    '\nCovariate ' + name + ' missing from the data'
                )

    def fit_knots(self, frame):
        """
        Knot sets for every smooth term, from the given (nondiseased)
        covariate table.

        Returns
        -------
        dict
            (covariate, K) -> KnotSet
        """
        self.check_covariates(frame)
        knots = {}
        for term in self.terms:
            key = getattr(term, 'knot_key', None)
            if key is not None and key not in knots:
                knots[key] = knot_sequence(frame[key[0]].values, key[1])
        return knots


def design_matrix(spec, frame, knots, warn=True):
    """
    Design matrix of a covariate table.

    Parameters
    ----------
    spec : ModelSpec
    frame : pd.DataFrame
        One row per subject
    knots : dict
        Output of ModelSpec.fit_knots
    warn : bool
        Warn when covariate values are clamped to the knot range

    Returns
    -------
    tuple
        (n, Q) design matrix and the number of clamped values
    """
    frame = pd.DataFrame(frame)
    spec.check_covariates(frame)
    n = len(frame.index)
    blocks = [np.ones((n, 1))] if spec.intercept else []
    clamped = 0
    for term in spec.terms:
        blocks.append(term.columns(frame, knots))
        key = getattr(term, 'knot_key', None)
        if key is not None:
            clamped += count_clamped(frame[key[0]].values, knots[key])
    if clamped and warn:
        warnings.warn(
            '{0} covariate values clamped to the knot range'.format(clamped)
        )
    if blocks:
        matrix = np.hstack(blocks)
    else:
        matrix = np.empty((n, 0))
    return matrix, clamped


def design_row(spec, record, knots):
    """
    Design row z of a single covariate record.

    Parameters
    ----------
    spec : ModelSpec
    record : dict or pd.Series
        Covariate name -> value
    knots : dict
        Output of ModelSpec.fit_knots

    Returns
    -------
    np.ndarray
        Vector of length Q
    """
    record = dict(record)
    for name in spec.covariates:
        if name not in record:
            raise DataValidationError(
                '\nCovariate ' + name + ' missing from the record'
            )
    frame = pd.DataFrame(
        {name: [record[name]] for name in spec.covariates},
        index=[0]
    )
    return design_matrix(spec, frame, knots, warn=False)[0][0]
