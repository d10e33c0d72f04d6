# -*- coding: utf-8 -*-
"""
PURPOSE:
    Covariate-adjusted ROC summaries from a nondiseased-group fit:
    placement values of the diseased subjects, Bayesian bootstrap AROC,
    AAUC and pAAUC ensembles, covariate-specific thresholds, and the pooled
    ROC baselines that ignore covariates.

    The AROC curve is the distribution function of the diseased placement
    values U = 1 - F(y_D | x_D); every ensemble member is a weighted
    empirical distribution function of U with flat Dirichlet weights.
"""

from dataclasses import dataclass, field
import numpy as np
import pandas as pd
from scipy import special
from . import randkit, splines
from .tools import Dataset, Group, check_probability


def default_grid(n_points=101):
    """
    Evenly spaced false positive fractions on [0, 1]
    """
    if n_points < 2:
        raise ValueError('\nA grid needs at least two points')
    return np.linspace(0., 1., n_points)


def check_grid(grid):
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError('\nEmpty FPF grid')
    if np.any((grid < 0) | (grid > 1)) or np.any(np.diff(grid) < 0):
        raise ValueError('\nFPF grid must be sorted and inside [0, 1]')
    return grid


def percentile_band(samples, level):
    tail = (1. - level) / 2.
    return np.quantile(samples, [tail, 1. - tail], axis=0)


@dataclass
class PlacementMatrix:
    """
    Placement values of the diseased subjects, one row per posterior draw.
    """
    values: np.ndarray
    clamped: int = 0

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if np.any((self.values < 0) | (self.values > 1)):
            raise ValueError('\nPlacement values must lie in [0, 1]')

    @property
    def shape(self):
        return self.values.shape


@dataclass
class CurveEstimate:
    """
    ROC-type curve on an FPF grid with a pointwise band.

    Parameters
    ----------
    grid : np.ndarray
        False positive fractions
    mean : np.ndarray
        Point estimate (posterior mean for Bayesian estimators)
    lower, upper : np.ndarray
        Pointwise band limits
    level : float
        Band level
    ensemble : np.ndarray
        Optional (S, n_T) matrix of ensemble curves
    """
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray = None
    upper: np.ndarray = None
    level: float = 0.95
    ensemble: np.ndarray = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.mean = np.clip(np.asarray(self.mean, dtype=float), 0., 1.)
        lower = self.mean if self.lower is None else self.lower
        upper = self.mean if self.upper is None else self.upper
        self.lower = np.minimum(np.clip(lower, 0., 1.), self.mean)
        self.upper = np.maximum(np.clip(upper, 0., 1.), self.mean)
        if self.mean.shape != self.grid.shape:
            raise ValueError('\nCurve and grid have different lengths')

    def to_frame(self):
        return pd.DataFrame({
            't': self.grid,
            'mean': self.mean,
            'lower': self.lower,
            'upper': self.upper
        })

    def to_dict(self):
        return {
            'grid': self.grid.tolist(),
            'mean': self.mean.tolist(),
            'lower': self.lower.tolist(),
            'upper': self.upper.tolist(),
            'level': float(self.level)
        }


@dataclass
class ScalarEstimate:
    """
    AUC-type summary with a band.
    """
    mean: float
    lower: float
    upper: float
    level: float = 0.95
    samples: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.mean = float(self.mean)
        self.lower = min(float(self.lower), self.mean)
        self.upper = max(float(self.upper), self.mean)

    def to_dict(self):
        return {
            'mean': self.mean,
            'lower': self.lower,
            'upper': self.upper,
            'level': float(self.level)
        }


def summarize_scalar(samples, level=0.95):
    samples = np.asarray(samples, dtype=float).ravel()
    lower, upper = percentile_band(samples, level)
    return ScalarEstimate(
        mean=samples.mean(),
        lower=lower,
        upper=upper,
        level=level,
        samples=samples
    )


def summarize_curves(ensemble, grid, level=0.95, keep_ensemble=False):
    """
    Pointwise mean and percentile band of an ensemble of curves.
    """
    lower, upper = percentile_band(ensemble, level)
    return CurveEstimate(
        grid=grid,
        mean=ensemble.mean(axis=0),
        lower=lower,
        upper=upper,
        level=level,
        ensemble=ensemble if keep_ensemble else None
    )


def _diseased(data):
    if isinstance(data, Dataset):
        return data.diseased
    if isinstance(data, Group):
        return data
    raise TypeError('\ndata must be a Dataset or a Group')


def placement_values(fit, diseased):
    """
    U_j^(s) = 1 - sum_l w_l^(s) Phi(y_j | z_j'beta_l^(s), sigma_l^2(s)).

    Parameters
    ----------
    fit : ddp.FitResult
        Nondiseased-group fit
    diseased : tools.Dataset or tools.Group
        Study data (the diseased group is used) or the diseased group

    Returns
    -------
    PlacementMatrix
        (S, n_D) placement values
    """
    group = _diseased(diseased)
    if len(group) == 0:
        raise ValueError('\nNo diseased observations')
    design, clamped = fit.design_for(group.covariates)
    cdf = fit.cdf_matrix(group.y, design)
    return PlacementMatrix(values=1. - cdf, clamped=clamped)


def bayesian_bootstrap_weights(n, n_draws, rng):
    """
    (n_draws, n) matrix of flat Dirichlet weights
    """
    return randkit.sample_dirichlet(np.ones(n), rng, size=n_draws)


def weighted_step_curves(values, weights, grid):
    """
    Weighted empirical distribution functions sum_j q_j 1(U_j <= t), one
    per row of `values`, evaluated on the grid.

    Parameters
    ----------
    values : np.ndarray
        (S, n) points
    weights : np.ndarray
        (S, n) weights, rows on the simplex
    grid : np.ndarray
        Evaluation points

    Returns
    -------
    np.ndarray
        (S, n_T) curves
    """
    order = np.argsort(values, axis=1, kind='stable')
    sorted_values = np.take_along_axis(values, order, axis=1)
    cumulative = np.cumsum(np.take_along_axis(weights, order, axis=1), axis=1)
    cumulative /= cumulative[:, -1:]
    padded = np.hstack([np.zeros((values.shape[0], 1)), cumulative])

    curves = np.empty((values.shape[0], grid.size))
    for row in range(values.shape[0]):
        counts = np.searchsorted(sorted_values[row], grid, side='right')
        curves[row] = padded[row, counts]
    return curves


def aauc(q, u_row):
    """
    Area under one ensemble curve, 1 - sum_j q_j U_j.
    """
    q = np.asarray(q, dtype=float)
    return float(1. - q @ np.asarray(u_row, dtype=float))


def paauc(t0, q, u_row):
    """
    Partial area up to FPF t0, t0 - sum_j q_j min(t0, U_j).
    """
    t0 = check_probability(t0, 't0', include_upper=True)
    q = np.asarray(q, dtype=float)
    return float(t0 - q @ np.minimum(t0, np.asarray(u_row, dtype=float)))


def bb_summaries(
        placements,
        grid=None,
        level=0.95,
        rng=None,
        t0s=(),
        weights=None,
        keep_ensemble=False
):
    """
    AROC curve, AAUC and pAAUC ensembles from a single set of Bayesian
    bootstrap weights, one weight vector per posterior draw.

    Parameters
    ----------
    placements : PlacementMatrix or np.ndarray
    grid : np.ndarray
        FPF grid, default 101 points
    level : float
        Band level
    rng : randkit.RngStream
    t0s : iterable
        FPF limits of the partial areas
    weights : np.ndarray
        Optional (S, n_D) weights to use instead of fresh ones
    keep_ensemble : bool
        Keep per-draw curves in the returned CurveEstimate

    Returns
    -------
    dict
        'aroc' (CurveEstimate), 'aauc' (ScalarEstimate) and 'paauc'
        (t0 -> ScalarEstimate)
    """
    values = getattr(placements, 'values', placements)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    grid = check_grid(default_grid() if grid is None else grid)
    check_probability(level, 'level')
    if weights is None:
        weights = bayesian_bootstrap_weights(
            values.shape[1],
            values.shape[0],
            rng or randkit.RngStream()
        )
    weights = np.atleast_2d(weights)
    if weights.shape != values.shape:
        raise ValueError('\nWeights and placement values do not match')

    curves = weighted_step_curves(values, weights, grid)
    areas = 1. - np.sum(weights * values, axis=1)
    partial = {}
    for t0 in t0s:
        t0 = check_probability(t0, 't0', include_upper=True)
        samples = t0 - np.sum(weights * np.minimum(t0, values), axis=1)
        partial[t0] = summarize_scalar(samples, level)
    return {
        'aroc': summarize_curves(curves, grid, level, keep_ensemble),
        'aauc': summarize_scalar(areas, level),
        'paauc': partial
    }


def bb_aroc(
        placements,
        grid=None,
        level=0.95,
        rng=None,
        weights=None,
        keep_ensemble=False
):
    """
    Posterior mean AROC curve and its pointwise credible band.
    """
    return bb_summaries(
        placements,
        grid=grid,
        level=level,
        rng=rng,
        weights=weights,
        keep_ensemble=keep_ensemble
    )['aroc']


def mixture_quantile(weights, means, sd, probability, tolerance=1e-11):
    """
    Vectorized bisection for sum_l w_l Phi((c - mu_l) / sd_l) = p, one
    root per row. The bracket is [min mu - 8 max sd, max mu + 8 max sd].

    Parameters
    ----------
    weights, means, sd : np.ndarray
        (S, L) mixture parameters
    probability : float
        Target probability in (0, 1)

    Returns
    -------
    np.ndarray
        (S,) quantiles
    """
    weights = np.atleast_2d(weights)
    means = np.atleast_2d(means)
    sd = np.atleast_2d(sd)
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(sd))):
        raise ValueError('\nNon-finite mixture parameters')
    spread = 8. * sd.max(axis=1)
    low = means.min(axis=1) - spread
    high = means.max(axis=1) + spread

    for _ in range(200):
        middle = (low + high) / 2.
        standardized = (middle[:, None] - means) / sd
        cdf = np.sum(weights * special.ndtr(standardized), axis=1)
        below = cdf < probability
        low = np.where(below, middle, low)
        high = np.where(below, high, middle)
        if np.all(high - low <= tolerance * (1. + np.abs(middle))):
            break
    return (low + high) / 2.


def covariate_threshold(fit, record, t, level=0.95):
    """
    Threshold c_x giving false positive fraction t in the subpopulation
    with covariate values `record`: per draw, c solves F(c | x) = 1 - t.

    Parameters
    ----------
    fit : ddp.FitResult
    record : dict
        Covariate name -> value
    t : float
        False positive fraction in (0, 1)
    level : float
        Band level

    Returns
    -------
    ScalarEstimate
    """
    t = check_probability(t, 't')
    z = splines.design_row(fit.spec, record, fit.knots)
    means = fit.betas @ z
    samples = mixture_quantile(
        fit.weights,
        means,
        np.sqrt(fit.sigma2),
        1. - t
    )
    return summarize_scalar(samples, level)


def threshold_curve(fit, covariates, fpfs, level=0.95):
    """
    Covariate-specific thresholds over a table of covariate values.

    Parameters
    ----------
    fit : ddp.FitResult
    covariates : pd.DataFrame
        One row per covariate value of interest
    fpfs : iterable
        False positive fractions
    level : float

    Returns
    -------
    pd.DataFrame
        Covariate columns plus 'fpf', 'mean', 'lower', 'upper'
    """
    covariates = pd.DataFrame(covariates).reset_index(drop=True)
    rows = []
    for fpf in fpfs:
        for _, record in covariates.iterrows():
            estimate = covariate_threshold(fit, record.to_dict(), fpf, level)
            rows.append(dict(
                record.to_dict(),
                fpf=float(fpf),
                mean=estimate.mean,
                lower=estimate.lower,
                upper=estimate.upper
            ))
    return pd.DataFrame(rows)


def pooled_roc_bb(
        y_healthy,
        y_diseased,
        grid=None,
        n_boot=1000,
        level=0.95,
        rng=None,
        keep_ensemble=False
):
    """
    Bayesian bootstrap pooled ROC curve and AUC, ignoring covariates.

    Every iterate draws flat Dirichlet weights p for the nondiseased and q
    for the diseased outcomes, computes U_j = 1 - F_p(y_Dj) with the
    p-weighted empirical distribution function, and then
    ROC(t) = sum_j q_j 1(U_j <= t) and AUC = 1 - sum_j q_j U_j.

    Returns
    -------
    tuple
        CurveEstimate and ScalarEstimate (AUC)
    """
    y_healthy = np.asarray(y_healthy, dtype=float).ravel()
    y_diseased = np.asarray(y_diseased, dtype=float).ravel()
    if y_healthy.size == 0 or y_diseased.size == 0:
        raise ValueError('\nBoth samples must be nonempty')
    grid = check_grid(default_grid() if grid is None else grid)
    rng = rng or randkit.RngStream()

    p = bayesian_bootstrap_weights(y_healthy.size, n_boot, rng)
    q = bayesian_bootstrap_weights(y_diseased.size, n_boot, rng)
    order = np.argsort(y_healthy, kind='stable')
    cumulative = np.cumsum(p[:, order], axis=1)
    cumulative /= cumulative[:, -1:]
    cumulative = np.hstack([np.zeros((n_boot, 1)), cumulative])
    counts = np.searchsorted(y_healthy[order], y_diseased, side='right')
    placements = np.clip(1. - cumulative[:, counts], 0., 1.)

    curves = weighted_step_curves(placements, q, grid)
    areas = 1. - np.sum(q * placements, axis=1)
    return summarize_curves(curves, grid, level, keep_ensemble), \
        summarize_scalar(areas, level)


def pooled_roc_emp(y_healthy, y_diseased, grid=None):
    """
    Empirical pooled ROC curve, ROC(t) = 1 - F_D(F_H^-1(1 - t)), with the
    generalised inverse F_H^-1(u) = inf {y : F_H(y) >= u}.

    Returns
    -------
    CurveEstimate
        Point estimate only; the band equals the estimate
    """
    y_healthy = np.sort(np.asarray(y_healthy, dtype=float).ravel())
    y_diseased = np.sort(np.asarray(y_diseased, dtype=float).ravel())
    if y_healthy.size == 0 or y_diseased.size == 0:
        raise ValueError('\nBoth samples must be nonempty')
    grid = check_grid(default_grid() if grid is None else grid)

    n = y_healthy.size
    u = 1. - grid
    index = np.ceil(u * n - 1e-9).astype(int) - 1
    curve = np.ones(grid.size)
    inside = index >= 0
    thresholds = y_healthy[np.clip(index[inside], 0, n - 1)]
    at_or_below = np.searchsorted(y_diseased, thresholds, side='right')
    curve[inside] = 1. - at_or_below / y_diseased.size
    return CurveEstimate(grid=grid, mean=curve)


def empirical_auc(y_healthy, y_diseased):
    """
    Mann-Whitney estimate of the pooled AUC, ties counted one half.
    """
    y_healthy = np.sort(np.asarray(y_healthy, dtype=float).ravel())
    y_diseased = np.asarray(y_diseased, dtype=float).ravel()
    if y_healthy.size == 0 or y_diseased.size == 0:
        raise ValueError('\nBoth samples must be nonempty')
    below = np.searchsorted(y_healthy, y_diseased, side='left')
    at_or_below = np.searchsorted(y_healthy, y_diseased, side='right')
    wins = below + 0.5 * (at_or_below - below)
    return float(wins.sum() / (y_healthy.size * y_diseased.size))
