# -*- coding: utf-8 -*-
"""
PURPOSE:
    Frequentist AROC estimators built on a location-scale regression model
    for the nondiseased group, y = mu(x) + sigma(x) eps:

        kernel          Nadaraya-Watson mean and variance functions with
                        least-squares cross-validated bandwidths (one
                        continuous covariate)
        semiparametric  linear mean, constant variance

    Placement values use the empirical distribution of the standardized
    residuals. Bands come from a residual bootstrap in the nondiseased
    group combined with case resampling in the diseased group.
"""

from dataclasses import dataclass, field
import warnings
import numpy as np
from scipy import optimize
from . import aroc, randkit, splines
from .tools import DataValidationError, check_positive, check_probability

VARIANCE_FLOOR = 1e-10


def _kernel_weights(x, x_eval, h):
    u = (np.asarray(x_eval, dtype=float)[:, None] - x[None, :]) / h
    return np.exp(-0.5 * u ** 2)


def nw_regress(x, y, h, x_eval):
    """
    Nadaraya-Watson estimate with a Gaussian kernel,
    m(x0) = sum K((x_i - x0) / h) y_i / sum K((x_i - x0) / h).

    Where every kernel weight underflows, the value of the nearest
    observation is returned and a warning is issued.

    Parameters
    ----------
    x, y : array-like
        Observations, at least two
    h : float
        Bandwidth, > 0
    x_eval : array-like
        Evaluation points

    Returns
    -------
    np.ndarray
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    x_eval = np.atleast_1d(np.asarray(x_eval, dtype=float))
    h = check_positive(h, 'bandwidth')
    if x.size < 2 or x.size != y.size:
        raise ValueError('\nNeed at least two (x, y) pairs of equal length')

    weights = _kernel_weights(x, x_eval, h)
    totals = weights.sum(axis=1)
    empty = totals <= 0
    with np.errstate(invalid='ignore', divide='ignore'):
        fitted = weights @ y / totals
    if np.any(empty):
        warnings.warn(
            'kernel weights underflow at {0} points; using the nearest '
            'neighbour'.format(int(empty.sum()))
        )
        nearest = np.abs(x_eval[empty][:, None] - x[None, :]).argmin(axis=1)
        fitted[empty] = y[nearest]
    return fitted


def loo_cv_score(x, y, h):
    """
    Leave-one-out mean squared prediction error of nw_regress.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    weights = _kernel_weights(x, x, h)
    np.fill_diagonal(weights, 0.)
    totals = weights.sum(axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        predictions = weights @ y / totals
    empty = totals <= 0
    if np.any(empty):
        distance = np.abs(x[:, None] - x[None, :])
        np.fill_diagonal(distance, np.inf)
        predictions[empty] = y[distance[empty].argmin(axis=1)]
    return float(np.mean((y - predictions) ** 2))


def bandwidth_grid(x, n_grid=60):
    """
    Log-spaced bandwidths from range / (2 n) to twice the range.
    """
    x = np.asarray(x, dtype=float).ravel()
    spread = x.max() - x.min()
    return np.logspace(
        np.log10(spread / (2. * x.size)),
        np.log10(2. * spread),
        n_grid
    )


def lscv_bandwidth(x, y, n_grid=60):
    """
    Least-squares cross-validation bandwidth: grid search over
    bandwidth_grid followed by a bounded refinement around the best grid
    point. If every grid point scores the same, the smallest bandwidth is
    returned.

    Returns
    -------
    float
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size < 3:
        raise ValueError('\nBandwidth selection needs n >= 3')
    if np.ptp(x) == 0:
        raise DataValidationError('\nCovariate is constant')

    grid = bandwidth_grid(x, n_grid)
    scores = np.array([loo_cv_score(x, y, h) for h in grid])
    if np.allclose(scores, scores[0], rtol=1e-12, atol=1e-300):
        return float(grid[0])

    best = int(np.argmin(scores))
    low = np.log(grid[max(best - 1, 0)])
    high = np.log(grid[min(best + 1, grid.size - 1)])
    refined = optimize.minimize_scalar(
        lambda log_h: loo_cv_score(x, y, np.exp(log_h)),
        bounds=(low, high),
        method='bounded'
    )
    if refined.success and refined.fun <= scores[best]:
        return float(np.exp(refined.x))
    return float(grid[best])


class _ResidualDistribution:
    """
    Empirical distribution of standardized residuals.
    """
    residuals: np.ndarray

    def residual_cdf(self, e):
        ordered = np.sort(self.residuals)
        counts = np.searchsorted(ordered, np.asarray(e, dtype=float),
                                 side='right')
        return counts / ordered.size

    def residual_quantile(self, p):
        return np.quantile(self.residuals, p, method='inverted_cdf')

    def placements(self, covariates, y):
        """
        U = 1 - F_eps((y - mu(x)) / sigma(x))
        """
        standardized = (np.asarray(y, dtype=float) - self.mean(covariates)) \
            / self.sd(covariates)
        return 1. - self.residual_cdf(standardized)

    def threshold(self, covariates, t):
        """
        c_x = mu(x) + sigma(x) F_eps^-1(1 - t)
        """
        t = check_probability(t, 't')
        return self.mean(covariates) + \
            self.sd(covariates) * self.residual_quantile(1. - t)


@dataclass
class LocationScaleFit(_ResidualDistribution):
    """
    Kernel location-scale fit of the nondiseased group.

    Parameters
    ----------
    x, y : np.ndarray
        Nondiseased covariate and outcomes
    bandwidth_mean : float
    bandwidth_var : float
    floor : float
        Lower bound of the variance function
    residuals : np.ndarray
        Standardized residuals
    floored : int
        Number of training points where the variance was floored
    """
    x: np.ndarray
    y: np.ndarray
    bandwidth_mean: float
    bandwidth_var: float
    floor: float
    squared_residuals: np.ndarray = field(repr=False, default=None)
    residuals: np.ndarray = field(repr=False, default=None)
    floored: int = 0

    def mean(self, x_eval):
        return nw_regress(self.x, self.y, self.bandwidth_mean, x_eval)

    def variance(self, x_eval):
        raw = nw_regress(
            self.x,
            self.squared_residuals,
            self.bandwidth_var,
            x_eval
        )
        return np.maximum(raw, self.floor)

    def sd(self, x_eval):
        return np.sqrt(self.variance(x_eval))

    def refit(self, y):
        return fit_location_scale(
            self.x,
            y,
            bandwidth_mean=self.bandwidth_mean,
            bandwidth_var=self.bandwidth_var
        )


def fit_location_scale(
        x,
        y,
        bandwidth_mean=None,
        bandwidth_var=None
):
    """
    Kernel location-scale fit. The variance function is the Nadaraya-Watson
    regression of squared mean residuals on x, floored at 1e-10 times the
    response variance. Bandwidths not given are chosen by least-squares
    cross-validation.

    Returns
    -------
    LocationScaleFit
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if bandwidth_mean is None:
        bandwidth_mean = lscv_bandwidth(x, y)
    squared = (y - nw_regress(x, y, bandwidth_mean, x)) ** 2
    if bandwidth_var is None:
        bandwidth_var = lscv_bandwidth(x, squared)
    floor = VARIANCE_FLOOR * max(float(np.var(y)), np.finfo(float).tiny)

    raw = nw_regress(x, squared, bandwidth_var, x)
    floored = int(np.sum(raw < floor))
    if floored:
        warnings.warn(
            'variance function floored at {0} points'.format(floored)
        )
    sd = np.sqrt(np.maximum(raw, floor))
    fit = LocationScaleFit(
        x=x,
        y=y,
        bandwidth_mean=float(bandwidth_mean),
        bandwidth_var=float(bandwidth_var),
        floor=floor,
        squared_residuals=squared,
        floored=floored
    )
    fit.residuals = (y - fit.mean(x)) / sd
    return fit


@dataclass
class LinearLocationScaleFit(_ResidualDistribution):
    """
    Least squares location-scale fit with constant variance. Covariates
    are passed as design matrices.
    """
    design: np.ndarray
    y: np.ndarray
    coefficients: np.ndarray
    residual_variance: float
    residuals: np.ndarray = field(repr=False, default=None)

    def mean(self, design):
        return np.asarray(design, dtype=float) @ self.coefficients

    def sd(self, design):
        return np.full(np.shape(design)[0], np.sqrt(self.residual_variance))

    def refit(self, y):
        return fit_linear_location_scale(self.design, y)


def fit_linear_location_scale(design, y):
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, q = design.shape
    if n <= q:
        raise DataValidationError(
            '\nNeed more observations than coefficients'
        )
    coefficients, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    raw = y - design @ coefficients
    variance = float(raw @ raw / (n - rank))
    if not variance > 0:
        variance = VARIANCE_FLOOR * max(float(np.var(y)), 1.)
    return LinearLocationScaleFit(
        design=design,
        y=y,
        coefficients=coefficients,
        residual_variance=variance,
        residuals=raw / np.sqrt(variance)
    )


def _bootstrap_aroc(
        fit,
        healthy_covariates,
        diseased_covariates,
        y_diseased,
        grid,
        n_boot,
        level,
        rng,
        verbose
):
    """
    Point estimate and bootstrap band of a location-scale AROC estimator.

        1. y*_i = mu(x_i) + sigma(x_i) e*_i with e* resampled from the
           standardized residuals, refit with the original bandwidths
        2. resample diseased cases
        3. percentile band of the resulting curves and areas
    """
    if n_boot < 1:
        raise ValueError('\nNeed at least one bootstrap resample')
    grid = aroc.check_grid(aroc.default_grid() if grid is None else grid)
    check_probability(level, 'level')

    placements = fit.placements(diseased_covariates, y_diseased)
    n_d = placements.size
    flat = np.full((1, n_d), 1. / n_d)
    point = aroc.weighted_step_curves(placements[None, :], flat, grid)[0]
    point_area = 1. - placements.mean()

    if verbose:
        print('bootstrapping {0} resamples... '.format(n_boot), end='')
    healthy_mean = fit.mean(healthy_covariates)
    healthy_sd = fit.sd(healthy_covariates)
    curves = np.empty((n_boot, grid.size))
    areas = np.empty(n_boot)
    for resample in range(n_boot):
        stream = rng.child(resample)
        errors = stream.generator.choice(fit.residuals, size=healthy_mean.size)
        refit = fit.refit(healthy_mean + healthy_sd * errors)
        cases = stream.generator.integers(0, n_d, size=n_d)
        boot = refit.placements(diseased_covariates[cases], y_diseased[cases])
        curves[resample] = aroc.weighted_step_curves(
            boot[None, :], flat, grid
        )[0]
        areas[resample] = 1. - boot.mean()
    if verbose:
        print('Done')

    lower, upper = aroc.percentile_band(curves, level)
    area_lower, area_upper = aroc.percentile_band(areas, level)
    return aroc.CurveEstimate(
        grid=grid,
        mean=point,
        lower=lower,
        upper=upper,
        level=level
    ), aroc.ScalarEstimate(
        mean=point_area,
        lower=area_lower,
        upper=area_upper,
        level=level,
        samples=areas
    )


def _single_covariate(data, covariate):
    names = list(data.covariates.columns)
    if covariate is None:
        if len(names) != 1:
            raise DataValidationError(
                '\nThe kernel estimator handles exactly one continuous '
                'covariate; found {0}'.format(len(names))
            )
        covariate = names[0]
    if covariate not in names:
        raise DataValidationError(
            '\nCovariate ' + str(covariate) + ' missing from the data'
        )
    return covariate


def kernel_aroc(
        data,
        grid=None,
        n_boot=500,
        level=0.95,
        rng=None,
        covariate=None,
        verbose=False
):
    """
    Kernel AROC estimate with a bootstrap band.

    Parameters
    ----------
    data : tools.Dataset
    grid : np.ndarray
        FPF grid, default 101 points
    n_boot : int
        Bootstrap resamples
    level : float
    rng : randkit.RngStream
    covariate : str
        Name of the continuous covariate; needed only when the data carry
        more than one column
    verbose : bool

    Returns
    -------
    tuple
        CurveEstimate, ScalarEstimate (AAUC) and the LocationScaleFit
    """
    covariate = _single_covariate(data, covariate)
    rng = rng or randkit.RngStream()
    healthy, diseased = data.healthy, data.diseased
    x_healthy = healthy.covariates[covariate].values.astype(float)
    x_diseased = diseased.covariates[covariate].values.astype(float)

    if verbose:
        print('selecting bandwidths... ', end='')
    fit = fit_location_scale(x_healthy, healthy.y)
    if verbose:
        print('Done')

    curve, area = _bootstrap_aroc(
        fit,
        x_healthy,
        x_diseased,
        diseased.y,
        grid,
        n_boot,
        level,
        rng,
        verbose
    )
    return curve, area, fit


def semiparametric_aroc(
        data,
        spec=None,
        grid=None,
        n_boot=500,
        level=0.95,
        rng=None,
        verbose=False
):
    """
    AROC estimate under a linear location-scale model with constant
    variance, with a bootstrap band.

    Parameters
    ----------
    data : tools.Dataset
    spec : splines.ModelSpec
        Smooth terms enter linearly. Default: all covariates linear.

    Returns
    -------
    tuple
        CurveEstimate, ScalarEstimate (AAUC) and the LinearLocationScaleFit
    """
    if spec is None:
        spec = splines.ModelSpec(tuple(
            splines.Linear(name) for name in data.covariates.columns
        ))
    spec = spec.linear_counterpart()
    rng = rng or randkit.RngStream()
    healthy, diseased = data.healthy, data.diseased
    design_healthy, _ = splines.design_matrix(spec, healthy.covariates, {})
    design_diseased, _ = splines.design_matrix(spec, diseased.covariates, {})
    fit = fit_linear_location_scale(design_healthy, healthy.y)
    curve, area = _bootstrap_aroc(
        fit,
        design_healthy,
        design_diseased,
        diseased.y,
        grid,
        n_boot,
        level,
        rng,
        verbose
    )
    return curve, area, fit


def location_scale_threshold(fit, covariates, t):
    """
    Covariate-specific threshold of a location-scale fit for FPF t.

    Parameters
    ----------
    fit : LocationScaleFit or LinearLocationScaleFit
    covariates : array-like
        Covariate values (kernel fit) or design rows (linear fit)
    t : float

    Returns
    -------
    np.ndarray
    """
    return fit.threshold(covariates, t)
