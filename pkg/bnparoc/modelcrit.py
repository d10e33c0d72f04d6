# -*- coding: utf-8 -*-
"""
PURPOSE:
    Model comparison for nondiseased-group fits: conditional predictive
    ordinates and LPML, WAIC, and posterior predictive checks of skewness
    and kurtosis.

    All criteria work on the (S, n) matrix of pointwise log densities and
    are evaluated in log space.
"""

from dataclasses import dataclass
import warnings
import numpy as np
import pandas as pd
from scipy import special, stats
from . import randkit
from .tools import Dataset, Group

KURTOSIS_CONVENTION = 'raw fourth standardized moment (normal = 3)'

STATISTICS = {
    'skewness': lambda y: float(stats.skew(y)),
    'kurtosis': lambda y: float(stats.kurtosis(y, fisher=False)),
    'mean': lambda y: float(np.mean(y)),
    'sd': lambda y: float(np.std(y, ddof=1))
}


@dataclass
class CriteriaReport:
    """
    Predictive criteria of one fit.

    Parameters
    ----------
    lpml : float
        Sum of log CPO, larger is better
    waic : float
        -2 (lppd - rho_waic), smaller is better
    lppd : float
        Log pointwise predictive density
    rho_waic : float
        Effective number of parameters
    cpo : np.ndarray
        Per-observation conditional predictive ordinates
    """
    lpml: float
    waic: float
    lppd: float
    rho_waic: float
    cpo: np.ndarray

    def to_dict(self):
        return {
            'lpml': float(self.lpml),
            'waic': float(self.waic),
            'lppd': float(self.lppd),
            'rho_waic': float(self.rho_waic)
        }


def log_density_matrix(fit, data=None):
    """
    (S, n) matrix of log f^(s)(y_i | x_i) over the nondiseased group.

    Parameters
    ----------
    fit : ddp.FitResult
    data : tools.Dataset or tools.Group
        Defaults to the data the fit was run on
    """
    if data is None:
        return fit.log_pdf_matrix(fit.y, fit.design)
    group = data.healthy if isinstance(data, Dataset) else data
    if not isinstance(group, Group):
        raise TypeError('\ndata must be a Dataset or a Group')
    design, _ = fit.design_for(group.covariates, warn=False)
    return fit.log_pdf_matrix(group.y, design)


def lpml_from_log_density(log_density):
    """
    Harmonic mean CPO estimates, CPO_i = (S^-1 sum_s 1 / f_si)^-1.

    Returns
    -------
    tuple
        log CPO per observation and LPML
    """
    log_density = np.atleast_2d(log_density)
    if log_density.shape[0] < 1:
        raise ValueError('\nNo posterior draws')
    with np.errstate(over='ignore'):
        log_cpo = np.log(log_density.shape[0]) - \
            special.logsumexp(-log_density, axis=0)
    zero = np.flatnonzero(np.isneginf(log_cpo))
    if zero.size:
        warnings.warn(
            'density is zero under every draw at observations {0}'.format(
                zero.tolist()
            )
        )
    return log_cpo, float(np.sum(log_cpo))


def waic_from_log_density(log_density):
    """
    WAIC = -2 (lppd - rho), rho summing the pointwise sample variances of
    the log density (divisor S - 1).

    Returns
    -------
    tuple
        waic, lppd, rho
    """
    log_density = np.atleast_2d(log_density)
    n_draws = log_density.shape[0]
    if n_draws < 2:
        raise ValueError('\nWAIC needs at least two posterior draws')
    lppd = float(np.sum(
        special.logsumexp(log_density, axis=0) - np.log(n_draws)
    ))
    rho = float(np.sum(np.var(log_density, axis=0, ddof=1)))
    return -2. * (lppd - rho), lppd, rho


def cpo_lpml(fit, data=None):
    """
    Per-observation CPO and LPML of a fit.

    Returns
    -------
    tuple
        CPO vector and LPML
    """
    log_cpo, lpml = lpml_from_log_density(log_density_matrix(fit, data))
    return np.exp(log_cpo), lpml


def waic(fit, data=None):
    """
    WAIC and LPML of a fit on its nondiseased group.

    Returns
    -------
    CriteriaReport
    """
    log_density = log_density_matrix(fit, data)
    value, lppd, rho = waic_from_log_density(log_density)
    log_cpo, lpml = lpml_from_log_density(log_density)
    return CriteriaReport(
        lpml=lpml,
        waic=value,
        lppd=lppd,
        rho_waic=rho,
        cpo=np.exp(log_cpo)
    )


def _check_statistics(statistics):
    statistics = list(statistics)
    for name in statistics:
        if name not in STATISTICS:
            raise ValueError(
                '\nUnknown statistic {0}; choose from {1}'.format(
                    name,
                    sorted(STATISTICS)
                )
            )
    return statistics


def observed_stats(y, statistics=('skewness', 'kurtosis')):
    """
    Statistics of the observed outcomes, for comparison with replicates.
    """
    y = np.asarray(y, dtype=float)
    return {
        name: STATISTICS[name](y) for name in _check_statistics(statistics)
    }


def posterior_predictive_stats(
        fit,
        rng=None,
        n_replicates=500,
        statistics=('skewness', 'kurtosis')
):
    """
    Replicate datasets from the posterior predictive distribution at the
    observed design rows and summarise each by the requested statistics.

    For every replicate a retained draw is picked at random, each
    observation gets a component sampled from the draw's weights, and
    y* ~ N(z'beta_l, sigma_l^2).

    Parameters
    ----------
    fit : ddp.FitResult
    rng : randkit.RngStream
    n_replicates : int
    statistics : iterable
        Names from STATISTICS

    Returns
    -------
    pd.DataFrame
        n_replicates rows, one column per statistic
    """
    statistics = _check_statistics(statistics)
    if n_replicates < 1:
        raise ValueError('\nn_replicates must be >= 1')
    rng = rng or randkit.RngStream()
    n = fit.design.shape[0]
    chosen = rng.generator.choice(
        fit.n_draws,
        size=n_replicates,
        replace=n_replicates > fit.n_draws
    )

    rows = []
    for index in chosen:
        weights = np.tile(fit.weights[index], (n, 1))
        components = randkit.sample_categorical(weights, rng)
        means = np.sum(fit.design * fit.betas[index][components], axis=1)
        replicate = randkit.sample_normal(
            means,
            fit.sigma2[index][components],
            rng
        )
        rows.append([STATISTICS[name](replicate) for name in statistics])
    return pd.DataFrame(rows, columns=statistics)


def predictive_pvalues(replicates, observed):
    """
    Share of replicates whose statistic is at least the observed one.
    """
    return {
        name: float(np.mean(replicates[name].values >= value))
        for name, value in observed.items()
    }
