# -*- coding: utf-8 -*-
"""
PURPOSE:
    Blocked Gibbs sampler for the truncated B-splines dependent Dirichlet
    process mixture of normal regressions that models the test outcomes of
    the nondiseased group, evaluation of the fitted conditional
    distributions, and prior diagnostics.

    Each iteration cycles through
        1. component allocations
        2. stick-breaking weights
        3. component coefficients and variances
        4. the centring mean m and precision S^-1 of the coefficients
    on responses divided by their standard deviation; stored draws are
    transformed back to the original scale.
"""

from dataclasses import dataclass, field
import warnings
import numpy as np
import pandas as pd
from scipy import linalg, special
from . import randkit, splines
from .tools import DataValidationError, Dataset, Group, NumericalFailure


@dataclass
class PriorSpec:
    """
    Hyperparameters of the truncated DDP mixture.

    Component coefficients are N(m, S) with m ~ N(m0, S0) and
    S^-1 ~ Wishart(nu, (nu * psi)^-1), so that E[S^-1] = psi^-1. Component
    precisions are Gamma(a, b) (shape, rate). Stick-breaking uses
    concentration alpha and is truncated at n_components.
    """
    m0: np.ndarray
    s0: np.ndarray
    nu: int
    psi: np.ndarray
    a: float = 2.
    b: float = 0.5
    alpha: float = 1.
    n_components: int = 10

    def __post_init__(self):
        self.m0 = np.atleast_1d(np.asarray(self.m0, dtype=float))
        self.s0 = np.atleast_2d(np.asarray(self.s0, dtype=float))
        self.psi = np.atleast_2d(np.asarray(self.psi, dtype=float))
        q = self.m0.size
        if self.s0.shape != (q, q) or self.psi.shape != (q, q):
            raise ValueError('\nPrior matrices do not match m0')
        for name, matrix in (('s0', self.s0), ('psi', self.psi)):
            if not np.allclose(matrix, matrix.T):
                raise ValueError('\n' + name + ' is not symmetric')
            try:
                np.linalg.cholesky(matrix)
            except np.linalg.LinAlgError:
                raise ValueError('\n' + name + ' is not positive-definite')
        if self.nu < q:
            raise ValueError('\nnu must be >= Q')
        if min(self.a, self.b, self.alpha) <= 0:
            raise ValueError('\na, b and alpha must be > 0')
        if self.n_components < 1:
            raise ValueError('\nAt least one mixture component is needed')

    @property
    def q(self):
        return self.m0.size

    @classmethod
    def default(cls, q, n_components=10, alpha=1.):
        """
        Prior for responses scaled to unit standard deviation:
        m0 = 0, S0 = 100 I, nu = Q + 2, psi = I, a = 2, b = 0.5.
        """
        return cls(
            m0=np.zeros(q),
            s0=100. * np.eye(q),
            nu=q + 2,
            psi=np.eye(q),
            a=2.,
            b=0.5,
            alpha=alpha,
            n_components=n_components
        )

    def to_dict(self):
        return {
            'm0': self.m0.tolist(),
            's0': self.s0.tolist(),
            'nu': int(self.nu),
            'psi': self.psi.tolist(),
            'a': float(self.a),
            'b': float(self.b),
            'alpha': float(self.alpha),
            'n_components': int(self.n_components)
        }


@dataclass
class PosteriorDraw:
    """
    One Gibbs iterate.

    Parameters
    ----------
    weights : np.ndarray
        (L,) mixture weights
    betas : np.ndarray
        (L, Q) component coefficients
    sigma2 : np.ndarray
        (L,) component variances
    m : np.ndarray
        (Q,) centring mean of the coefficients
    s_inv : np.ndarray
        (Q, Q) precision of the coefficients
    allocations : np.ndarray
        (n,) component labels, 0-based
    sticks : np.ndarray
        (L,) stick-breaking fractions, last one equal to 1
    """
    weights: np.ndarray
    betas: np.ndarray
    sigma2: np.ndarray
    m: np.ndarray = None
    s_inv: np.ndarray = None
    allocations: np.ndarray = None
    sticks: np.ndarray = None

    def __post_init__(self):
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        self.betas = np.atleast_2d(np.asarray(self.betas, dtype=float))
        self.sigma2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float))
        if np.any(self.sigma2 <= 0):
            raise ValueError('\nComponent variances must be > 0')

    def rescaled(self, factor):
        """
        The same draw for responses multiplied by `factor`.
        """
        return PosteriorDraw(
            weights=self.weights,
            betas=self.betas * factor,
            sigma2=self.sigma2 * factor ** 2,
            m=None if self.m is None else self.m * factor,
            s_inv=None if self.s_inv is None else self.s_inv / factor ** 2,
            allocations=self.allocations,
            sticks=self.sticks
        )


def cond_cdf(draw, y, z):
    """
    Mixture distribution function sum_l w_l Phi((y - z'beta_l) / sigma_l).

    Parameters
    ----------
    draw : PosteriorDraw
    y : float or np.ndarray
        Test outcome(s)
    z : np.ndarray
        Design row of length Q

    Returns
    -------
    float or np.ndarray
    """
    means = draw.betas @ np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    standardized = (y[..., None] - means) / np.sqrt(draw.sigma2)
    result = special.ndtr(standardized) @ draw.weights
    return float(result) if result.ndim == 0 else result


def cond_pdf(draw, y, z):
    means = draw.betas @ np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    sd = np.sqrt(draw.sigma2)
    density = np.exp(-0.5 * ((y[..., None] - means) / sd) ** 2) / \
        (sd * np.sqrt(2. * np.pi))
    result = density @ draw.weights
    return float(result) if result.ndim == 0 else result


def _component_log_densities(y, design, weights, betas, sigma2):
    """
    (n, L) matrix of log w_l + log phi(y_i | z_i'beta_l, sigma_l^2)
    """
    means = design @ betas.T
    with np.errstate(divide='ignore'):
        log_weights = np.log(weights)
    return log_weights - 0.5 * (
        np.log(2. * np.pi * sigma2) + (y[:, None] - means) ** 2 / sigma2
    )


def update_allocations(y, design, weights, betas, sigma2, rng):
    """
    Draws component labels with probabilities proportional to
    w_l phi(y_i | z_i'beta_l, sigma_l^2). Computed in log space with a
    per-observation max shift.

    Returns
    -------
    np.ndarray
        (n,) labels in 0..L-1
    """
    log_terms = _component_log_densities(y, design, weights, betas, sigma2)
    log_terms -= log_terms.max(axis=1, keepdims=True)
    probabilities = np.exp(log_terms)
    probabilities /= probabilities.sum(axis=1, keepdims=True)
    return randkit.sample_categorical(probabilities, rng)


def stick_breaking(sticks):
    """
    Weights w_1 = v_1, w_l = v_l prod_{r<l} (1 - v_r).
    """
    sticks = np.asarray(sticks, dtype=float)
    remaining = np.concatenate([[1.], np.cumprod(1. - sticks[:-1])])
    return sticks * remaining


def update_stick_weights(counts, alpha, rng):
    """
    Conjugate update of the truncated stick-breaking fractions.

    Parameters
    ----------
    counts : np.ndarray
        (L,) number of observations allocated to each component
    alpha : float
        Concentration parameter
    rng : randkit.RngStream

    Returns
    -------
    tuple
        sticks v (with v_L = 1) and weights w
    """
    counts = np.asarray(counts, dtype=float)
    tail = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0.]])
    sticks = np.ones(counts.size)
    if counts.size > 1:
        sticks[:-1] = randkit.sample_beta(
            counts[:-1] + 1.,
            alpha + tail[:-1],
            rng
        )
    return sticks, stick_breaking(sticks)


def _cholesky(matrix, details):
    """
    Lower Cholesky factor, retried once with a diagonal jitter of
    1e-10 * trace / Q.

    Returns
    -------
    tuple
        factor and a flag telling whether jitter was needed
    """
    try:
        return linalg.cholesky(matrix, lower=True), False
    except linalg.LinAlgError:
        pass

    jitter = 1e-10 * np.trace(matrix) / matrix.shape[0]
    try:
        factor = linalg.cholesky(
            matrix + jitter * np.eye(matrix.shape[0]),
            lower=True
        )
    except linalg.LinAlgError:
        details = dict(details, jitter=float(jitter))
        raise NumericalFailure(
            '\nPosterior precision is not positive-definite',
            details
        )
    warnings.warn('jitter added to a posterior precision matrix')
    return factor, True


def _draw_from_precision(precision, rhs, rng, details):
    factor, jittered = _cholesky(precision, details)
    mean = linalg.cho_solve((factor, True), rhs)
    noise = rng.generator.standard_normal(mean.size)
    return mean + linalg.solve_triangular(factor.T, noise, lower=False), \
        jittered


def update_components(
        y,
        design,
        allocations,
        sigma2,
        m,
        s_inv,
        a,
        b,
        rng
):
    """
    Draws each component's coefficients given its current variance, then
    its variance given the new coefficients:

        beta_l ~ N(V_l (S^-1 m + sigma_l^-2 sum z y), V_l),
        V_l = (S^-1 + sigma_l^-2 sum z z')^-1
        sigma_l^-2 ~ Gamma(a + n_l / 2, b + RSS_l / 2)

    Components without observations are drawn from the base measure.

    Returns
    -------
    tuple
        betas (L, Q), sigma2 (L,), number of jittered factorisations
    """
    n_components = sigma2.size
    q = design.shape[1]
    betas = np.empty((n_components, q))
    new_sigma2 = np.empty(n_components)
    prior_rhs = s_inv @ m
    jittered = 0
    for component in range(n_components):
        members = allocations == component
        z_l = design[members]
        y_l = y[members]
        precision = s_inv + z_l.T @ z_l / sigma2[component]
        rhs = prior_rhs + z_l.T @ y_l / sigma2[component]
        betas[component], jitter = _draw_from_precision(
            precision,
            rhs,
            rng,
            {'component': component}
        )
        jittered += jitter

        residuals = y_l - z_l @ betas[component]
        new_sigma2[component] = 1. / randkit.sample_gamma(
            a + members.sum() / 2.,
            b + residuals @ residuals / 2.,
            rng
        )
    return betas, new_sigma2, jittered


def update_mean(betas, s_inv, prior, rng):
    """
    m ~ N(V (S0^-1 m0 + S^-1 sum beta_l), V), V = (S0^-1 + L S^-1)^-1
    """
    if betas.shape[0] < 1:
        raise ValueError('\nAt least one component is needed')
    s0_inv = np.linalg.inv(prior.s0)
    precision = s0_inv + betas.shape[0] * s_inv
    rhs = s0_inv @ prior.m0 + s_inv @ betas.sum(axis=0)
    m, _ = _draw_from_precision(precision, rhs, rng, {'step': 'mean'})
    return m


def update_precision(betas, m, prior, rng):
    """
    S^-1 ~ Wishart(nu + L, (nu psi + sum (beta_l - m)(beta_l - m)')^-1)
    """
    if betas.shape[0] < 1:
        raise ValueError('\nAt least one component is needed')
    deviations = betas - m
    inverse_scale = prior.nu * prior.psi + deviations.T @ deviations
    try:
        return randkit.sample_wishart(
            prior.nu + betas.shape[0],
            inverse_scale,
            rng
        )
    except ValueError as err:
        raise NumericalFailure(
            '\nWishart scale matrix is not positive-definite',
            {'step': 'precision', 'reason': str(err).strip()}
        )


def update_hyperparams(betas, s_inv, prior, rng):
    """
    Draws m given the current S^-1, then S^-1 given the new m.

    Returns
    -------
    tuple
        m and S^-1
    """
    m = update_mean(betas, s_inv, prior, rng)
    return m, update_precision(betas, m, prior, rng)


def mixture_log_likelihood(y, design, weights, betas, sigma2):
    log_terms = _component_log_densities(y, design, weights, betas, sigma2)
    return float(special.logsumexp(log_terms, axis=1).sum())


@dataclass
class FitResult:
    """
    Post burn-in draws of a Gibbs run, on the original response scale.

    Parameters
    ----------
    draws : list
        PosteriorDraw objects
    spec : splines.ModelSpec
    knots : dict
        Knot sets of the smooth terms, from nondiseased covariates
    prior : PriorSpec
        Prior used, on the scaled responses
    scale : float
        Standard deviation the responses were divided by
    y : np.ndarray
        Nondiseased test outcomes
    design : np.ndarray
        Nondiseased design matrix
    occupied : np.ndarray
        Number of occupied components at every retained iteration
    log_likelihood : np.ndarray
        Log-likelihood at every retained iteration
    diagnostics : dict
    """
    draws: list
    spec: splines.ModelSpec
    knots: dict
    prior: PriorSpec
    scale: float
    y: np.ndarray
    design: np.ndarray
    occupied: np.ndarray = None
    log_likelihood: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.draws:
            raise ValueError('\nA fit needs at least one draw')
        self.weights = np.array([draw.weights for draw in self.draws])
        self.betas = np.array([draw.betas for draw in self.draws])
        self.sigma2 = np.array([draw.sigma2 for draw in self.draws])

    def __len__(self):
        return len(self.draws)

    @property
    def n_draws(self):
        return len(self.draws)

    def design_for(self, covariates, warn=True):
        """
        Design matrix of a covariate table under the fitted spec and
        knots. Out-of-range values are clamped.

        Returns
        -------
        tuple
            (n, Q) matrix and number of clamped values
        """
        matrix, clamped = splines.design_matrix(
            self.spec,
            covariates,
            self.knots,
            warn=warn
        )
        if matrix.shape[1] != self.betas.shape[2]:
            raise DataValidationError(
                '\nDesign dimension does not match the fit'
            )
        return matrix, clamped

    def _chunks(self, chunk):
        for start in range(0, self.n_draws, chunk):
            yield slice(start, start + chunk)

    def cdf_matrix(self, y, design, chunk=256):
        """
        (S, n) matrix of F^(s)(y_j | z_j) for every retained draw.
        """
        y = np.asarray(y, dtype=float)
        result = np.empty((self.n_draws, y.size))
        for rows in self._chunks(chunk):
            means = np.einsum('slq,nq->snl', self.betas[rows], design)
            sd = np.sqrt(self.sigma2[rows])[:, None, :]
            cdf = special.ndtr((y[None, :, None] - means) / sd)
            result[rows] = np.einsum('snl,sl->sn', cdf, self.weights[rows])
        return np.clip(result, 0., 1.)

    def log_pdf_matrix(self, y, design, chunk=256):
        """
        (S, n) matrix of log f^(s)(y_j | z_j), evaluated in log space.
        """
        y = np.asarray(y, dtype=float)
        result = np.empty((self.n_draws, y.size))
        for rows in self._chunks(chunk):
            means = np.einsum('slq,nq->snl', self.betas[rows], design)
            sigma2 = self.sigma2[rows][:, None, :]
            with np.errstate(divide='ignore'):
                log_weights = np.log(self.weights[rows])[:, None, :]
            log_terms = log_weights - 0.5 * (
                np.log(2. * np.pi * sigma2) +
                (y[None, :, None] - means) ** 2 / sigma2
            )
            result[rows] = special.logsumexp(log_terms, axis=2)
        return result

    def posterior_mean_coefficients(self):
        """
        Posterior mean of the mixture regression function coefficients,
        sum_l w_l beta_l averaged over draws.
        """
        return np.einsum('sl,slq->q', self.weights, self.betas) / self.n_draws


def _as_group(data):
    if isinstance(data, Dataset):
        return data.healthy
    if isinstance(data, Group):
        return data
    raise TypeError('\ndata must be a Dataset or a Group')


def gibbs_fit(
        data,
        spec,
        prior=None,
        nsim=3000,
        nburn=500,
        rng=None,
        scale=True,
        verbose=False
):
    """
    Fits the B-splines DDP mixture to the nondiseased group.

    Parameters
    ----------
    data : tools.Dataset or tools.Group
        Study data (only the nondiseased group is used) or the nondiseased
        group itself
    spec : splines.ModelSpec
        Mean structure of each component
    prior : PriorSpec
        Defaults to PriorSpec.default(Q)
    nsim : int
        Total number of iterations
    nburn : int
        Number of discarded initial iterations
    rng : randkit.RngStream
    scale : bool
        Divide responses by their standard deviation before sampling
    verbose : bool
        Print progress

    Returns
    -------
    FitResult
    """
    if not 0 <= nburn < nsim:
        raise ValueError('\nnburn must be in [0, nsim)')
    group = _as_group(data)
    if len(group) == 0:
        raise DataValidationError('\nNo nondiseased observations')
    rng = rng or randkit.RngStream()

    knots = spec.fit_knots(group.covariates)
    design, clamped = splines.design_matrix(spec, group.covariates, knots)
    n, q = design.shape
    prior = prior or PriorSpec.default(q)
    if prior.q != q:
        raise ValueError(
            '\nPrior dimension {0} does not match Q = {1}'.format(prior.q, q)
        )
    if q >= n:
        warnings.warn(
            'Q = {0} is not smaller than n = {1}; the fit is prior '
            'dominated'.format(q, n)
        )

    factor = 1.
    if scale and n > 1:
        factor = float(np.std(group.y, ddof=1))
        if not factor > 0:
            factor = 1.
    y = group.y / factor

    # least squares start for every component
    start, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    residuals = y - design @ start
    variance = residuals @ residuals / (n - rank) if n > rank else 1.
    if not variance > 0:
        variance = 1.
    n_components = prior.n_components
    betas = np.tile(start, (n_components, 1))
    sigma2 = np.full(n_components, variance)
    weights = np.full(n_components, 1. / n_components)
    m = start.copy()
    s_inv = np.linalg.inv(prior.psi)

    if verbose:
        print('fitting B-splines DDP mixture ({0} iterations)... '
              .format(nsim), end='')

    draws = []
    occupied = []
    log_likelihood = []
    jittered = 0
    log_scale = n * np.log(factor)
    for iteration in range(nsim):
        allocations = update_allocations(
            y, design, weights, betas, sigma2, rng
        )
        counts = np.bincount(allocations, minlength=n_components)
        sticks, weights = update_stick_weights(counts, prior.alpha, rng)
        betas, sigma2, jitter = update_components(
            y, design, allocations, sigma2, m, s_inv, prior.a, prior.b, rng
        )
        jittered += jitter
        m, s_inv = update_hyperparams(betas, s_inv, prior, rng)

        if iteration >= nburn:
            draws.append(PosteriorDraw(
                weights=weights,
                betas=betas,
                sigma2=sigma2,
                m=m,
                s_inv=s_inv,
                allocations=allocations,
                sticks=sticks
            ).rescaled(factor))
            occupied.append(int(np.count_nonzero(counts)))
            log_likelihood.append(
                mixture_log_likelihood(y, design, weights, betas, sigma2) -
                log_scale
            )

    if verbose:
        print('Done')

    return FitResult(
        draws=draws,
        spec=spec,
        knots=knots,
        prior=prior,
        scale=factor,
        y=group.y.copy(),
        design=design,
        occupied=np.array(occupied),
        log_likelihood=np.array(log_likelihood),
        diagnostics={
            'jitter_count': int(jittered),
            'clamped_nondiseased': int(clamped),
            'boundary_convention': splines.BOUNDARY_CONVENTION,
            'response_scale': factor,
            'q': int(q),
            'n': int(n),
            'n_components': int(n_components)
        }
    )


def bsp_fit(
        data,
        spec,
        nsim=3000,
        nburn=500,
        rng=None,
        verbose=False
):
    """
    Bayesian normal linear model: gibbs_fit with a single component and the
    covariates of `spec` entering linearly.
    """
    linear = spec.linear_counterpart()
    prior = PriorSpec.default(linear.dimension, n_components=1)
    return gibbs_fit(
        data,
        linear,
        prior=prior,
        nsim=nsim,
        nburn=nburn,
        rng=rng,
        verbose=verbose
    )


def truncation_bound(alpha, n_components):
    """
    Expected mass E[sum_{l>L} w_l] = (alpha / (1 + alpha))^L left out by
    truncating the stick-breaking construction at L components.
    """
    if alpha <= 0 or n_components < 1:
        raise ValueError('\nalpha must be > 0 and L >= 1')
    return (alpha / (1. + alpha)) ** n_components


def prior_expected_clusters(alpha, n):
    """
    Prior expected number of occupied components,
    sum_{i=1}^n alpha / (alpha + i - 1).
    """
    if alpha <= 0 or n < 1:
        raise ValueError('\nalpha must be > 0 and n >= 1')
    return float(np.sum(alpha / (alpha + np.arange(n))))


def chain_summary(fit):
    """
    Mean and standard deviation of the number of occupied components and
    of the log-likelihood over the first and second halves of the retained
    chain. Large differences between halves suggest a longer burn-in.

    Returns
    -------
    pd.DataFrame
        Rows 'occupied' and 'log_likelihood'
    """
    summary = pd.DataFrame(
        columns=['first_mean', 'first_sd', 'second_mean', 'second_sd'],
        dtype=float
    )
    for name in ('occupied', 'log_likelihood'):
        trace = np.asarray(getattr(fit, name), dtype=float)
        halves = np.array_split(trace, 2)
        row = []
        for half in halves:
            row += [
                half.mean() if half.size else np.nan,
                half.std(ddof=1) if half.size > 1 else np.nan
            ]
        summary.loc[name] = row
    return summary
