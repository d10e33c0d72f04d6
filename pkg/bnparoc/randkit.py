# -*- coding: utf-8 -*-
"""
PURPOSE:
    Seedable random streams, the samplers used by the Gibbs sampler, the
    Bayesian bootstrap and the simulation scenarios, and the standard
    normal special functions.

    Every sampler takes an RngStream as its last positional argument, so a
    computation driven by (seed, stream id) is reproducible bit for bit.
"""

from dataclasses import dataclass
import numpy as np
from scipy import special, stats


class RngStream:
    """
    A single-owner random stream identified by (seed, stream id).

    Streams are built from numpy's SeedSequence, with the stream id used as
    spawn key, so stream k of a seed is always the same sequence no matter
    in which order streams are created or consumed. Child streams extend
    the spawn key, which keeps replicate-level parallel work independent.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed
    stream_id : int
        64-bit unsigned stream identifier
    """
    def __init__(
            self,
            seed=0,
            stream_id=0,
            _path=()
    ):
        if seed < 0 or stream_id < 0:
            raise ValueError('\nseed and stream_id must be unsigned')
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(int(item) for item in _path)
        sequence = np.random.SeedSequence(
            entropy=self.seed,
            spawn_key=(self.stream_id,) + self._path
        )
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def child(self, index):
        """
        Independent stream number `index` below this one.
        """
        return RngStream(self.seed, self.stream_id, self._path + (index,))

    def __repr__(self):
        return 'RngStream(seed={0}, stream_id={1}, path={2})'.format(
            self.seed,
            self.stream_id,
            self._path
        )


@dataclass(frozen=True)
class SkewNormalParams:
    """
    Skew normal law given by its mean, variance and Azzalini shape.

    Parameters
    ----------
    mean : float
        Population mean
    variance : float
        Population variance, > 0
    shape : float
        Shape (skewness) parameter lambda
    """
    mean: float
    variance: float
    shape: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError('\nSkew normal variance must be > 0')

    @property
    def delta(self):
        return self.shape / np.sqrt(1. + self.shape ** 2)

    @property
    def scale(self):
        """
        Internal scale omega
        """
        return np.sqrt(
            self.variance / (1. - 2. * self.delta ** 2 / np.pi)
        )

    @property
    def location(self):
        """
        Internal location xi
        """
        return self.mean - self.scale * self.delta * np.sqrt(2. / np.pi)


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError('\nNon-finite input')
    return x


def std_normal_cdf(x):
    """
    Standard normal distribution function.

    Parameters
    ----------
    x : float or np.ndarray
        Finite evaluation point(s)

    Returns
    -------
    float or np.ndarray
        Phi(x)
    """
    x = _check_finite(x)
    result = special.ndtr(x)
    return float(result) if result.ndim == 0 else result


def std_normal_quantile(p):
    """
    Standard normal quantile function.

    Parameters
    ----------
    p : float or np.ndarray
        Probabilities strictly inside (0, 1)

    Returns
    -------
    float or np.ndarray
        Phi^-1(p)
    """
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0) & (p < 1)):
        raise ValueError('\nProbability outside of (0, 1)')
    result = special.ndtri(p)
    return float(result) if result.ndim == 0 else result


def sample_normal(mean, variance, rng, size=None):
    if np.any(np.asarray(variance) < 0):
        raise ValueError('\nNegative variance')
    return rng.generator.normal(mean, np.sqrt(variance), size=size)


def sample_gamma(shape, rate, rng, size=None):
    """
    Gamma draws with shape/rate parametrisation.
    """
    if np.any(np.asarray(shape) <= 0) or np.any(np.asarray(rate) <= 0):
        raise ValueError('\nGamma shape and rate must be > 0')
    return rng.generator.gamma(shape, 1. / np.asarray(rate), size=size)


def sample_beta(a, b, rng, size=None):
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise ValueError('\nBeta parameters must be > 0')
    return rng.generator.beta(a, b, size=size)


def sample_bernoulli(p, rng, size=None):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError('\nBernoulli probability outside of [0, 1]')
    return (rng.generator.random(size=size) < p).astype(int)


def sample_multinomial(n, probabilities, rng):
    return rng.generator.multinomial(n, probabilities)


def sample_categorical(probabilities, rng):
    """
    One categorical draw per row of a probability matrix.

    Parameters
    ----------
    probabilities : np.ndarray
        (n, k) matrix whose rows sum to one

    Returns
    -------
    np.ndarray
        n integer labels in 0..k-1
    """
    probabilities = np.atleast_2d(probabilities)
    cumulative = np.cumsum(probabilities, axis=1)
    uniform = rng.generator.random(probabilities.shape[0])
    # scale by the row total so rounding in the cumulative sum never
    # leaves a draw past the last label
    threshold = uniform[:, None] * cumulative[:, -1:]
    labels = (cumulative <= threshold).sum(axis=1)
    return np.minimum(labels, probabilities.shape[1] - 1)


def sample_dirichlet(concentration, rng, size=None):
    """
    Dirichlet draws.

    Parameters
    ----------
    concentration : array-like
        Positive concentration parameters, length >= 1
    rng : RngStream
    size : int
        Number of draws. If None a single weight vector is returned.

    Returns
    -------
    np.ndarray
        Weight vector(s) on the simplex
    """
    concentration = np.asarray(concentration, dtype=float).ravel()
    if concentration.size < 1:
        raise ValueError('\nEmpty concentration vector')
    if np.any(concentration <= 0):
        raise ValueError('\nDirichlet concentration must be > 0')

    draws = rng.generator.gamma(
        concentration,
        1.,
        size=(1 if size is None else size, concentration.size)
    )
    draws /= draws.sum(axis=1, keepdims=True)
    return draws[0] if size is None else draws


def sample_wishart(df, inverse_scale, rng):
    """
    Wishart draw with df degrees of freedom and expectation
    df * inverse_scale^-1. Passing inverse_scale = nu * Psi gives a draw
    with expectation Psi^-1.

    Parameters
    ----------
    df : int
        Degrees of freedom, >= dimension
    inverse_scale : np.ndarray
        Symmetric positive-definite matrix
    rng : RngStream

    Returns
    -------
    np.ndarray
        Symmetric positive-definite matrix
    """
    inverse_scale = np.atleast_2d(np.asarray(inverse_scale, dtype=float))
    dimension = inverse_scale.shape[0]
    if df < dimension:
        raise ValueError('\nWishart degrees of freedom < dimension')
    try:
        np.linalg.cholesky(inverse_scale)
    except np.linalg.LinAlgError:
        raise ValueError('\nWishart scale matrix is not positive-definite')

    scale = np.linalg.inv(inverse_scale)
    scale = (scale + scale.T) / 2.
    draw = stats.wishart.rvs(
        df=df,
        scale=scale,
        random_state=rng.generator
    )
    return np.atleast_2d(draw)


def sample_multivariate_normal(
        mean,
        matrix,
        rng,
        precision=False
):
    """
    Multivariate normal draw through a Cholesky factor.

    Parameters
    ----------
    mean : np.ndarray
        Mean vector
    matrix : np.ndarray
        Covariance matrix, or precision matrix if precision is True
    rng : RngStream
    precision : bool
        Interpret matrix as a precision matrix

    Returns
    -------
    np.ndarray
    """
    mean = np.asarray(mean, dtype=float)
    factor = np.linalg.cholesky(np.atleast_2d(matrix))
    noise = rng.generator.standard_normal(mean.size)
    if precision:
        # (L L')^-1 = L'^-1 L^-1, so L'^-1 z has the right covariance
        return mean + np.linalg.solve(factor.T, noise)
    return mean + factor @ noise


def sample_skew_normal(params, rng, size=None):
    """
    Skew normal draws with the given mean, variance and shape.
    """
    return stats.skewnorm.rvs(
        params.shape,
        loc=params.location,
        scale=params.scale,
        size=size,
        random_state=rng.generator
    )
