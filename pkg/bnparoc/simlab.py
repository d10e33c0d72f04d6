# -*- coding: utf-8 -*-
"""
PURPOSE:
    Simulation harness: the six data generating scenarios, Monte Carlo
    oracles of the true AROC curve and AAUC, error metrics, replicated
    coverage and model-criteria studies, and the normal-linear
    motivational setups with closed-form AROC and pooled ROC curves.
"""

from dataclasses import asdict, dataclass, field
import hashlib
import json
import multiprocessing as mp
import os
import warnings
import numpy as np
import pandas as pd
from scipy import special
from . import aroc, ddp, kernelaroc, modelcrit, randkit, splines
from .tools import Dataset

SCENARIO_IDS = ('I', 'II', 'III', 'IV', 'V', 'VI')
ORACLE_SEED = 20180101
ORACLE_DRAWS = 10 ** 6
SD_HEALTHY = 0.5
SD_DISEASED = 1.

HEALTHY_COVARIATE = randkit.SkewNormalParams(mean=0., variance=25., shape=2.)
DISEASED_COVARIATE = randkit.SkewNormalParams(mean=3., variance=16., shape=1.)

COVARIATES = {
    'I': ('x1',),
    'II': ('x1',),
    'III': ('x1',),
    'IV': ('x1',),
    'V': ('x1', 'x2'),
    'VI': ('x1', 'x3')
}

DEFAULT_FORMULAS = {
    'I': 'y ~ s(x1, K={k})',
    'II': 'y ~ s(x1, K={k})',
    'III': 'y ~ s(x1, K={k})',
    'IV': 'y ~ s(x1, K={k})',
    'V': 'y ~ s(x1, K={k}) + s(x2, K={k})',
    'VI': 'y ~ f(x3) + s(x1, K={k}, by=x3)'
}


def _rescaled(x):
    return (2. * x - 10.) / 10.


def _positive_cube(u):
    return np.maximum(u, 0.) ** 3


def healthy_mean(scenario_id, x):
    """
    Conditional mean of the nondiseased outcomes.

    Parameters
    ----------
    scenario_id : str
    x : dict or pd.DataFrame
        Covariate columns

    Returns
    -------
    np.ndarray
    """
    x1 = np.asarray(x['x1'], dtype=float)
    if scenario_id == 'I':
        return np.full(x1.shape, 0.5)
    if scenario_id == 'II':
        return 0.5 + (2. * x1 - 10.) / 23.
    if scenario_id == 'III':
        return 0.25 + 0.5 * (2. * x1 - 10.) / 23.
    if scenario_id == 'IV':
        u = (x1 + 8.) / 23.
        return 5. + 3. * u ** 2 - 25. * _positive_cube(u - 0.2) + \
            250. * _positive_cube(u - 0.65)
    if scenario_id == 'V':
        x2 = np.asarray(x['x2'], dtype=float)
        return 0.5 * np.exp(_rescaled(x1)) - \
            2. * ((2. * x2 ** 2 - 10.) / 10.)
    if scenario_id == 'VI':
        x3 = np.asarray(x['x3'], dtype=float)
        return -np.sin(0.7 * np.pi * (_rescaled(x1) + 30.)) * x3 + \
            _rescaled(x1) ** 2 * (1. - x3)
    raise ValueError('\nUnknown scenario ' + str(scenario_id))


def diseased_mean(scenario_id, x):
    """
    Conditional mean of the diseased outcomes.
    """
    x1 = np.asarray(x['x1'], dtype=float)
    if scenario_id == 'I':
        return np.ones(x1.shape)
    if scenario_id == 'II':
        return 1. + (2. * x1 - 10.) / 23.
    if scenario_id == 'III':
        return 0.75 + (2. * x1 - 10.) / 23.
    if scenario_id == 'IV':
        return -3. - 0.6 * ((x1 + 8.) / 23.)
    if scenario_id == 'V':
        return 0.5 * np.sin(np.pi * (_rescaled(x1) + 1.)) + \
            0.5 * np.exp(_rescaled(x1))
    if scenario_id == 'VI':
        return 0.5 + _rescaled(x1) ** 2
    raise ValueError('\nUnknown scenario ' + str(scenario_id))


@dataclass(frozen=True)
class Scenario:
    """
    One simulation scenario with its group sizes.

    Parameters
    ----------
    id : str
        'I' to 'VI'
    n_healthy : int
    n_diseased : int
    """
    id: str
    n_healthy: int = 200
    n_diseased: int = 200

    def __post_init__(self):
        if self.id not in SCENARIO_IDS:
            raise ValueError(
                '\nScenario must be one of ' + ', '.join(SCENARIO_IDS)
            )
        if self.n_healthy < 1 or self.n_diseased < 1:
            raise ValueError('\nGroup sizes must be >= 1')

    @property
    def covariates(self):
        return COVARIATES[self.id]

    def default_spec(self, n_interior=4):
        return splines.ModelSpec.parse(
            DEFAULT_FORMULAS[self.id].format(k=n_interior)
        )


def sample_covariates(scenario_id, n, diseased, rng):
    """
    Covariate table of one group.
    """
    law = DISEASED_COVARIATE if diseased else HEALTHY_COVARIATE
    columns = {}
    for name in COVARIATES[scenario_id]:
        if name == 'x3':
            columns[name] = randkit.sample_bernoulli(0.5, rng, size=n)
        else:
            columns[name] = randkit.sample_skew_normal(law, rng, size=n)
    return pd.DataFrame(columns, columns=list(COVARIATES[scenario_id]))


def generate_scenario(scenario, rng):
    """
    Simulated study data for a scenario.

    Parameters
    ----------
    scenario : Scenario
    rng : randkit.RngStream

    Returns
    -------
    tools.Dataset
    """
    healthy = sample_covariates(scenario.id, scenario.n_healthy, False, rng)
    diseased = sample_covariates(scenario.id, scenario.n_diseased, True, rng)
    y_healthy = randkit.sample_normal(
        healthy_mean(scenario.id, healthy),
        SD_HEALTHY ** 2,
        rng
    )
    y_diseased = randkit.sample_normal(
        diseased_mean(scenario.id, diseased),
        SD_DISEASED ** 2,
        rng
    )
    return Dataset(
        y=np.concatenate([y_healthy, y_diseased]),
        status=np.concatenate([
            np.zeros(scenario.n_healthy, dtype=bool),
            np.ones(scenario.n_diseased, dtype=bool)
        ]),
        covariates=pd.concat([healthy, diseased], ignore_index=True)
    )


def cache_directory():
    return os.environ.get(
        'BNPAROC_CACHE',
        os.path.join(os.path.expanduser('~'), '.cache', 'bnparoc')
    )


def _cache_path(kind, scenario_id, grid, n_draws, seed):
    key = hashlib.sha1(np.asarray(grid, dtype=float).tobytes()).hexdigest()
    return os.path.join(
        cache_directory(),
        '{0}_{1}_{2}_{3}_{4}.npy'.format(
            kind, scenario_id, n_draws, seed, key[:12]
        )
    )


def _load_or_compute(path, compute, use_cache):
    if use_cache and os.path.exists(path):
        return np.load(path)
    values = compute()
    if use_cache:
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            np.save(path, values)
        except OSError as err:
            warnings.warn('could not cache oracle: ' + str(err))
    return values


def _oracle_covariates(scenario_id, n_draws, seed):
    return sample_covariates(
        scenario_id,
        n_draws,
        True,
        randkit.RngStream(seed, SCENARIO_IDS.index(scenario_id))
    )


def true_aroc(
        scenario_id,
        grid=None,
        n_draws=ORACLE_DRAWS,
        seed=ORACLE_SEED,
        use_cache=True,
        verbose=False
):
    """
    True AROC curve of a scenario,
    AROC(t) = E_X[1 - Phi((mu_H(X) + sd_H Phi^-1(1 - t) - mu_D(X)) / sd_D)]
    with X distributed as the diseased covariates. Scenario I is evaluated
    in closed form, Phi(0.5 + 0.5 Phi^-1(t)); the others by Monte Carlo
    over `n_draws` covariate draws with a fixed seed, cached on disk.

    Returns
    -------
    np.ndarray
    """
    grid = aroc.check_grid(aroc.default_grid() if grid is None else grid)
    if scenario_id not in SCENARIO_IDS:
        raise ValueError('\nUnknown scenario ' + str(scenario_id))
    if scenario_id == 'I':
        return special.ndtr(0.5 + 0.5 * special.ndtri(grid))

    def compute():
        if verbose:
            print('computing true AROC for scenario {0}... '
                  .format(scenario_id), end='')
        covariates = _oracle_covariates(scenario_id, n_draws, seed)
        mean_h = healthy_mean(scenario_id, covariates)
        mean_d = diseased_mean(scenario_id, covariates)
        quantiles = special.ndtri(1. - grid)
        curve = np.empty(grid.size)
        for index, quantile in enumerate(quantiles):
            threshold = mean_h + SD_HEALTHY * quantile
            curve[index] = np.mean(
                special.ndtr((mean_d - threshold) / SD_DISEASED)
            )
        if verbose:
            print('Done')
        return curve

    path = _cache_path('aroc', scenario_id, grid, n_draws, seed)
    return _load_or_compute(path, compute, use_cache)


def true_aauc(
        scenario_id,
        n_draws=ORACLE_DRAWS,
        seed=ORACLE_SEED,
        use_cache=True
):
    """
    True AAUC, E_X[Phi((mu_D(X) - mu_H(X)) / sqrt(sd_H^2 + sd_D^2))].
    """
    if scenario_id not in SCENARIO_IDS:
        raise ValueError('\nUnknown scenario ' + str(scenario_id))
    spread = np.sqrt(SD_HEALTHY ** 2 + SD_DISEASED ** 2)
    if scenario_id == 'I':
        return float(special.ndtr(0.5 / spread))

    def compute():
        covariates = _oracle_covariates(scenario_id, n_draws, seed)
        gap = diseased_mean(scenario_id, covariates) - \
            healthy_mean(scenario_id, covariates)
        return np.array([np.mean(special.ndtr(gap / spread))])

    path = _cache_path('aauc', scenario_id, [], n_draws, seed)
    return float(_load_or_compute(path, compute, use_cache)[0])


def ermse(estimated, truth):
    """
    Empirical root mean squared error over the FPF grid,
    sqrt(mean((A_hat(t_r) - A(t_r))^2)).

    Parameters
    ----------
    estimated : aroc.CurveEstimate or np.ndarray
    truth : np.ndarray
        True curve on the same grid
    """
    values = getattr(estimated, 'mean', estimated)
    values = np.asarray(values, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if values.shape != truth.shape:
        raise ValueError('\nEstimate and truth are on different grids')
    return float(np.sqrt(np.mean((values - truth) ** 2)))


@dataclass
class EstimatorConfig:
    """
    Settings of one AROC estimator in a simulation study.

    Parameters
    ----------
    method : str
        'bnp' (B-splines DDP mixture), 'bsp' (Bayesian normal linear
        model), 'kernel', 'semiparametric' or 'pooled'
    nsim, nburn : int
        Gibbs iterations and burn-in
    n_interior : int
        Interior knots per smooth term
    n_components : int
        Truncation level L
    alpha : float
        Stick-breaking concentration
    n_boot : int
        Bootstrap resamples (kernel, semiparametric, pooled)
    level : float
        Band level
    grid_size : int
        Number of FPF grid points
    formula : str
        Model formula; default depends on the scenario
    """
    method: str = 'bnp'
    nsim: int = 3000
    nburn: int = 500
    n_interior: int = 4
    n_components: int = 10
    alpha: float = 1.
    n_boot: int = 500
    level: float = 0.95
    grid_size: int = 101
    formula: str = None

    METHODS = ('bnp', 'bsp', 'kernel', 'semiparametric', 'pooled')

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise ValueError(
                '\nmethod must be one of ' + ', '.join(self.METHODS)
            )

    @classmethod
    def desk(cls, method='bnp', **kwargs):
        """
        Settings that finish a 50 replicate study in minutes.
        """
        return cls(method=method, nsim=3000, nburn=500, **kwargs)

    @classmethod
    def full(cls, method='bnp', **kwargs):
        """
        8000 kept draws after 2000 burn-in iterations.
        """
        return cls(method=method, nsim=10000, nburn=2000, **kwargs)

    @property
    def name(self):
        if self.method == 'bnp':
            return 'bnp_k{0}'.format(self.n_interior)
        return self.method

    @property
    def grid(self):
        return aroc.default_grid(self.grid_size)

    def spec_for(self, scenario):
        if self.formula:
            return splines.ModelSpec.parse(self.formula, self.n_interior)
        return scenario.default_spec(self.n_interior)

    def to_dict(self):
        return asdict(self)


def fit_nondiseased(dataset, scenario, config, rng):
    """
    Bayesian fit of the nondiseased group for the 'bnp' and 'bsp' methods.
    """
    spec = config.spec_for(scenario)
    if config.method == 'bsp':
        return ddp.bsp_fit(
            dataset, spec, nsim=config.nsim, nburn=config.nburn, rng=rng
        )
    prior = ddp.PriorSpec.default(
        spec.dimension,
        n_components=config.n_components,
        alpha=config.alpha
    )
    return ddp.gibbs_fit(
        dataset, spec, prior, nsim=config.nsim, nburn=config.nburn, rng=rng
    )


def estimate_aroc(dataset, scenario, config, rng):
    """
    AROC curve and AAUC of one dataset with the configured estimator.

    Returns
    -------
    tuple
        CurveEstimate, ScalarEstimate and the nondiseased fit (None for the
        frequentist and pooled methods)
    """
    grid = config.grid
    if config.method in ('bnp', 'bsp'):
        fit = fit_nondiseased(dataset, scenario, config, rng.child(0))
        summaries = aroc.bb_summaries(
            aroc.placement_values(fit, dataset),
            grid=grid,
            level=config.level,
            rng=rng.child(1)
        )
        return summaries['aroc'], summaries['aauc'], fit
    if config.method == 'kernel':
        if len(scenario.covariates) != 1:
            raise ValueError(
                '\nThe kernel estimator needs a single continuous covariate'
            )
        curve, area, _ = kernelaroc.kernel_aroc(
            dataset, grid, config.n_boot, config.level, rng
        )
        return curve, area, None
    if config.method == 'semiparametric':
        curve, area, _ = kernelaroc.semiparametric_aroc(
            dataset,
            config.spec_for(scenario),
            grid,
            config.n_boot,
            config.level,
            rng
        )
        return curve, area, None
    curve, area = aroc.pooled_roc_bb(
        dataset.healthy.y,
        dataset.diseased.y,
        grid,
        config.n_boot,
        config.level,
        rng
    )
    return curve, area, None


def _run_replicate(index, scenario, config, rng, truth, true_area):
    try:
        dataset = generate_scenario(scenario, rng.child(0))
        curve, area, _ = estimate_aroc(dataset, scenario, config, rng.child(1))
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as err:
        return {
            'replicate': index,
            'failed': True,
            'error': str(err).strip()
        }
    covered = (curve.lower <= truth) & (truth <= curve.upper)
    return {
        'replicate': index,
        'failed': False,
        'error': '',
        'ermse': ermse(curve, truth),
        'aauc': area.mean,
        'aauc_bias': area.mean - true_area,
        'coverage': float(np.mean(covered)),
        'aauc_covered': bool(area.lower <= true_area <= area.upper),
        'band_width': float(np.mean(curve.upper - curve.lower))
    }


def _run_all(function, stargs, threads):
    if threads and threads > 1:
        with mp.Pool(threads) as pool:
            result = pool.starmap(function, stargs)
    else:
        result = [function(*args) for args in stargs]
    result.sort(key=lambda row: row['replicate'])
    return result


@dataclass
class StudyReport:
    """
    Replicate-level results of a simulation study and their aggregate.
    """
    scenario: Scenario
    config: EstimatorConfig
    replicates: pd.DataFrame
    n_failed: int = 0
    errors: list = field(default_factory=list)

    @property
    def aggregate(self):
        ok = self.replicates.loc[~self.replicates['failed'].astype(bool)]
        if ok.empty:
            nan = float('nan')
            return {
                'ermse_mean_x100': nan, 'ermse_sd_x100': nan,
                'aauc_bias_mean': nan, 'aauc_bias_sd': nan,
                'coverage_percent': nan, 'aauc_coverage_percent': nan,
                'n_replicates': 0, 'n_failed': int(self.n_failed)
            }
        return {
            'ermse_mean_x100': float(100. * ok['ermse'].mean()),
            'ermse_sd_x100': float(100. * ok['ermse'].std(ddof=1))
            if len(ok.index) > 1 else 0.,
            'aauc_bias_mean': float(ok['aauc_bias'].mean()),
            'aauc_bias_sd': float(ok['aauc_bias'].std(ddof=1))
            if len(ok.index) > 1 else 0.,
            'coverage_percent': float(100. * ok['coverage'].mean()),
            'aauc_coverage_percent': float(
                100. * ok['aauc_covered'].astype(float).mean()
            ),
            'n_replicates': int(len(ok.index)),
            'n_failed': int(self.n_failed)
        }

    def to_dict(self):
        return {
            'scenario': self.scenario.id,
            'sizes': [self.scenario.n_healthy, self.scenario.n_diseased],
            'estimator': self.config.to_dict(),
            'aggregate': self.aggregate,
            'errors': list(self.errors)
        }

    def to_csv(self, path):
        self.replicates.to_csv(path, index=False)

    def to_json(self, path, extra=None):
        content = self.to_dict()
        content.update(extra or {})
        with open(path, 'w') as file:
            json.dump(content, file, indent=2, sort_keys=True)


def coverage_study(
        scenario,
        config,
        n_replicates,
        rng=None,
        threads=1,
        verbose=False
):
    """
    Replicated simulation study of one estimator in one scenario.

    Every replicate k runs on rng.child(k): it generates a dataset,
    estimates the AROC curve, and records the ERMSE against the true
    curve, the AAUC bias, and the share of FPF grid points whose true
    value lies inside the band. Failed replicates are excluded and
    counted.

    Parameters
    ----------
    scenario : Scenario
    config : EstimatorConfig
    n_replicates : int
    rng : randkit.RngStream
    threads : int
        Worker processes; results do not depend on it
    verbose : bool

    Returns
    -------
    StudyReport
    """
    if n_replicates < 1:
        raise ValueError('\nNeed at least one replicate')
    rng = rng or randkit.RngStream()
    truth = true_aroc(scenario.id, config.grid, verbose=verbose)
    true_area = true_aauc(scenario.id)

    if verbose:
        print('running {0} replicates of scenario {1} ({2})... '.format(
            n_replicates, scenario.id, config.name), end='')
    stargs = [
        [index, scenario, config, rng.child(index), truth, true_area]
        for index in range(n_replicates)
    ]
    result = _run_all(_run_replicate, stargs, threads)
    if verbose:
        print('Done')

    frame = pd.DataFrame(result)
    failed = frame.loc[frame['failed'].astype(bool)]
    if len(failed.index):
        warnings.warn(
            '{0} of {1} replicates failed'.format(
                len(failed.index), n_replicates
            )
        )
    return StudyReport(
        scenario=scenario,
        config=config,
        replicates=frame,
        n_failed=int(len(failed.index)),
        errors=failed['error'].tolist()
    )


def _run_criteria_replicate(index, scenario, candidates, rng, truth):
    dataset = generate_scenario(scenario, rng.child(0))
    rows = []
    for position, config in enumerate(candidates):
        stream = rng.child(position + 1)
        try:
            fit = fit_nondiseased(dataset, scenario, config, stream.child(0))
            report = modelcrit.waic(fit)
            curve = aroc.bb_aroc(
                aroc.placement_values(fit, dataset),
                grid=config.grid,
                level=config.level,
                rng=stream.child(1)
            )
            rows.append({
                'replicate': index,
                'estimator': config.name,
                'waic': report.waic,
                'lpml': report.lpml,
                'ermse': ermse(curve, truth)
            })
        except (ArithmeticError, ValueError, np.linalg.LinAlgError):
            rows.append({
                'replicate': index,
                'estimator': config.name,
                'waic': np.nan,
                'lpml': np.nan,
                'ermse': np.nan
            })
    return rows


def criteria_study(
        scenario,
        candidates,
        n_replicates,
        rng=None,
        threads=1,
        verbose=False
):
    """
    Fits every candidate nondiseased model ('bnp' or 'bsp' configs) to the
    same replicated datasets and records WAIC, LPML and AROC ERMSE.

    Returns
    -------
    pd.DataFrame
        One row per (replicate, candidate)
    """
    candidates = list(candidates)
    for config in candidates:
        if config.method not in ('bnp', 'bsp'):
            raise ValueError('\nCriteria need a Bayesian nondiseased model')
    names = [config.name for config in candidates]
    if len(set(names)) != len(names):
        raise ValueError('\nCandidate names must be distinct')
    rng = rng or randkit.RngStream()
    truth = true_aroc(scenario.id, candidates[0].grid)

    if verbose:
        print('comparing {0} models over {1} replicates... '.format(
            len(candidates), n_replicates), end='')
    stargs = [
        [index, scenario, candidates, rng.child(index), truth]
        for index in range(n_replicates)
    ]
    if threads and threads > 1:
        with mp.Pool(threads) as pool:
            result = pool.starmap(_run_criteria_replicate, stargs)
    else:
        result = [_run_criteria_replicate(*args) for args in stargs]
    if verbose:
        print('Done')

    rows = [row for replicate in result for row in replicate]
    frame = pd.DataFrame(rows)
    return frame.sort_values(['replicate', 'estimator']).reset_index(
        drop=True
    )


def criteria_wins(frame):
    """
    Share of replicates in which each candidate has the best WAIC
    (smallest), the best LPML (largest) and the smallest ERMSE.
    """
    complete = frame.dropna().groupby('replicate').filter(
        lambda group: len(group.index) == frame['estimator'].nunique()
    )
    n_replicates = complete['replicate'].nunique()
    wins = pd.DataFrame(
        0.,
        index=sorted(frame['estimator'].unique()),
        columns=['waic', 'lpml', 'ermse']
    )
    if n_replicates == 0:
        return wins
    for _, group in complete.groupby('replicate'):
        group = group.set_index('estimator')
        wins.loc[group['waic'].idxmin(), 'waic'] += 1
        wins.loc[group['lpml'].idxmax(), 'lpml'] += 1
        wins.loc[group['ermse'].idxmin(), 'ermse'] += 1
    return wins / n_replicates


@dataclass(frozen=True)
class MotivationalSetup:
    """
    Normal covariate and normal linear outcome models in both groups:
    X ~ N(covariate_mean, covariate_sd^2) and
    Y | X ~ N(intercept + slope X, sd^2), separately per group.
    """
    healthy_intercept: float
    diseased_intercept: float
    healthy_slope: float = 0.
    diseased_slope: float = 0.
    healthy_sd: float = 0.3
    diseased_sd: float = 0.3
    healthy_covariate_mean: float = 0.
    diseased_covariate_mean: float = 0.
    healthy_covariate_sd: float = 0.15
    diseased_covariate_sd: float = 0.15

    @classmethod
    def covariate_effect(cls):
        """
        Equal covariate laws and a common covariate shift in both groups.
        """
        return cls(0.5, 0.75, healthy_slope=1., diseased_slope=1.)

    @classmethod
    def no_association(cls):
        return cls(0.5, 1.)

    @property
    def equal_covariate_laws(self):
        return self.healthy_covariate_mean == self.diseased_covariate_mean \
            and self.healthy_covariate_sd == self.diseased_covariate_sd

    def aroc(self, grid):
        """
        Closed-form AROC curve.
        """
        quantile = special.ndtri(1. - np.asarray(grid, dtype=float))
        slope_gap = self.diseased_slope - self.healthy_slope
        location = self.diseased_intercept - self.healthy_intercept + \
            slope_gap * self.diseased_covariate_mean
        spread = np.sqrt(
            self.diseased_sd ** 2 +
            (slope_gap * self.diseased_covariate_sd) ** 2
        )
        return special.ndtr((location - self.healthy_sd * quantile) / spread)

    def pooled_roc(self, grid):
        """
        Closed-form ROC curve of the marginal (covariate-free) outcomes.
        """
        quantile = special.ndtri(1. - np.asarray(grid, dtype=float))
        mean_h = self.healthy_intercept + \
            self.healthy_slope * self.healthy_covariate_mean
        mean_d = self.diseased_intercept + \
            self.diseased_slope * self.diseased_covariate_mean
        sd_h = np.hypot(
            self.healthy_sd,
            self.healthy_slope * self.healthy_covariate_sd
        )
        sd_d = np.hypot(
            self.diseased_sd,
            self.diseased_slope * self.diseased_covariate_sd
        )
        return special.ndtr((mean_d - mean_h - sd_h * quantile) / sd_d)

    def sample(self, n_healthy, n_diseased, rng):
        """
        Simulated dataset with a single covariate column 'x'.
        """
        x_h = randkit.sample_normal(
            self.healthy_covariate_mean,
            self.healthy_covariate_sd ** 2,
            rng,
            size=n_healthy
        )
        x_d = randkit.sample_normal(
            self.diseased_covariate_mean,
            self.diseased_covariate_sd ** 2,
            rng,
            size=n_diseased
        )
        y_h = randkit.sample_normal(
            self.healthy_intercept + self.healthy_slope * x_h,
            self.healthy_sd ** 2,
            rng
        )
        y_d = randkit.sample_normal(
            self.diseased_intercept + self.diseased_slope * x_d,
            self.diseased_sd ** 2,
            rng
        )
        return Dataset(
            y=np.concatenate([y_h, y_d]),
            status=np.concatenate([
                np.zeros(n_healthy, dtype=bool),
                np.ones(n_diseased, dtype=bool)
            ]),
            covariates=pd.DataFrame({'x': np.concatenate([x_h, x_d])})
        )


def concavity_inequality_check(setup, grid=None, tolerance=1e-3):
    """
    Checks AROC(t) >= pooled ROC(t) - tolerance on the grid, which holds
    when both groups share the covariate law and the covariate-specific
    ROC curves are concave.

    Returns
    -------
    dict
        'holds', 'min_difference' and the two curves
    """
    if not setup.equal_covariate_laws:
        raise ValueError('\nThe check needs equal covariate laws')
    grid = aroc.check_grid(aroc.default_grid() if grid is None else grid)
    adjusted = setup.aroc(grid)
    pooled = setup.pooled_roc(grid)
    difference = adjusted - pooled
    return {
        'holds': bool(np.all(difference >= -tolerance)),
        'min_difference': float(difference.min()),
        'grid': grid,
        'aroc': adjusted,
        'pooled_roc': pooled
    }
