# -*- coding: utf-8 -*-
"""
PURPOSE:
    Command line entry point. Reads study CSV files, fits the AROC
    estimators, writes JSON and tidy CSV results, and runs simulation
    studies.

    Exit codes: 0 success, 1 usage error, 2 data validation error,
    3 numerical failure (a <output>.diagnostic.json file is written).
"""

import argparse
from dataclasses import asdict, dataclass, field, fields
import json
import os
import sys
import time
import numpy as np
import pandas as pd
from . import aroc, ddp, kernelaroc, modelcrit, randkit, simlab, splines
from ._version import __version__
from .tools import (
    DataValidationError,
    NumericalFailure,
    read_dataset,
    write_dataset
)

FORMAT_VERSION = 1
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

COMMANDS = (
    'fit-bnp',
    'fit-bsp',
    'fit-kernel',
    'pooled',
    'thresholds',
    'ppc',
    'simulate',
    'generate'
)

DESK_REPLICATES = 50
FULL_REPLICATES = 100


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def default_threads():
    """
    Worker count from BNPAROC_THREADS, 1 if unset.
    """
    value = os.environ.get('BNPAROC_THREADS', '1')
    try:
        threads = int(value)
    except ValueError:
        raise UsageError('BNPAROC_THREADS must be an integer')
    if threads < 1:
        raise UsageError('BNPAROC_THREADS must be >= 1')
    return threads


@dataclass
class RunConfig:
    """
    Everything a command needs, echoed into every JSON output.
    """
    command: str
    input: str = None
    output: str = None
    formula: str = None
    response: str = 'y'
    status: str = 'status'
    tag: str = '1'
    n_interior: int = 4
    n_components: int = 10
    alpha: float = 1.
    nsim: int = None
    nburn: int = None
    seed: int = 0
    level: float = 0.95
    grid_size: int = 101
    t0s: list = field(default_factory=lambda: [0.1, 0.3])
    fpfs: list = field(default_factory=lambda: [0.1, 0.3])
    n_boot: int = 500
    covariate: str = None
    covariate_grid: str = None
    statistics: list = field(
        default_factory=lambda: ['skewness', 'kurtosis']
    )
    n_replicates: int = None
    scenario: str = 'I'
    sizes: list = field(default_factory=lambda: [200, 200])
    estimator: str = 'bnp'
    threads: int = 1
    full_scale: bool = False
    timing: bool = True
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError('\nUnknown command ' + str(self.command))
        full = simlab.EstimatorConfig.full()
        desk = simlab.EstimatorConfig.desk()
        if self.nsim is None:
            self.nsim = full.nsim if self.full_scale else desk.nsim
        if self.nburn is None:
            self.nburn = full.nburn if self.full_scale else desk.nburn
        if self.n_replicates is None:
            if self.command == 'ppc':
                self.n_replicates = 500
            elif self.full_scale:
                self.n_replicates = FULL_REPLICATES
            else:
                self.n_replicates = DESK_REPLICATES
        self.tag = str(self.tag)
        for name in ('t0s', 'fpfs', 'statistics', 'sizes'):
            setattr(self, name, list(getattr(self, name)))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, content):
        known = {item.name for item in fields(cls)}
        unknown = sorted(set(content) - known)
        if unknown:
            raise ValueError('\nUnknown config keys ' + ', '.join(unknown))
        return cls(**content)

    def to_json(self, path):
        with open(path, 'w') as file:
            json.dump(self.to_dict(), file, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path):
        with open(path, 'r') as file:
            return cls.from_dict(json.load(file))

    @property
    def grid(self):
        return aroc.default_grid(self.grid_size)

    @property
    def rng(self):
        return randkit.RngStream(self.seed)

    def sidecar(self, suffix):
        """
        Path next to the output file, e.g. fit.json -> fit_curve.csv
        """
        return os.path.splitext(self.output)[0] + suffix


def build_parser():
    parser = _Parser(
        prog='bnparoc',
        description='Bayesian nonparametric covariate-adjusted ROC curves'
    )
    parser.add_argument(
        '--version',
        action='version',
        version='%(prog)s ' + __version__
    )
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    common = _Parser(add_help=False)
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--level', type=float, default=0.95)
    common.add_argument('--grid-size', type=int, default=101)
    common.add_argument('--threads', type=int, default=None)
    common.add_argument(
        '--no-timing',
        dest='timing',
        action='store_false',
        help='leave runtime_seconds out of JSON outputs'
    )

    data = _Parser(add_help=False)
    data.add_argument('input', help='study CSV file')
    data.add_argument('output', help='result file')
    data.add_argument('--response', default='y')
    data.add_argument('--status', default='status')
    data.add_argument(
        '--tag',
        default='1',
        help='status value marking a diseased subject'
    )

    model = _Parser(add_help=False)
    model.add_argument(
        '--formula',
        default=None,
        help="e.g. 'y ~ gender + s(age, K=4, by=gender)'"
    )
    model.add_argument('--n-interior', '-K', type=int, default=4)
    model.add_argument('--n-components', '-L', type=int, default=10)
    model.add_argument('--alpha', type=float, default=1.)
    model.add_argument('--nsim', type=int, default=None)
    model.add_argument('--nburn', type=int, default=None)
    model.add_argument(
        '--paper-scale',
        '--full-scale',
        dest='full_scale',
        action='store_true',
        help='100 replicates, 10000 iterations with 2000 burn-in'
    )

    area = _Parser(add_help=False)
    area.add_argument(
        '--t0',
        dest='t0s',
        type=float,
        nargs='+',
        default=[0.1, 0.3],
        help='FPF limits of partial areas'
    )

    boot = _Parser(add_help=False)
    boot.add_argument('--n-boot', type=int, default=500)

    commands.add_parser(
        'fit-bnp',
        parents=[data, model, area, common],
        help='B-splines DDP mixture AROC'
    )
    commands.add_parser(
        'fit-bsp',
        parents=[data, model, area, common],
        help='Bayesian normal linear model AROC'
    )
    kernel = commands.add_parser(
        'fit-kernel',
        parents=[data, model, boot, common],
        help='kernel or semiparametric AROC with bootstrap bands'
    )
    kernel.add_argument('--covariate', default=None)
    kernel.add_argument(
        '--semiparametric',
        dest='estimator',
        action='store_const',
        const='semiparametric',
        default='kernel'
    )
    commands.add_parser(
        'pooled',
        parents=[data, boot, common],
        help='pooled ROC curve ignoring covariates'
    )
    thresholds = commands.add_parser(
        'thresholds',
        parents=[data, model, common],
        help='covariate-specific thresholds'
    )
    thresholds.add_argument(
        '--fpf',
        dest='fpfs',
        type=float,
        nargs='+',
        default=[0.1, 0.3]
    )
    thresholds.add_argument(
        '--covariate-grid',
        default=None,
        help='CSV with one row per covariate value of interest'
    )
    ppc = commands.add_parser(
        'ppc',
        parents=[data, model, common],
        help='posterior predictive skewness and kurtosis'
    )
    ppc.add_argument('--n-replicates', type=int, default=None)
    ppc.add_argument(
        '--statistics',
        nargs='+',
        default=['skewness', 'kurtosis']
    )

    simulate = commands.add_parser(
        'simulate',
        parents=[model, boot, area, common],
        help='coverage study of one estimator in one scenario'
    )
    simulate.add_argument('output', help='aggregate JSON file')
    simulate.add_argument(
        '--scenario',
        choices=simlab.SCENARIO_IDS,
        default='I'
    )
    simulate.add_argument(
        '--sizes',
        type=int,
        nargs=2,
        default=[200, 200],
        metavar=('N_HEALTHY', 'N_DISEASED')
    )
    simulate.add_argument('--n-replicates', type=int, default=None)
    simulate.add_argument(
        '--estimator',
        choices=simlab.EstimatorConfig.METHODS,
        default='bnp'
    )

    generate = commands.add_parser(
        'generate',
        parents=[common],
        help='write a simulated scenario dataset as CSV'
    )
    generate.add_argument('output', help='CSV file')
    generate.add_argument(
        '--scenario',
        choices=simlab.SCENARIO_IDS,
        default='I'
    )
    generate.add_argument(
        '--sizes',
        type=int,
        nargs=2,
        default=[200, 200],
        metavar=('N_HEALTHY', 'N_DISEASED')
    )
    return parser


def config_from_args(args):
    content = {
        key: value for key, value in vars(args).items()
        if value is not None
    }
    if args.threads is None:
        content['threads'] = default_threads()
    return RunConfig.from_dict(content)


def default_formula(dataset, n_interior, response='y'):
    """
    One term per covariate: binary columns as factors, the rest smooth.
    """
    terms = []
    for name in dataset.covariates.columns:
        if dataset.covariates[name].nunique() <= 2:
            terms.append('f({0})'.format(name))
        else:
            terms.append('s({0}, K={1})'.format(name, n_interior))
    return response + ' ~ ' + (' + '.join(terms) if terms else '1')


def _load(config):
    dataset = read_dataset(
        config.input,
        tag=_tag_value(config.tag),
        response=config.response,
        status=config.status
    )
    if len(dataset.healthy) == 0 or len(dataset.diseased) == 0:
        raise DataValidationError('\nBoth disease groups need subjects')
    return dataset


def _tag_value(tag):
    try:
        return float(tag)
    except ValueError:
        raise DataValidationError('\nStatus tag must be numeric')


def _model_spec(config, dataset):
    formula = config.formula or default_formula(
        dataset, config.n_interior, config.response
    )
    try:
        spec = splines.ModelSpec.parse(formula, config.n_interior)
    except ValueError as err:
        raise UsageError(str(err).strip())
    spec.check_covariates(dataset.covariates)
    return spec


def _fit(config, dataset, rng):
    spec = _model_spec(config, dataset)
    if config.command == 'fit-bsp':
        return ddp.bsp_fit(
            dataset, spec, config.nsim, config.nburn, rng
        )
    prior = ddp.PriorSpec.default(
        spec.dimension,
        n_components=config.n_components,
        alpha=config.alpha
    )
    return ddp.gibbs_fit(
        dataset, spec, prior, config.nsim, config.nburn, rng
    )


def _envelope(config, started):
    content = {
        'format_version': FORMAT_VERSION,
        'bnparoc_version': __version__,
        'command': config.command,
        'config': config.to_dict(),
        'seed': config.seed
    }
    if config.timing:
        content['runtime_seconds'] = time.perf_counter() - started
    return content


def _write_json(path, content):
    with open(path, 'w') as file:
        json.dump(content, file, indent=2, sort_keys=True)


def run_fit(config, started):
    dataset = _load(config)
    rng = config.rng
    fit = _fit(config, dataset, rng.child(0))
    summaries = aroc.bb_summaries(
        aroc.placement_values(fit, dataset),
        grid=config.grid,
        level=config.level,
        rng=rng.child(1),
        t0s=config.t0s
    )
    criteria = modelcrit.waic(fit)

    content = _envelope(config, started)
    content.update({
        'model': fit.spec.describe(),
        'aroc': summaries['aroc'].to_dict(),
        'aauc': summaries['aauc'].to_dict(),
        'paauc': {
            repr(t0): estimate.to_dict()
            for t0, estimate in summaries['paauc'].items()
        },
        'criteria': criteria.to_dict(),
        'diagnostics': fit.diagnostics
    })
    summaries['aroc'].to_frame().to_csv(
        config.sidecar('_curve.csv'), index=False
    )
    return content


def run_kernel(config, started):
    dataset = _load(config)
    if config.estimator == 'semiparametric':
        spec = _model_spec(config, dataset)
        curve, area, fit = kernelaroc.semiparametric_aroc(
            dataset, spec, config.grid, config.n_boot, config.level,
            config.rng
        )
        details = {
            'model': spec.linear_counterpart().describe(),
            'coefficients': fit.coefficients.tolist(),
            'residual_variance': float(fit.residual_variance)
        }
    else:
        curve, area, fit = kernelaroc.kernel_aroc(
            dataset, config.grid, config.n_boot, config.level, config.rng,
            covariate=config.covariate
        )
        details = {
            'bandwidth_mean': float(fit.bandwidth_mean),
            'bandwidth_var': float(fit.bandwidth_var),
            'floored': int(fit.floored)
        }

    content = _envelope(config, started)
    content.update({
        'estimator': config.estimator,
        'aroc': curve.to_dict(),
        'aauc': area.to_dict(),
        'fit': details
    })
    curve.to_frame().to_csv(config.sidecar('_curve.csv'), index=False)
    return content


def run_pooled(config, started):
    dataset = _load(config)
    y_healthy, y_diseased = dataset.healthy.y, dataset.diseased.y
    curve, area = aroc.pooled_roc_bb(
        y_healthy, y_diseased, config.grid, config.n_boot, config.level,
        config.rng
    )
    empirical = aroc.pooled_roc_emp(y_healthy, y_diseased, config.grid)

    content = _envelope(config, started)
    content.update({
        'bayesian_bootstrap': {'roc': curve.to_dict(), 'auc': area.to_dict()},
        'empirical': {
            'roc': empirical.to_dict(),
            'auc': aroc.empirical_auc(y_healthy, y_diseased)
        }
    })
    curve.to_frame().to_csv(config.sidecar('_curve.csv'), index=False)
    return content


def _covariate_grid(config, spec, dataset):
    if config.covariate_grid:
        try:
            grid = pd.read_csv(config.covariate_grid, encoding='utf-8')
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as err:
            raise DataValidationError('\nBad covariate grid: ' + str(err))
        spec.check_covariates(grid)
        return grid[spec.covariates]
    if len(spec.covariates) != 1:
        raise UsageError(
            '--covariate-grid is needed with more than one covariate'
        )
    name = spec.covariates[0]
    values = dataset.healthy.covariates[name].values
    return pd.DataFrame({name: np.linspace(values.min(), values.max(), 25)})


def run_thresholds(config, started):
    dataset = _load(config)
    fit = _fit(config, dataset, config.rng)
    grid = _covariate_grid(config, fit.spec, dataset)
    table = aroc.threshold_curve(fit, grid, config.fpfs, config.level)

    content = _envelope(config, started)
    content.update({
        'model': fit.spec.describe(),
        'thresholds': table.to_dict(orient='list')
    })
    table.to_csv(config.sidecar('_thresholds.csv'), index=False)
    return content


def run_ppc(config, started):
    dataset = _load(config)
    rng = config.rng
    fit = _fit(config, dataset, rng.child(0))
    try:
        replicates = modelcrit.posterior_predictive_stats(
            fit, rng.child(1), config.n_replicates, config.statistics
        )
    except ValueError as err:
        raise UsageError(str(err).strip())
    observed = modelcrit.observed_stats(
        dataset.healthy.y, config.statistics
    )
    replicates.to_csv(config.output, index=False)

    content = _envelope(config, started)
    content.update({
        'model': fit.spec.describe(),
        'observed': observed,
        'pvalues': modelcrit.predictive_pvalues(replicates, observed),
        'replicates': config.output
    })
    _write_json(config.sidecar('_summary.json'), content)
    return None


def _scenario(config):
    return simlab.Scenario(config.scenario, *config.sizes)


def run_simulate(config, started):
    estimator = simlab.EstimatorConfig(
        method=config.estimator,
        nsim=config.nsim,
        nburn=config.nburn,
        n_interior=config.n_interior,
        n_components=config.n_components,
        alpha=config.alpha,
        n_boot=config.n_boot,
        level=config.level,
        grid_size=config.grid_size,
        formula=config.formula
    )
    report = simlab.coverage_study(
        _scenario(config),
        estimator,
        config.n_replicates,
        config.rng,
        threads=config.threads
    )
    report.to_csv(config.sidecar('_replicates.csv'))
    content = _envelope(config, started)
    content.update(report.to_dict())
    return content


def run_generate(config, started):
    dataset = simlab.generate_scenario(_scenario(config), config.rng)
    write_dataset(dataset, config.output)
    return None


RUNNERS = {
    'fit-bnp': run_fit,
    'fit-bsp': run_fit,
    'fit-kernel': run_kernel,
    'pooled': run_pooled,
    'thresholds': run_thresholds,
    'ppc': run_ppc,
    'simulate': run_simulate,
    'generate': run_generate
}


def _write_diagnostic(config, err):
    if config is None or not config.output:
        return None
    path = config.output + '.diagnostic.json'
    _write_json(path, {
        'format_version': FORMAT_VERSION,
        'error': str(err).strip(),
        'details': err.details,
        'config': config.to_dict()
    })
    return path


def run(argv=None):
    """
    Runs one command.

    Parameters
    ----------
    argv : list
        Command line arguments without the program name

    Returns
    -------
    int
        Exit status
    """
    config = None
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as err:
            # --help and --version
            return EXIT_OK if err.code is None else err.code
        try:
            config = config_from_args(args)
        except ValueError as err:
            raise UsageError(str(err).strip())
        started = time.perf_counter()
        content = RUNNERS[config.command](config, started)
        if content is not None:
            _write_json(config.output, content)
    except UsageError as err:
        print('bnparoc: error: ' + str(err), file=sys.stderr)
        return EXIT_USAGE
    except DataValidationError as err:
        print('bnparoc: data error: ' + str(err).strip(), file=sys.stderr)
        return EXIT_DATA
    except NumericalFailure as err:
        path = _write_diagnostic(config, err)
        print('bnparoc: numerical failure: ' + str(err).strip(),
              file=sys.stderr)
        if path:
            print('diagnostics written to ' + path, file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as err:
        print('bnparoc: data error: ' + str(err), file=sys.stderr)
        return EXIT_DATA
    except ValueError as err:
        print('bnparoc: error: ' + str(err).strip(), file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
