# -*- coding: utf-8 -*-
"""
PURPOSE:
    Unit tests for aroc.py
"""

import numpy as np
import pandas as pd
import pytest
from scipy import integrate, optimize, special
from .. import aroc, ddp, randkit, splines
from ..tools import Group


def _step_integral(u, q, t0):
    # integrate sum_j q_j 1(U_j <= t) piece by piece over [0, t0]
    order = np.argsort(u)
    edges = np.clip(np.append(u[order], t0), 0., t0)
    heights = np.cumsum(q[order])
    return float(np.sum(heights * np.diff(edges)))


def _fit(draws, spec='y ~ 1'):
    spec = splines.ModelSpec.parse(spec)
    return ddp.FitResult(
        draws=draws,
        spec=spec,
        knots={},
        prior=ddp.PriorSpec.default(
            spec.dimension,
            n_components=draws[0].weights.size
        ),
        scale=1.,
        y=np.zeros(3),
        design=np.ones((3, spec.dimension))
    )


class TestGrid:
    @staticmethod
    def test_default_grid():
        grid = aroc.default_grid()
        assert grid.size == 101
        assert grid[0] == 0. and grid[-1] == 1.
        assert np.isclose(grid[10], 0.1)
        with pytest.raises(ValueError, match='at least two points'):
            aroc.default_grid(1)

    @staticmethod
    def test_check_grid():
        with pytest.raises(ValueError, match='sorted and inside'):
            aroc.check_grid([0.5, 0.2])
        with pytest.raises(ValueError, match='sorted and inside'):
            aroc.check_grid([0., 1.5])
        with pytest.raises(ValueError, match='Empty FPF grid'):
            aroc.check_grid([])


class TestAreas:
    @staticmethod
    def test_against_step_integral():
        generator = np.random.default_rng(3)
        for _ in range(1000):
            n = generator.integers(1, 30)
            u = generator.random(n)
            q = generator.dirichlet(np.ones(n))
            t0 = generator.uniform(0.01, 1.)
            assert abs(aroc.aauc(q, u) - _step_integral(u, q, 1.)) < 1e-12
            assert abs(
                aroc.paauc(t0, q, u) - _step_integral(u, q, t0)
            ) < 1e-12

    @staticmethod
    def test_full_partial_area_is_area():
        generator = np.random.default_rng(4)
        u = generator.random(25)
        q = generator.dirichlet(np.ones(25))
        assert aroc.paauc(1., q, u) == aroc.aauc(q, u)

    @staticmethod
    def test_bad_t0():
        with pytest.raises(ValueError, match='t0 outside'):
            aroc.paauc(0., [1.], [0.5])


class TestStepCurves:
    @staticmethod
    def test_weighted_step_curves():
        curves = aroc.weighted_step_curves(
            np.array([[0.2, 0.5, 0.5]]),
            np.full((1, 3), 1. / 3.),
            np.array([0., 0.2, 0.49, 0.5, 1.])
        )
        assert np.allclose(curves[0], [0., 1. / 3., 1. / 3., 1., 1.])

    @staticmethod
    def test_unnormalised_weights():
        curves = aroc.weighted_step_curves(
            np.array([[0.1, 0.9]]),
            np.array([[2., 2.]]),
            np.array([0.5, 1.])
        )
        assert np.allclose(curves[0], [0.5, 1.])


class TestBayesianBootstrap:
    @staticmethod
    def test_degenerate_placements():
        summaries = aroc.bb_summaries(
            np.full((50, 10), 0.5),
            rng=randkit.RngStream(1),
            t0s=[0.2, 1.]
        )
        curve = summaries['aroc']
        assert np.all(curve.mean[curve.grid < 0.5] == 0.)
        assert np.all(curve.mean[curve.grid >= 0.5] == 1.)
        assert np.allclose(curve.upper, curve.lower)
        assert np.isclose(summaries['aauc'].mean, 0.5)
        assert np.isclose(summaries['paauc'][0.2].mean, 0.)
        assert np.isclose(summaries['paauc'][1.].mean, 0.5)

    @staticmethod
    def test_band_and_area():
        generator = np.random.default_rng(5)
        placements = aroc.PlacementMatrix(generator.beta(1., 3., (200, 40)))
        summaries = aroc.bb_summaries(
            placements,
            grid=aroc.default_grid(1001),
            rng=randkit.RngStream(2),
            keep_ensemble=True
        )
        curve = summaries['aroc']
        assert curve.ensemble.shape == (200, 1001)
        assert np.all(np.diff(curve.mean) >= 0)
        assert np.all(curve.lower <= curve.mean)
        assert np.all(curve.mean <= curve.upper)
        assert curve.mean[-1] == 1.
        # the mean of the areas is the area under the mean curve
        area = integrate.trapezoid(curve.mean, curve.grid)
        assert abs(area - summaries['aauc'].mean) < 2e-3

    @staticmethod
    def test_uniform_placements_give_diagonal():
        placements = np.random.default_rng(11).random((500, 200))
        summaries = aroc.bb_summaries(
            placements,
            rng=randkit.RngStream(12)
        )
        curve = summaries['aroc']
        assert np.max(np.abs(curve.mean - curve.grid)) < 0.03
        assert abs(summaries['aauc'].mean - 0.5) < 0.01

    @staticmethod
    def test_weights_given():
        values = np.array([[0.1, 0.6], [0.3, 0.8]])
        weights = np.array([[1., 0.], [0.5, 0.5]])
        summaries = aroc.bb_summaries(values, weights=weights)
        assert np.allclose(summaries['aauc'].samples, [0.9, 0.45])
        with pytest.raises(ValueError, match='do not match'):
            aroc.bb_summaries(values, weights=np.ones((1, 2)))

    @staticmethod
    def test_reproducible():
        values = np.random.default_rng(6).random((30, 12))
        first = aroc.bb_aroc(values, rng=randkit.RngStream(9))
        second = aroc.bb_aroc(values, rng=randkit.RngStream(9))
        assert np.array_equal(first.mean, second.mean)
        assert np.array_equal(first.upper, second.upper)

    @staticmethod
    def test_placement_range():
        with pytest.raises(ValueError, match='lie in'):
            aroc.PlacementMatrix([[0.5, 1.2]])


class TestPlacementValues:
    @staticmethod
    def test_standard_normal_reference():
        fit = _fit([ddp.PosteriorDraw(weights=[1.], betas=[[0.]],
                                      sigma2=[1.])])
        diseased = Group(
            y=np.array([0., 1.959963984540054]),
            covariates=pd.DataFrame(index=range(2))
        )
        placements = aroc.placement_values(fit, diseased)
        assert placements.shape == (1, 2)
        assert np.allclose(placements.values, [[0.5, 0.025]])

    @staticmethod
    def test_empty_group():
        fit = _fit([ddp.PosteriorDraw(weights=[1.], betas=[[0.]],
                                      sigma2=[1.])])
        with pytest.raises(ValueError, match='No diseased'):
            aroc.placement_values(
                fit,
                Group(y=np.array([]), covariates=pd.DataFrame())
            )

    @staticmethod
    def test_wrong_type():
        fit = _fit([ddp.PosteriorDraw(weights=[1.], betas=[[0.]],
                                      sigma2=[1.])])
        with pytest.raises(TypeError, match='Dataset or a Group'):
            aroc.placement_values(fit, np.zeros(3))


class TestThresholds:
    @staticmethod
    def test_single_component():
        fit = _fit(
            [ddp.PosteriorDraw(weights=[1.], betas=[[1., 2.]],
                               sigma2=[0.25])],
            spec='y ~ x'
        )
        for t in (0.05, 0.1, 0.3, 0.5, 0.9):
            estimate = aroc.covariate_threshold(fit, {'x': 0.5}, t)
            expected = 2. + 0.5 * special.ndtri(1. - t)
            assert abs(estimate.mean - expected) < 1e-9

    @staticmethod
    def test_bisection_against_root_finder():
        generator = np.random.default_rng(7)
        fpfs = np.linspace(0.05, 0.95, 10)
        for _ in range(100):
            n_components = generator.integers(1, 6)
            weights = generator.dirichlet(np.ones(n_components))
            means = generator.normal(0., 3., n_components)
            sd = generator.uniform(0.1, 2., n_components)
            for t in fpfs:
                root = aroc.mixture_quantile(weights, means, sd, 1. - t)[0]

                def gap(c):
                    return np.sum(
                        weights * special.ndtr((c - means) / sd)
                    ) - (1. - t)

                reference = optimize.brentq(
                    gap,
                    means.min() - 20.,
                    means.max() + 20.,
                    xtol=1e-13
                )
                assert abs(root - reference) < 1e-6

    @staticmethod
    def test_threshold_curve():
        fit = _fit(
            [ddp.PosteriorDraw(weights=[1.], betas=[[0., 1.]],
                               sigma2=[1.])],
            spec='y ~ age'
        )
        table = aroc.threshold_curve(
            fit,
            pd.DataFrame({'age': [0., 1., 2.]}),
            [0.1, 0.3]
        )
        assert table.columns.tolist() == [
            'age', 'fpf', 'mean', 'lower', 'upper'
        ]
        assert len(table.index) == 6
        first = table.loc[table['fpf'] == 0.1, 'mean'].values
        assert np.allclose(np.diff(first), 1.)

    @staticmethod
    def test_threshold_decreases_with_fpf():
        fit = _fit(
            [
                ddp.PosteriorDraw(
                    weights=[0.6, 0.4],
                    betas=[[0., 1.], [2., -0.5]],
                    sigma2=[1., 0.3]
                ),
                ddp.PosteriorDraw(
                    weights=[0.2, 0.8],
                    betas=[[-1., 0.5], [1., 1.]],
                    sigma2=[0.5, 2.]
                )
            ],
            spec='y ~ age'
        )
        fpfs = [0.05, 0.1, 0.3, 0.5, 0.8]
        table = aroc.threshold_curve(
            fit,
            pd.DataFrame({'age': [-1., 0., 2.5]}),
            fpfs
        )
        for _, rows in table.groupby('age'):
            rows = rows.sort_values('fpf')
            assert rows['fpf'].tolist() == fpfs
            assert np.all(np.diff(rows['mean'].values) < 0)

    @staticmethod
    def test_bad_fpf():
        fit = _fit([ddp.PosteriorDraw(weights=[1.], betas=[[0.]],
                                      sigma2=[1.])])
        with pytest.raises(ValueError, match='t outside'):
            aroc.covariate_threshold(fit, {}, 1.)


class TestPooled:
    y_healthy = np.array([1., 2., 3., 4.])
    y_diseased = np.array([2.5, 3.5, 5., 6.])

    def test_empirical_curve(self):
        curve = aroc.pooled_roc_emp(
            self.y_healthy,
            self.y_diseased,
            np.array([0., 0.25, 0.5, 1.])
        )
        assert np.allclose(curve.mean, [0.5, 0.75, 1., 1.])

    def test_empirical_auc(self):
        assert aroc.empirical_auc(self.y_healthy, self.y_diseased) == \
            13. / 16.
        assert aroc.empirical_auc([1., 2.], [2.]) == 0.75

    @staticmethod
    def test_empirical_curve_rank_invariant():
        generator = np.random.default_rng(8)
        y_healthy = generator.normal(0., 1., 57)
        y_diseased = generator.normal(0.7, 1.3, 43)
        curve = aroc.pooled_roc_emp(y_healthy, y_diseased)
        for transform in (np.exp, lambda y: 3. * y + 1., np.arctan):
            other = aroc.pooled_roc_emp(
                transform(y_healthy),
                transform(y_diseased)
            )
            assert np.array_equal(other.mean, curve.mean)

    @staticmethod
    def test_bayesian_bootstrap_same_distribution():
        rng = randkit.RngStream(10)
        n = 200
        _, area = aroc.pooled_roc_bb(
            randkit.sample_normal(0., 1., rng, size=n),
            randkit.sample_normal(0., 1., rng, size=n),
            n_boot=500,
            rng=rng
        )
        # standard error of the Mann-Whitney AUC under exchangeability
        se = np.sqrt((2. * n + 1.) / (12. * n * n))
        assert abs(area.mean - 0.5) < 3. * se
        assert area.lower < area.mean < area.upper

    @staticmethod
    def test_separated_samples():
        curve, area = aroc.pooled_roc_bb(
            [0., 1., 2.],
            [5., 6.],
            n_boot=200,
            rng=randkit.RngStream(3)
        )
        assert np.all(curve.mean == 1.)
        assert area.mean == 1.

    @staticmethod
    def test_bayesian_bootstrap_centres_on_empirical():
        rng = randkit.RngStream(4)
        y_healthy = randkit.sample_normal(0., 1., rng, size=300)
        y_diseased = randkit.sample_normal(1., 1., rng, size=300)
        _, area = aroc.pooled_roc_bb(
            y_healthy,
            y_diseased,
            n_boot=500,
            rng=rng
        )
        assert abs(area.mean - aroc.empirical_auc(y_healthy, y_diseased)) \
            < 0.01
        assert area.lower < area.mean < area.upper

    @staticmethod
    def test_empty_sample():
        with pytest.raises(ValueError, match='nonempty'):
            aroc.pooled_roc_emp([], [1.])
        with pytest.raises(ValueError, match='nonempty'):
            aroc.pooled_roc_bb([1.], [])


class TestEstimates:
    @staticmethod
    def test_band_clipped():
        curve = aroc.CurveEstimate(
            grid=[0., 1.],
            mean=[0.3, 1.],
            lower=[0.4, 0.9],
            upper=[0.2, 1.1]
        )
        assert np.allclose(curve.lower, [0.3, 0.9])
        assert np.allclose(curve.upper, [0.3, 1.])
        assert curve.to_frame().columns.tolist() == [
            't', 'mean', 'lower', 'upper'
        ]

    @staticmethod
    def test_length_mismatch():
        with pytest.raises(ValueError, match='different lengths'):
            aroc.CurveEstimate(grid=[0., 0.5, 1.], mean=[0., 1.])

    @staticmethod
    def test_scalar_summary():
        estimate = aroc.summarize_scalar(np.linspace(0., 1., 1001), 0.9)
        assert np.isclose(estimate.mean, 0.5)
        assert np.isclose(estimate.lower, 0.05)
        assert np.isclose(estimate.upper, 0.95)
        assert estimate.to_dict()['level'] == 0.9
