# -*- coding: utf-8 -*-
"""
PURPOSE:
    Unit tests for ddp.py
"""

from dataclasses import replace
import numpy as np
import pandas as pd
import pytest
from mock import patch
from scipy import stats
from .. import ddp, randkit, simlab, splines
from ..tools import DataValidationError, Dataset, Group, NumericalFailure


def _group(y, **covariates):
    return Group(
        y=np.asarray(y, dtype=float),
        covariates=pd.DataFrame(covariates, index=range(len(y)))
    )


class TestPriorSpec:
    @staticmethod
    def test_default():
        prior = ddp.PriorSpec.default(3)
        assert prior.q == 3
        assert prior.nu == 5
        assert np.array_equal(prior.s0, 100. * np.eye(3))
        assert np.array_equal(prior.psi, np.eye(3))
        assert (prior.a, prior.b, prior.alpha) == (2., 0.5, 1.)
        assert prior.n_components == 10
        assert prior.to_dict()['nu'] == 5

    @staticmethod
    def test_bad_input():
        with pytest.raises(ValueError, match='nu must be >= Q'):
            ddp.PriorSpec(np.zeros(2), np.eye(2), 1, np.eye(2))
        with pytest.raises(ValueError, match='psi is not positive'):
            ddp.PriorSpec(np.zeros(2), np.eye(2), 4, -np.eye(2))
        with pytest.raises(ValueError, match='do not match'):
            ddp.PriorSpec(np.zeros(2), np.eye(3), 4, np.eye(2))
        with pytest.raises(ValueError, match='must be > 0'):
            ddp.PriorSpec(np.zeros(1), np.eye(1), 3, np.eye(1), alpha=0.)
        with pytest.raises(ValueError, match='At least one'):
            ddp.PriorSpec.default(1, n_components=0)


class TestConditionalDistribution:
    draw = ddp.PosteriorDraw(
        weights=[0.3, 0.7],
        betas=[[1., 2.], [0., -1.]],
        sigma2=[4., 0.25]
    )
    z = np.array([1., 0.5])

    def test_single_component(self):
        draw = ddp.PosteriorDraw(weights=[1.], betas=[[1., 2.]], sigma2=[4.])
        assert ddp.cond_cdf(draw, 2., self.z) == 0.5
        assert np.isclose(ddp.cond_cdf(draw, 4., self.z), stats.norm.cdf(1.))

    def test_mixture(self):
        y = np.array([-1., 0., 2.5])
        expected = 0.3 * stats.norm.cdf(y, 2., 2.) + \
            0.7 * stats.norm.cdf(y, -0.5, 0.5)
        assert np.allclose(ddp.cond_cdf(self.draw, y, self.z), expected)
        density = 0.3 * stats.norm.pdf(y, 2., 2.) + \
            0.7 * stats.norm.pdf(y, -0.5, 0.5)
        assert np.allclose(ddp.cond_pdf(self.draw, y, self.z), density)

    def test_label_permutation(self):
        y = np.linspace(-2., 3., 7)
        permuted = ddp.PosteriorDraw(
            weights=self.draw.weights[::-1],
            betas=self.draw.betas[::-1],
            sigma2=self.draw.sigma2[::-1]
        )
        assert np.allclose(
            ddp.cond_cdf(permuted, y, self.z),
            ddp.cond_cdf(self.draw, y, self.z),
            rtol=0.,
            atol=1e-14
        )
        assert np.allclose(
            ddp.cond_pdf(permuted, y, self.z),
            ddp.cond_pdf(self.draw, y, self.z),
            rtol=0.,
            atol=1e-14
        )

    def test_rescaled(self):
        scaled = self.draw.rescaled(3.)
        assert np.isclose(
            ddp.cond_cdf(scaled, 6., self.z),
            ddp.cond_cdf(self.draw, 2., self.z)
        )

    @staticmethod
    def test_bad_variance():
        with pytest.raises(ValueError, match='variances must be > 0'):
            ddp.PosteriorDraw(weights=[1.], betas=[[0.]], sigma2=[0.])


class TestStickBreaking:
    @staticmethod
    def test_weights():
        weights = ddp.stick_breaking([0.5, 0.5, 1.])
        assert np.allclose(weights, [0.5, 0.25, 0.25])

    @staticmethod
    def test_update():
        rng = randkit.RngStream(11)
        first = []
        for _ in range(2000):
            sticks, weights = ddp.update_stick_weights([100, 0, 0], 1., rng)
            assert sticks[-1] == 1.
            assert np.isclose(weights.sum(), 1.)
            first.append(sticks[0])
        # Beta(101, 1)
        assert abs(np.mean(first) - 101. / 102.) < 0.002

    @staticmethod
    def test_single_component():
        sticks, weights = ddp.update_stick_weights(
            [5],
            1.,
            randkit.RngStream()
        )
        assert np.array_equal(sticks, [1.])
        assert np.array_equal(weights, [1.])

    @staticmethod
    def test_truncation_bound():
        assert ddp.truncation_bound(1., 10) == 0.5 ** 10
        assert np.isclose(ddp.truncation_bound(1., 10), 9.765625e-4)
        with pytest.raises(ValueError, match='alpha must be > 0'):
            ddp.truncation_bound(0., 10)

    @staticmethod
    def test_prior_expected_clusters():
        assert ddp.prior_expected_clusters(1., 1) == 1.
        assert np.isclose(ddp.prior_expected_clusters(1., 2), 1.5)
        assert np.isclose(
            ddp.prior_expected_clusters(2., 3),
            1. + 2. / 3. + 2. / 4.
        )


class TestAllocations:
    design = np.ones((4, 1))
    betas = np.array([[0.], [10.]])
    sigma2 = np.array([1., 1.])

    def test_separated_components(self):
        y = np.array([0., 10., 0.1, 9.9])
        labels = ddp.update_allocations(
            y,
            self.design,
            np.array([0.5, 0.5]),
            self.betas,
            self.sigma2,
            randkit.RngStream(12)
        )
        assert labels.tolist() == [0, 1, 0, 1]

    def test_zero_weight_component(self):
        y = np.array([0., 10., 20., -5.])
        labels = ddp.update_allocations(
            y,
            self.design,
            np.array([1., 0.]),
            self.betas,
            self.sigma2,
            randkit.RngStream(13)
        )
        assert np.all(labels == 0)


class TestConjugateUpdates:
    @staticmethod
    def test_coefficients_given_variance():
        # one component, intercept only, S^-1 = 1, m = 0, sigma^2 = 1:
        # beta | y ~ N(sum y / (1 + n), 1 / (1 + n))
        y = np.array([1., 2., 3., 2.5])
        design = np.ones((4, 1))
        rng = randkit.RngStream(14)
        draws = np.array([
            ddp.update_components(
                y,
                design,
                np.zeros(4, dtype=int),
                np.array([1.]),
                np.zeros(1),
                np.eye(1),
                2.,
                0.5,
                rng
            )[0][0, 0]
            for _ in range(10000)
        ])
        mean, variance = y.sum() / 5., 1. / 5.
        se = np.sqrt(variance / draws.size)
        assert abs(draws.mean() - mean) < 4 * se
        assert abs(draws.var() - variance) < 0.02

    @staticmethod
    def test_empty_component_from_prior():
        rng = randkit.RngStream(15)
        betas, sigma2, _ = ddp.update_components(
            np.array([0.]),
            np.ones((1, 1)),
            np.array([0]),
            np.array([1., 1.]),
            np.array([5.]),
            np.array([[1e8]]),
            2.,
            0.5,
            rng
        )
        assert abs(betas[1, 0] - 5.) < 1e-2
        assert np.all(sigma2 > 0)

    @staticmethod
    def test_mean_update():
        prior = ddp.PriorSpec.default(1, n_components=2)
        betas = np.array([[2.], [4.]])
        rng = randkit.RngStream(16)
        draws = np.array([
            ddp.update_mean(betas, np.eye(1), prior, rng)[0]
            for _ in range(5000)
        ])
        # precision 0.01 + 2, mean 6 / 2.01
        assert abs(draws.mean() - 6. / 2.01) < 0.04
        assert abs(draws.var() - 1. / 2.01) < 0.04

    @staticmethod
    def test_precision_failure():
        prior = ddp.PriorSpec.default(1)
        with patch.object(
                ddp.randkit,
                'sample_wishart',
                side_effect=ValueError('\nnot positive-definite')
        ):
            with pytest.raises(NumericalFailure, match='Wishart') as info:
                ddp.update_precision(
                    np.zeros((2, 1)),
                    np.zeros(1),
                    prior,
                    randkit.RngStream()
                )
        assert info.value.details['step'] == 'precision'


class TestCholesky:
    @staticmethod
    def test_jitter():
        with pytest.warns(UserWarning, match='jitter added'):
            factor, jittered = ddp._cholesky(
                np.array([[1., 1.], [1., 1.]]),
                {'component': 0}
            )
        assert jittered
        assert np.allclose(factor @ factor.T, np.ones((2, 2)), atol=1e-8)

    @staticmethod
    def test_failure():
        with pytest.raises(NumericalFailure, match='not positive') as info:
            ddp._cholesky(-np.eye(2), {'component': 4})
        assert info.value.details['component'] == 4
        assert 'jitter' in info.value.details


class TestGibbsFit:
    @staticmethod
    def test_normal_model_posterior():
        rng = randkit.RngStream(17)
        y = randkit.sample_normal(3., 4., rng, size=200)
        fit = ddp.gibbs_fit(
            _group(y),
            splines.ModelSpec.parse('y ~ 1'),
            ddp.PriorSpec.default(1, n_components=1),
            nsim=2000,
            nburn=200,
            rng=rng.child(0)
        )
        assert len(fit) == 1800
        assert fit.betas.shape == (1800, 1, 1)
        assert abs(fit.betas[:, 0, 0].mean() - y.mean()) < 0.05
        assert abs(fit.sigma2.mean() / y.var(ddof=1) - 1.) < 0.1
        assert fit.diagnostics['q'] == 1
        assert fit.diagnostics['n'] == 200

    @staticmethod
    def test_conjugate_posterior_with_fixed_hyperparameters():
        # with m, S^-1 and sigma^2 held fixed, every retained draw is an
        # independent draw from the normal-normal posterior of beta
        y = np.array([0.8, 1.9, 1.1, 2.4, 1.5])
        m = np.array([2.])
        s_inv = np.array([[2.]])
        sigma2 = 1.
        variance = 1. / (s_inv[0, 0] + y.size / sigma2)
        mean = variance * (s_inv[0, 0] * m[0] + y.sum() / sigma2)

        with patch.object(
                ddp,
                'update_hyperparams',
                return_value=(m, s_inv)
        ):
            with patch.object(
                    ddp.randkit,
                    'sample_gamma',
                    return_value=1. / sigma2
            ):
                fit = ddp.gibbs_fit(
                    _group(y),
                    splines.ModelSpec.parse('y ~ 1'),
                    ddp.PriorSpec.default(1, n_components=1),
                    nsim=10100,
                    nburn=100,
                    rng=randkit.RngStream(31),
                    scale=False
                )

        draws = fit.betas[:, 0, 0]
        assert draws.size == 10000
        assert np.all(fit.sigma2 == sigma2)
        se = np.sqrt(variance / draws.size)
        assert abs(draws.mean() - mean) < 3. * se
        assert abs(draws.var(ddof=1) - variance) < \
            3. * variance * np.sqrt(2. / (draws.size - 1))
        # the prior pulls the posterior well away from the sample mean
        assert abs(y.mean() - mean) > 10. * se

    @staticmethod
    def test_single_observation():
        with pytest.warns(UserWarning, match='prior dominated'):
            fit = ddp.gibbs_fit(
                _group([1.3]),
                splines.ModelSpec.parse('y ~ 1'),
                nsim=60,
                nburn=10,
                rng=randkit.RngStream(32)
            )
        assert len(fit) == 50
        for values in (fit.weights, fit.betas, fit.sigma2):
            assert np.all(np.isfinite(values))

    @staticmethod
    def test_scenario_two_line():
        data = simlab.generate_scenario(
            simlab.Scenario('II', 200, 1),
            randkit.RngStream(33)
        )
        fit = ddp.gibbs_fit(
            data,
            splines.ModelSpec.parse('y ~ x1'),
            nsim=600,
            nburn=200,
            rng=randkit.RngStream(33).child(0)
        )
        # mixture regression line sum_l w_l beta_l of every draw
        line = np.einsum('sl,slq->sq', fit.weights, fit.betas)
        intercept, slope = line.mean(axis=0)
        assert abs(slope - 2. / 23.) < 0.03
        assert abs(intercept - (0.5 - 10. / 23.)) < 0.15

    @staticmethod
    def test_label_permutation():
        rng = randkit.RngStream(34)
        y = np.concatenate([
            randkit.sample_normal(-1., 0.25, rng, size=30),
            randkit.sample_normal(1., 0.25, rng, size=30)
        ])
        fit = ddp.gibbs_fit(
            _group(y),
            splines.ModelSpec.parse('y ~ 1'),
            ddp.PriorSpec.default(1, n_components=4),
            nsim=60,
            nburn=20,
            rng=rng.child(0)
        )
        generator = np.random.default_rng(34)
        draws = []
        for draw in fit.draws:
            order = generator.permutation(4)
            draws.append(ddp.PosteriorDraw(
                weights=draw.weights[order],
                betas=draw.betas[order],
                sigma2=draw.sigma2[order]
            ))
        permuted = replace(fit, draws=draws)
        assert np.allclose(
            permuted.cdf_matrix(fit.y, fit.design),
            fit.cdf_matrix(fit.y, fit.design),
            rtol=0.,
            atol=1e-12
        )
        assert np.allclose(
            permuted.log_pdf_matrix(fit.y, fit.design),
            fit.log_pdf_matrix(fit.y, fit.design),
            atol=1e-10
        )

    @staticmethod
    def test_bimodal_data():
        rng = randkit.RngStream(18)
        y = np.concatenate([
            randkit.sample_normal(-2., 0.25, rng, size=100),
            randkit.sample_normal(2., 0.25, rng, size=100)
        ])
        fit = ddp.gibbs_fit(
            _group(y),
            splines.ModelSpec.parse('y ~ 1'),
            nsim=600,
            nburn=200,
            rng=rng.child(0)
        )
        assert fit.occupied.mean() >= 2
        log_density = fit.log_pdf_matrix(
            np.array([-2., 0., 2.]),
            np.ones((3, 1))
        ).mean(axis=0)
        assert log_density[0] > log_density[1]
        assert log_density[2] > log_density[1]

    @staticmethod
    def test_reproducible():
        rng = randkit.RngStream(19)
        x = np.linspace(0., 1., 60)
        group = _group(
            np.sin(4. * x) + randkit.sample_normal(0., 0.01, rng, size=60),
            x=x
        )
        spec = splines.ModelSpec.parse('y ~ s(x, K=2)')
        first = ddp.gibbs_fit(group, spec, nsim=30, nburn=10,
                              rng=randkit.RngStream(5))
        second = ddp.gibbs_fit(group, spec, nsim=30, nburn=10,
                               rng=randkit.RngStream(5))
        assert np.array_equal(first.betas, second.betas)
        assert np.array_equal(first.weights, second.weights)
        assert first.knots[('x', 2)].n_interior == 2

    @staticmethod
    def test_cdf_matrix_matches_draws():
        rng = randkit.RngStream(20)
        x = np.linspace(0., 1., 40)
        group = _group(x + randkit.sample_normal(0., 0.04, rng, size=40), x=x)
        fit = ddp.gibbs_fit(
            group,
            splines.ModelSpec.parse('y ~ x'),
            nsim=25,
            nburn=5,
            rng=rng.child(0)
        )
        design = np.array([[1., 0.2], [1., 0.9]])
        y = np.array([0.1, 1.1])
        matrix = fit.cdf_matrix(y, design, chunk=7)
        for index, draw in enumerate(fit.draws):
            expected = [ddp.cond_cdf(draw, y[j], design[j]) for j in range(2)]
            assert np.allclose(matrix[index], expected)
        log_pdf = fit.log_pdf_matrix(y, design, chunk=3)
        assert np.allclose(
            np.exp(log_pdf[0]),
            [ddp.cond_pdf(fit.draws[0], y[j], design[j]) for j in range(2)]
        )

    @staticmethod
    def test_uses_nondiseased_group():
        dataset = Dataset(
            y=np.concatenate([np.linspace(0., 1., 30), [50., 60.]]),
            status=np.concatenate([np.zeros(30), np.ones(2)])
        )
        fit = ddp.gibbs_fit(
            dataset,
            splines.ModelSpec.parse('y ~ 1'),
            nsim=20,
            nburn=5
        )
        assert fit.y.size == 30
        assert fit.y.max() == 1.

    @staticmethod
    def test_bad_input():
        spec = splines.ModelSpec.parse('y ~ 1')
        with pytest.raises(ValueError, match='nburn'):
            ddp.gibbs_fit(_group([1., 2., 3.]), spec, nsim=10, nburn=10)
        with pytest.raises(DataValidationError, match='No nondiseased'):
            ddp.gibbs_fit(
                Dataset(y=[1., 2.], status=[1, 1]),
                spec,
                nsim=10,
                nburn=0
            )
        with pytest.raises(ValueError, match='does not match'):
            ddp.gibbs_fit(
                _group([1., 2., 3.]),
                spec,
                ddp.PriorSpec.default(2),
                nsim=10,
                nburn=0
            )

    @staticmethod
    def test_too_many_columns_warning():
        rng = randkit.RngStream(21)
        columns = {
            'x{0}'.format(k): randkit.sample_normal(0., 1., rng, size=5)
            for k in range(5)
        }
        spec = splines.ModelSpec.parse(
            'y ~ ' + ' + '.join(sorted(columns))
        )
        with pytest.warns(UserWarning, match='prior dominated'):
            ddp.gibbs_fit(
                _group(randkit.sample_normal(0., 1., rng, size=5), **columns),
                spec,
                nsim=5,
                nburn=0,
                rng=rng
            )

    @staticmethod
    def test_verbose(capsys):
        ddp.gibbs_fit(
            _group([0.1, 0.5, 0.2, 0.9]),
            splines.ModelSpec.parse('y ~ 1'),
            nsim=5,
            nburn=0,
            verbose=True
        )
        assert 'Done' in capsys.readouterr().out


class TestLinearModel:
    @staticmethod
    def test_bsp_fit():
        rng = randkit.RngStream(22)
        x = np.linspace(-1., 1., 80)
        group = _group(
            2. + 1.5 * x + randkit.sample_normal(0., 0.01, rng, size=80),
            x=x
        )
        fit = ddp.bsp_fit(
            group,
            splines.ModelSpec.parse('y ~ s(x, K=4)'),
            nsim=400,
            nburn=100,
            rng=rng.child(0)
        )
        assert fit.spec.is_linear
        assert fit.prior.n_components == 1
        assert np.all(fit.weights == 1.)
        design = np.column_stack([np.ones(80), x])
        ols = np.linalg.lstsq(design, group.y, rcond=None)[0]
        assert np.allclose(fit.posterior_mean_coefficients(), ols, atol=0.01)

    @staticmethod
    def test_chain_summary():
        fit = ddp.gibbs_fit(
            _group(np.linspace(0., 1., 20)),
            splines.ModelSpec.parse('y ~ 1'),
            nsim=40,
            nburn=10
        )
        summary = ddp.chain_summary(fit)
        assert summary.index.tolist() == ['occupied', 'log_likelihood']
        assert summary.columns.tolist() == [
            'first_mean', 'first_sd', 'second_mean', 'second_sd'
        ]
        assert summary.loc['occupied', 'first_mean'] >= 1.
