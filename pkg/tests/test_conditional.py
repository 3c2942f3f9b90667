import numpy as np
import pytest
import scipy.stats

from vclib.checks import closed_form_errors, log_f_mean, rotation_gap, random_instance
from vclib.dataset.fixtures import lamb_eigenstructure
from vclib.distributions import conditional
from vclib.distributions.conditional import build_law, cdf_abs, log_q, solve_w, log_linear_map
from vclib.model.association import build_context, f_values
from vclib.utils.random import make_rng

ASSAY_LAMBDAS = np.array([4.55, 1., 0.])
ASSAY_MULTS = np.array([1, 1, 10])


def two_component_law(r1=2, r2=4, rho=0.3):
    ctx = build_context(rho, np.array([1., 0.]), np.array([1.]))
    return ctx, build_law(ctx, np.array([r1, r2]))


class TestSolveW:
    def test_two_components(self):
        np.testing.assert_allclose(solve_w(1.3, np.zeros(0), np.zeros((0, 1))), [1.3])

    def test_zero_solution(self):
        M = np.array([[1. / np.sqrt(2.), -1. / np.sqrt(2.)]])
        np.testing.assert_allclose(solve_w(0., np.zeros(1), M), [0., 0.], atol=1e-15)

    def test_round_trip(self):
        rng = make_rng(0)
        for _ in range(10):
            L = int(rng.integers(3, 8))
            lambdas = np.append(np.sort(rng.uniform(0.5, 6., L - 1))[::-1], 0.)
            ctx = build_context(rng.uniform(0., 0.9), lambdas, rng.uniform(0.2, 5., L - 1))
            v = rng.normal(size=4)
            w = solve_w(v, ctx.h, ctx.M)
            np.testing.assert_allclose(w.sum(axis=-1), v, atol=1e-10)
            np.testing.assert_allclose(w @ ctx.M.T, np.tile(ctx.h, (4, 1)), atol=1e-10)

    def test_singular_transform(self):
        from vclib.common import SingularTransform
        M = np.array([[1. / np.sqrt(2.), 1. / np.sqrt(2.)]])
        with pytest.raises(SingularTransform):
            log_linear_map(np.zeros(1), M)


class TestLogQ:
    def test_two_components_is_log_f(self):
        ctx, _ = two_component_law(2, 4)
        v = np.linspace(-6., 6., 41)
        ours = log_q(v, ctx, [2, 4]) - log_q(0., ctx, [2, 4])
        reference = scipy.stats.f.logpdf(np.exp(v), 2, 4) + v - scipy.stats.f.logpdf(1., 2, 4)
        np.testing.assert_allclose(ours, reference, atol=1e-10)

    def test_finite_everywhere(self):
        ctx = build_context(0.4, ASSAY_LAMBDAS, np.array([3., 1.5]))
        values = log_q(np.linspace(-200., 200., 101), ctx, ASSAY_MULTS)
        assert np.all(np.isfinite(values))

    def test_tails_decay(self):
        ctx = build_context(0.4, ASSAY_LAMBDAS, np.array([3., 1.5]))
        law = build_law(ctx, ASSAY_MULTS)
        peak = log_q(law.mode, ctx, ASSAY_MULTS)
        assert log_q(law.mode - 50., ctx, ASSAY_MULTS) < peak - 30.
        assert log_q(law.mode + 50., ctx, ASSAY_MULTS) < peak - 30.


class TestBuildLaw:
    @pytest.mark.parametrize('r1,r2', [(2, 4), (1, 10), (5, 37)])
    def test_closed_form(self, r1, r2):
        cdf_error, mu_error = closed_form_errors(r1, r2)
        assert cdf_error < 1e-6
        assert mu_error < 1e-6

    def test_mean_by_trapezoid(self):
        _, law = two_component_law(2, 4)
        v = np.linspace(-40., 40., 400001)
        density = scipy.stats.f.pdf(np.exp(v), 2, 4) * np.exp(v)
        np.testing.assert_allclose(law.mu, np.trapz(v * density, v), atol=1e-6)
        np.testing.assert_allclose(law.mu, log_f_mean(2, 4), atol=1e-6)

    def test_cdf_end_points_and_monotone(self):
        _, law = two_component_law(5, 37)
        assert law.cdf(law.lower) == 0.
        np.testing.assert_allclose(law.cdf(law.upper), 1., atol=1e-12)
        values = law.cdf(np.linspace(law.lower - 1., law.upper + 1., 5001))
        assert np.all(np.diff(values) >= 0)
        assert np.all((values >= 0) & (values <= 1))
        assert len(law.knots) >= 513

    def test_quantile_round_trip(self):
        ctx = build_context(0.6, ASSAY_LAMBDAS, np.array([2., 0.7]))
        law = build_law(ctx, ASSAY_MULTS)
        q = np.linspace(0.1, 0.9, 9)
        np.testing.assert_allclose(law.cdf(law.quantile(q)), q, atol=1e-6)

    def test_density_integrates_to_one(self):
        ctx = build_context(0.2, ASSAY_LAMBDAS, np.array([4., 1.]))
        law = build_law(ctx, ASSAY_MULTS)
        v = np.linspace(law.lower, law.upper, 20001)
        np.testing.assert_allclose(np.trapz(law.pdf(v), v), 1., atol=1e-6)

    def test_doubled_domain(self, monkeypatch):
        ctx = build_context(0.5, ASSAY_LAMBDAS, np.array([2., 3.]))
        law = build_law(ctx, ASSAY_MULTS)
        monkeypatch.setattr(conditional, 'INITIAL_HALF_WIDTH', law.upper - law.lower)
        wider = build_law(ctx, ASSAY_MULTS)
        assert wider.upper - wider.lower >= 2. * (law.upper - law.lower) - 1e-9
        assert abs(wider.log_norm_const - law.log_norm_const) < 1e-8

    def test_lamb_fixture(self):
        lambdas, mults = lamb_eigenstructure()
        rho = 0.2
        ctx = build_context(rho, lambdas, f_values(rho, lambdas))
        law = build_law(ctx, mults)
        assert np.isfinite(law.mu)
        np.testing.assert_allclose(ctx.h, 0., atol=1e-12)

    def test_quad_tol_range(self):
        ctx, _ = two_component_law()
        with pytest.raises(AssertionError):
            build_law(ctx, [2, 4], quad_tol=1e-3)

    def test_basis_invariance(self):
        rng = make_rng(3)
        for _ in range(5):
            reduction, rho = random_instance(rng)
            assert rotation_gap(reduction, rho, rng) < 1e-8

    def test_rotated_law_matches(self):
        ctx = build_context(0.35, [6., 3., 1.5, 0.], np.array([2., 1., 0.5]))
        law = build_law(ctx, [1, 2, 2, 9])
        Q = np.array([[0., 1.], [1., 0.]])
        rotated = build_law(ctx._replace(M=Q @ ctx.M, h=Q @ ctx.h), [1, 2, 2, 9])
        assert abs(rotated.mu - law.mu) < 1e-8
        v = np.linspace(law.mu - 5., law.mu + 5., 101)
        np.testing.assert_allclose(rotated.cdf(v), law.cdf(v), atol=1e-8)


class TestCdfAbs:
    def test_limits(self):
        _, law = two_component_law()
        assert cdf_abs(law, 0.) == 0.
        np.testing.assert_allclose(cdf_abs(law, 1e3), 1., atol=1e-12)

    def test_nondecreasing(self):
        _, law = two_component_law()
        values = law.cdf_abs(np.linspace(0., 20., 2001))
        assert np.all(np.diff(values) >= 0)

    def test_closed_form(self):
        _, law = two_component_law(2, 4)
        mu = log_f_mean(2, 4)
        expected = scipy.stats.f.cdf(np.exp(mu + 1.), 2, 4) - scipy.stats.f.cdf(np.exp(mu - 1.), 2, 4)
        np.testing.assert_allclose(cdf_abs(law, 1.), expected, atol=1e-6)


class TestCalibration:
    @pytest.mark.parametrize('num_draws', [2000, pytest.param(10000, marks=pytest.mark.slow)])
    def test_contour_uniform(self, num_draws):
        ctx = build_context(0.4, ASSAY_LAMBDAS, np.array([3., 1.5]))
        law = build_law(ctx, ASSAY_MULTS)
        draws = law.sample(num_draws, make_rng(5))
        values = 1. - law.cdf_abs(np.abs(draws - law.mu))
        assert scipy.stats.kstest(values, 'uniform').pvalue > 0.01
