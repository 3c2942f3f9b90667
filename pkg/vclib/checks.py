"""
Oracle diagnostics for the numerical core. Each check compares the library against an independent answer:

    closed_form: at L = 2 the conditional law of V is that of log F(r_1, r_2).
    density: marginals of the multivariate F kernel, integrated numerically, against chi-square Monte Carlo draws.
    invariance: pl does not depend on the K basis, on a rotation of the rows of M, or on the scale of y.
    calibration: pl(rho_true) is Unif(0, 1) over replications of the baseline association.
"""

import logging
from collections import OrderedDict, namedtuple

import numpy as np
import scipy.integrate
import scipy.special
import scipy.stats
from scipy.interpolate import CubicHermiteSpline

from vclib.distributions.conditional import build_law
from vclib.distributions.multivariate_f import log_density_w
from vclib.inference.plausibility import pl_at
from vclib.model.association import build_context
from vclib.model.reduction import EigenReduction, MixedModelSpec, reduce_model
from vclib.simulation.generators import gen_baseline
from vclib.utils.math import cumulative_simpson, monotone_hermite_slopes
from vclib.utils.random import MultivariateFSampler, make_rng

logger = logging.getLogger(__name__)

CheckResult = namedtuple('CheckResult', ('name', 'passed', 'value', 'threshold', 'detail'))

CLOSED_FORM_MULTS = ((2, 4), (1, 10), (5, 37))
DENSITY_MULTS = ((1, 1, 10), (2, 1, 3, 8))
CLOSED_FORM_TOL = 1e-6
INVARIANCE_TOL = 1e-8
KS_LEVEL = 0.01


def log_f_mean(r1, r2):
    """ E[log F(r1, r2)]. """
    return scipy.special.digamma(r1 / 2.) - scipy.special.digamma(r2 / 2.) + np.log(r2 / r1)


def closed_form_errors(r1, r2, rho=0.3, num_points=2001, quad_tol=None):
    """ Sup error of the tabulated CDF and error of the mean against log F(r1, r2). """
    ctx = build_context(rho, np.array([1., 0.]), np.array([1.]))
    law = build_law(ctx, np.array([r1, r2]), quad_tol=quad_tol)
    lo, hi = np.log(scipy.stats.f.ppf([1e-10, 1. - 1e-10], r1, r2))
    v = np.linspace(lo, hi, num_points)
    cdf_error = np.max(np.abs(law.cdf(v) - scipy.stats.f.cdf(np.exp(v), r1, r2)))
    mu_error = abs(law.mu - log_f_mean(r1, r2))
    return float(cdf_error), float(mu_error)


def check_closed_form(quad_tol=None):
    results = []
    for r1, r2 in CLOSED_FORM_MULTS:
        cdf_error, mu_error = closed_form_errors(r1, r2, quad_tol=quad_tol)
        value = max(cdf_error, mu_error)
        results.append(CheckResult(name='closed_form_r{}_{}'.format(r1, r2), passed=value < CLOSED_FORM_TOL,
                                   value=value, threshold=CLOSED_FORM_TOL,
                                   detail='cdf sup error {:.3g}, mean error {:.3g}'.format(cdf_error, mu_error)))
    return results


def _axis_grid(r, r_last, num_points, tail=1e-12):
    lo, hi = np.log(scipy.stats.f.ppf([tail, 1. - tail], r, r_last))
    return np.linspace(lo, hi, num_points)


def marginal_log_density(mults, axis=0, num_points=401):
    """ Density of W_axis = log U_axis by Simpson integration of the kernel over the other coordinates.

    Returns: (grid, density) with the density normalized by the exact gamma-function constant only, so its
        integral measures the kernel's normalization as well.
    """
    mults = np.asarray(mults, dtype=np.float64)
    d = mults.shape[0] - 1
    assert 0 <= axis < d, 'axis must lie in [0, {}). Got {}'.format(d, axis)
    grids = [_axis_grid(mults[k], mults[-1], num_points) for k in range(d)]
    others = [grids[k] for k in range(d) if k != axis]
    mesh = np.stack(np.meshgrid(*others, indexing='ij'), axis=-1) if others else np.zeros((0,))

    density = np.empty(num_points)
    for i, value in enumerate(grids[axis]):
        w = np.insert(mesh, axis, value, axis=-1) if others else np.array([value])
        # density of W = log U carries the Jacobian exp(sum w)
        integrand = np.exp(log_density_w(w, mults) + np.sum(w, axis=-1))
        for k in reversed(range(len(others))):
            integrand = scipy.integrate.simpson(integrand, x=others[k], axis=k)
        density[i] = integrand
    return grids[axis], density


def _marginal_cdf(mults, axis, num_points):
    grid, density = marginal_log_density(mults, axis=axis, num_points=num_points)
    h = grid[1] - grid[0]
    cumulative = cumulative_simpson(density, h)
    total = cumulative[-1]
    knots = grid[0::2]
    cdf_values = np.maximum.accumulate(cumulative / total)
    slopes = monotone_hermite_slopes(knots, cdf_values, density[0::2] / total)
    spline = CubicHermiteSpline(knots, cdf_values, slopes)

    def cdf(x):
        return np.clip(spline(np.clip(x, knots[0], knots[-1])), 0., 1.)

    return cdf, knots, total


def check_density(num_draws=20000, seed=0, num_points=401):
    """ KS test of every one-dimensional marginal of log U against chi-square constructed draws. """
    results = []
    rng = make_rng(seed)
    for mults in DENSITY_MULTS:
        draws = np.log(MultivariateFSampler(mults).sample((num_draws,), rng))
        for axis in range(len(mults) - 1):
            cdf, knots, total = _marginal_cdf(mults, axis, num_points)
            pvalue = float(scipy.stats.kstest(draws[:, axis], cdf).pvalue)
            exact_error = float(np.max(np.abs(cdf(knots) - scipy.stats.f.cdf(np.exp(knots), mults[axis],
                                                                               mults[-1]))))
            results.append(CheckResult(name='density_r{}_axis{}'.format('_'.join(str(r) for r in mults), axis),
                                       passed=pvalue > KS_LEVEL and abs(total - 1.) < 1e-4,
                                       value=pvalue, threshold=KS_LEVEL,
                                       detail='KS p-value {:.3g} on {} draws, mass {:.8f}, max error vs F marginal '
                                              '{:.3g}'.format(pvalue, num_draws, total, exact_error)))
    return results


def random_instance(rng, min_components=3, max_components=6):
    """ Random eigenstructure, statistics and heritability value. """
    L = int(rng.integers(min_components, max_components + 1))
    lambdas = np.sort(rng.uniform(0.5, 8., L - 1))[::-1]
    lambdas = np.append(lambdas, rng.choice([0., 0.1]))
    mults = rng.integers(1, 6, L)
    mults[-1] += 5
    S = gen_baseline(lambdas, mults, rng.uniform(0.2, 3.), 1., rng)
    return EigenReduction(lambdas, mults, S), float(rng.uniform(0.05, 0.9))


def pl_from_context(reduction, ctx, quad_tol=None):
    law = build_law(ctx, reduction.mults, quad_tol=quad_tol)
    return 1. - law.cdf_abs(abs(reduction.t_stat - ctx.phi - law.mu))


def rotation_gap(reduction, rho, rng, quad_tol=None):
    ctx = build_context(rho, reduction.lambdas, reduction.ratio_x)
    k = ctx.M.shape[0]
    Q = scipy.stats.ortho_group.rvs(k, random_state=rng) if k > 1 else -np.ones((1, 1))
    rotated = ctx._replace(M=Q @ ctx.M, h=Q @ ctx.h)
    return abs(pl_from_context(reduction, ctx, quad_tol) - pl_from_context(reduction, rotated, quad_tol))


def scale_gap(reduction, rho, c, quad_tol=None):
    return abs(pl_at(reduction, rho, quad_tol=quad_tol) - pl_at(reduction.scaled(c), rho, quad_tol=quad_tol))


def random_design(rng, n=18, p=2, a=5):
    X = np.column_stack((np.ones(n), rng.normal(size=(n, p - 1))))
    Z = np.zeros((n, a))
    Z[np.arange(n), rng.integers(0, a, n)] = 1.
    Z[np.arange(a), np.arange(a)] = 1.
    B = rng.normal(size=(a, a))
    A = B @ B.T / a + np.eye(a)
    y = X @ rng.normal(size=p) + Z @ rng.normal(size=a) + rng.normal(size=n)
    return MixedModelSpec(y, X, Z, A)


def basis_gap(model, rho, quad_tol=None):
    """ pl from an SVD null-space basis against a QR one. """
    svd = reduce_model(model, method='svd')
    qr = reduce_model(model, method='qr')
    if svd.num_components != qr.num_components or not np.allclose(svd.lambdas, qr.lambdas):
        return np.inf
    return abs(pl_at(svd, rho, quad_tol=quad_tol) - pl_at(qr, rho, quad_tol=quad_tol))


def check_invariance(num_instances=20, seed=0, quad_tol=None):
    rng = make_rng(seed)
    gaps = OrderedDict([('rotation', []), ('scale', []), ('basis', [])])
    for _ in range(num_instances):
        reduction, rho = random_instance(rng)
        gaps['rotation'].append(rotation_gap(reduction, rho, rng, quad_tol))
        gaps['scale'].append(scale_gap(reduction, rho, float(rng.uniform(0.01, 100.)), quad_tol))
        gaps['basis'].append(basis_gap(random_design(rng), rho, quad_tol))
    results = []
    for name, values in gaps.items():
        value = float(np.max(values))
        results.append(CheckResult(name='invariance_' + name, passed=value < INVARIANCE_TOL, value=value,
                                   threshold=INVARIANCE_TOL,
                                   detail='max pl change {:.3g} over {} instances'.format(value, num_instances)))
    return results


def check_calibration(num_reps=200, seed=0, lambdas=(4.55, 1., 0.), mults=(1, 1, 10), sigma_a2=1., sigma_e2=1.,
                      quad_tol=None):
    rng = make_rng(seed)
    rho_true = sigma_a2 / (sigma_a2 + sigma_e2)
    values = []
    for _ in range(num_reps):
        S = gen_baseline(lambdas, mults, sigma_a2, sigma_e2, rng)
        values.append(pl_at(EigenReduction(lambdas, mults, S), rho_true, quad_tol=quad_tol))
    pvalue = float(scipy.stats.kstest(values, 'uniform').pvalue)
    return [CheckResult(name='calibration', passed=pvalue > KS_LEVEL, value=pvalue, threshold=KS_LEVEL,
                        detail='KS p-value of pl(rho_true) against Unif(0, 1) over {} replications'.format(num_reps))]


def run_checks(seed=0, num_draws=20000, num_instances=20, num_reps=200, quad_tol=None):
    """ Run every oracle check. Returns a list of CheckResult. """
    results = []
    for name, fn in (('closed form', lambda: check_closed_form(quad_tol)),
                     ('density', lambda: check_density(num_draws, seed)),
                     ('invariance', lambda: check_invariance(num_instances, seed, quad_tol)),
                     ('calibration', lambda: check_calibration(num_reps, seed, quad_tol=quad_tol))):
        logger.info('Running {} checks'.format(name))
        for result in fn():
            log = logger.info if result.passed else logger.error
            log('{}: {} ({})'.format(result.name, 'pass' if result.passed else 'FAIL', result.detail))
            results.append(result)
    return results
