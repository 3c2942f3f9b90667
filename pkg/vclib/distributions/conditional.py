"""
Conditional law of V = sum_l log U_l given eta(U) = M log U = h, for U multivariate F.

On the line {w : M w = h} the log density of W = log U is concave in v = 1^T w, so the conditional law is
unimodal with exponential tails. It is tabulated once per (rho, h) by one-dimensional quadrature: the mode is
bracketed and refined by golden-section search, the domain is widened until the log density has dropped by
TAIL_DROP at both ends, and composite Simpson's rule is refined until the normalizing constant and the mean
agree to quad_tol between successive halvings of the step.
"""

import logging

import numpy as np
import scipy.integrate
import scipy.optimize
from scipy.interpolate import CubicHermiteSpline

from vclib import config
from vclib.common import eps, SingularTransform, QuadratureFailure, ModeSearchFailure
from vclib.distributions.multivariate_f import log_density_w
from vclib.utils.math import cumulative_simpson, monotone_hermite_slopes

logger = logging.getLogger(__name__)

TAIL_DROP = 40.
INITIAL_HALF_WIDTH = 8.
MAX_HALF_WIDTH = 2. ** 20
INITIAL_INTERVALS = 1024
MAX_EVALUATIONS = 10 ** 6


def log_linear_map(h, M):
    """ Direction and offset of the line w(v) = v * direction + offset solving 1^T w = v and M w = h. """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    d = M.shape[1]
    A = np.vstack((np.ones((1, d)), M))
    if A.shape != (d, d):
        raise SingularTransform('Conditioning matrix must have {} rows. Got {}'.format(d - 1, M.shape[0]))
    if np.linalg.cond(A) > 1. / (d * eps):
        raise SingularTransform('[1^T; M] is singular; the sum direction lies in the row space of M')
    rhs = np.zeros((d, 2))
    rhs[0, 0] = 1.
    rhs[1:, 1] = np.asarray(h, dtype=np.float64)
    try:
        solution = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularTransform(str(e))
    return solution[:, 0], solution[:, 1]


def solve_w(v, h, M):
    """ w with 1^T w = v and M w = h. Vectorized over v: returns (..., L - 1). """
    direction, offset = log_linear_map(h, M)
    return np.multiply.outer(np.asarray(v, dtype=np.float64), direction) + offset


def _log_q_line(v, direction, offset, mults):
    w = np.multiply.outer(v, direction) + offset
    # the Jacobian of u = exp(w) contributes sum_l w_l = v
    return log_density_w(w, mults, normalized=False) + v


def log_q(v, ctx, mults):
    """ Unnormalized conditional log density of V at v given the context's conditioning value. """
    direction, offset = log_linear_map(ctx.h, ctx.M)
    return _log_q_line(np.asarray(v, dtype=np.float64), direction, offset, mults)


class ConditionalLaw(object):
    """ Tabulated conditional law of V. Immutable after build_law. """

    def __init__(self, rho, h, mults, direction, offset, mode, log_norm_const, mu, knots, cdf_values, pdf_values,
                 quad_tol, num_evaluations):
        self.rho = rho
        self.h = h
        self.mults = mults
        self.mode = mode
        self.log_norm_const = log_norm_const
        self.mu = mu
        self.knots = knots
        self.cdf_values = cdf_values
        self.quad_tol = quad_tol
        self.num_evaluations = num_evaluations
        self._direction = direction
        self._offset = offset
        slopes = monotone_hermite_slopes(knots, cdf_values, pdf_values)
        self._spline = CubicHermiteSpline(knots, cdf_values, slopes, extrapolate=False)

    @property
    def lower(self):
        return self.knots[0]

    @property
    def upper(self):
        return self.knots[-1]

    def log_pdf(self, v):
        v = np.asarray(v, dtype=np.float64)
        return _log_q_line(v, self._direction, self._offset, self.mults) - self.log_norm_const

    def pdf(self, v):
        return np.exp(self.log_pdf(v))

    def cdf(self, v):
        v = np.clip(np.asarray(v, dtype=np.float64), self.lower, self.upper)
        out = np.clip(self._spline(v), 0., 1.)
        return out if out.ndim else float(out)

    def cdf_abs(self, t):
        """ Distribution function of |V - mu| at t. """
        t = np.maximum(np.asarray(t, dtype=np.float64), 0.)
        out = np.clip(self.cdf(self.mu + t) - self.cdf(self.mu - t), 0., 1.)
        return out if np.ndim(out) else float(out)

    def quantile(self, q, newton_steps=4):
        q = np.asarray(q, dtype=np.float64)
        v = np.interp(q, self.cdf_values, self.knots)
        for _ in range(newton_steps):
            density = self.pdf(v)
            step = np.where(density > 1e-300, (self.cdf(v) - q) / np.maximum(density, 1e-300), 0.)
            v = np.clip(v - step, self.lower, self.upper)
        return v if v.ndim else float(v)

    def sample(self, size, rng):
        return self.quantile(rng.uniform(size=size))

    def __repr__(self):
        return 'ConditionalLaw(rho={:.6g}, mu={:.6g}, support=[{:.4g}, {:.4g}], knots={})'.format(
            self.rho, self.mu, self.lower, self.upper, len(self.knots))


def _find_mode(log_q_fn):
    def neg_log_q(v):
        return -float(log_q_fn(np.float64(v)))

    try:
        xa, xb, xc, _, _, _, _ = scipy.optimize.bracket(neg_log_q, xa=0., xb=1., maxiter=2000)
    except (RuntimeError, ValueError) as e:
        raise ModeSearchFailure('Could not bracket the conditional mode: {}'.format(e))
    result = scipy.optimize.minimize_scalar(neg_log_q, bracket=(min(xa, xc), xb, max(xa, xc)), method='golden',
                                            options={'xtol': 1e-8})
    if not getattr(result, 'success', True) or not np.isfinite(result.fun):
        raise ModeSearchFailure('Golden-section search did not converge: {}'.format(result))
    return float(result.x), -float(result.fun)


def build_law(ctx, mults, quad_tol=None):
    """ Tabulate the conditional law of V given h at the context's localization point.

    Args:
        ctx: AssociationContext
        mults: (L,) multiplicities
        quad_tol: relative tolerance on the normalizing constant and the mean, in (0, 1e-4]

    Returns: ConditionalLaw

    """
    if quad_tol is None:
        quad_tol = config['quad_tol']
    assert 0. < quad_tol <= 1e-4, 'quad_tol must lie in (0, 1e-4]. Got {}'.format(quad_tol)
    mults = np.asarray(mults, dtype=np.float64)
    direction, offset = log_linear_map(ctx.h, ctx.M)

    def fn(v):
        return _log_q_line(v, direction, offset, mults)

    mode, log_q_mode = _find_mode(fn)

    half_width = INITIAL_HALF_WIDTH
    while max(fn(np.float64(mode - half_width)), fn(np.float64(mode + half_width))) >= log_q_mode - TAIL_DROP:
        half_width *= 2.
        if half_width > MAX_HALF_WIDTH:
            raise QuadratureFailure('Tails of the conditional density do not decay at rho={}'.format(ctx.rho))
    lo, hi = mode - half_width, mode + half_width

    num_intervals = INITIAL_INTERVALS
    v = np.linspace(lo, hi, num_intervals + 1)
    density = np.exp(fn(v) - log_q_mode)
    num_evaluations = v.shape[0]
    previous = None
    while True:
        norm = scipy.integrate.simpson(density, x=v)
        centered = scipy.integrate.simpson((v - mode) * density, x=v)
        estimate = (norm, mode + centered / norm)
        if previous is not None and \
                abs(estimate[0] - previous[0]) <= quad_tol * estimate[0] and \
                abs(estimate[1] - previous[1]) <= quad_tol * max(1., abs(estimate[1])):
            break
        previous = estimate

        midpoints = 0.5 * (v[:-1] + v[1:])
        num_evaluations += midpoints.shape[0]
        if num_evaluations > MAX_EVALUATIONS:
            raise QuadratureFailure('Quadrature did not reach relative tolerance {} within {} evaluations at rho={}'
                                    .format(quad_tol, MAX_EVALUATIONS, ctx.rho))
        refined_v = np.empty(2 * v.shape[0] - 1)
        refined_v[0::2] = v
        refined_v[1::2] = midpoints
        refined_density = np.empty_like(refined_v)
        refined_density[0::2] = density
        refined_density[1::2] = np.exp(fn(midpoints) - log_q_mode)
        v, density = refined_v, refined_density

    norm, mu = estimate
    h_step = (hi - lo) / (v.shape[0] - 1)
    cumulative = cumulative_simpson(density, h_step)
    knots = v[0::2]
    cdf_values = np.maximum.accumulate(cumulative / cumulative[-1])
    pdf_values = density[0::2] / cumulative[-1]

    logger.debug('Conditional law at rho={:.6g}: mode={:.6g}, mu={:.6g}, domain=[{:.4g}, {:.4g}], evaluations={}'
                 .format(ctx.rho, mode, mu, lo, hi, num_evaluations))

    return ConditionalLaw(rho=ctx.rho, h=np.asarray(ctx.h), mults=mults, direction=direction, offset=offset,
                          mode=mode, log_norm_const=log_q_mode + np.log(cumulative[-1]), mu=mu, knots=knots,
                          cdf_values=cdf_values, pdf_values=pdf_values, quad_tol=quad_tol,
                          num_evaluations=num_evaluations)


def cdf_abs(law: ConditionalLaw, t):
    return law.cdf_abs(t)
