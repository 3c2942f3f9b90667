"""
Multivariate F distribution of U_l = (V_l / r_l) / (V_L / r_L), l < L, with V_l ~ ChiSq(r_l) independent.

Sharing the denominator V_L, the joint density is
    Gamma(nu / 2) / prod_l Gamma(r_l / 2) * prod_{l<L} (r_l / r_L)^{r_l / 2} u_l^{r_l / 2 - 1}
        * (1 + sum_{l<L} (r_l / r_L) u_l)^{-nu / 2},    nu = sum_l r_l.
For L = 2 this is the F(r_1, r_2) density.
"""

import numpy as np
from scipy.special import gammaln, logsumexp

from vclib.common import DomainError


def log_normalizer(mults):
    mults = np.asarray(mults, dtype=np.float64)
    nu = np.sum(mults)
    ratio = mults[:-1] / mults[-1]
    return gammaln(nu / 2.) - np.sum(gammaln(mults / 2.)) + np.sum(mults[:-1] / 2. * np.log(ratio))


def log_density_w(w, mults, normalized=True):
    """ Log density of U evaluated at u = exp(w), vectorized over leading axes of w.

    No Jacobian is included: this is the density of U, parametrized by log u.

    Args:
        w: (..., L - 1) log u
        mults: (L,) degrees of freedom
        normalized: include the gamma-function constant

    Returns: (...) log density

    """
    w = np.asarray(w, dtype=np.float64)
    mults = np.asarray(mults, dtype=np.float64)
    nu = np.sum(mults)
    log_ratio = np.log(mults[:-1] / mults[-1])

    shifted = w + log_ratio
    zeros = np.zeros(shifted.shape[:-1] + (1,))
    log_denominator = logsumexp(np.concatenate((zeros, shifted), axis=-1), axis=-1)

    out = np.sum((mults[:-1] / 2. - 1.) * w, axis=-1) - nu / 2. * log_denominator
    if normalized:
        out = out + log_normalizer(mults)
    return out


def log_density_u(u, mults, normalized=True):
    """ Multivariate F log density. With normalized=False only the u-dependent kernel is returned. """
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0):
        raise DomainError('Multivariate F support is u > 0. Got {}'.format(u))
    return log_density_w(np.log(u), mults, normalized=normalized)
