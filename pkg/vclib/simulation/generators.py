"""
Synthetic data for the one-way random effects model y_ij = mu + alpha_i + eps_ij (mu = 0) and for the
baseline association S_l = (lambda_l sigma_a^2 + sigma_e^2) ChiSq(r_l).
"""

import numpy as np

from vclib.common import ConfigError
from vclib.model.reduction import MixedModelSpec, validate_eigenstructure
from vclib.utils.random import ScaledChiSquareSampler


def oneway_design(pattern):
    """ Intercept-only X, group-indicator Z and A = I for group sizes `pattern`. """
    pattern = np.asarray(pattern)
    if pattern.ndim != 1 or len(pattern) < 2:
        raise ConfigError('A one-way pattern needs at least 2 groups. Got {}'.format(pattern))
    if np.any(pattern < 1) or np.any(pattern != np.round(pattern)):
        raise ConfigError('Group sizes must be positive integers. Got {}'.format(pattern))
    pattern = pattern.astype(np.int64)
    n = int(np.sum(pattern))
    groups = np.repeat(np.arange(len(pattern)), pattern)
    X = np.ones((n, 1))
    Z = np.zeros((n, len(pattern)))
    Z[np.arange(n), groups] = 1.
    return X, Z, np.eye(len(pattern))


def gen_oneway(pattern, sigma_a2, sigma_e2, rng):
    X, Z, A = oneway_design(pattern)
    if sigma_a2 < 0 or sigma_e2 <= 0:
        raise ConfigError('Need sigma_a2 >= 0 and sigma_e2 > 0. Got ({}, {})'.format(sigma_a2, sigma_e2))
    alpha = rng.normal(0., np.sqrt(sigma_a2), size=Z.shape[1])
    noise = rng.normal(0., np.sqrt(sigma_e2), size=Z.shape[0])
    y = Z @ alpha + noise
    return MixedModelSpec(y, X, Z, A)


def gen_baseline(lambdas, mults, sigma_a2, sigma_e2, rng):
    """ Draw the minimal sufficient statistics directly, bypassing the raw data. """
    validate_eigenstructure(lambdas, mults)
    scale = np.asarray(lambdas, dtype=np.float64) * sigma_a2 + sigma_e2
    return ScaledChiSquareSampler(mults, scale).sample((), rng)
