"""
Ingredients of the conditional association for the heritability coefficient rho at a localization point.

With X_l = f_l(rho) U_l, the statistic T(x) = sum_l log x_l splits as T = phi(rho) + V where V = sum_l log U_l,
and the rows of M (orthogonal to g(rho) = d/drho log f(rho)) define the conditioning value h = M log(x / f(rho)).
The localization point always equals the rho being evaluated.
"""

from collections import namedtuple

import numpy as np

from vclib import config
from vclib.common import DomainError
from vclib.utils.math import householder_complement

AssociationContext = namedtuple('AssociationContext', ('rho', 'f', 'phi', 'g', 'M', 'h'))


def _check_rho(rho, rho_max=None):
    if rho_max is None:
        rho_max = config['rho_max']
    if not (0. <= rho <= rho_max):
        raise DomainError('rho must lie in [0, {}]. Got {}'.format(rho_max, rho))


def f_values(rho, lambdas, rho_max=None):
    """ f_l(rho) = (1 + rho (lambda_l - 1)) / (1 + rho (lambda_L - 1)) for l < L. """
    _check_rho(rho, rho_max)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    numerator = 1. + rho * (lambdas[:-1] - 1.)
    denominator = 1. + rho * (lambdas[-1] - 1.)
    return numerator / denominator


def phi(rho, lambdas, rho_max=None):
    return float(np.sum(np.log(f_values(rho, lambdas, rho_max=rho_max))))


def g_vector(rho, lambdas, rho_max=None):
    """ Derivative of log f_l at rho, written as (lambda_l - lambda_L) / ((1 + rho (lambda_l - 1)) (1 + rho (lambda_L - 1))). """
    _check_rho(rho, rho_max)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    g = (lambdas[:-1] - lambdas[-1]) / ((1. + rho * (lambdas[:-1] - 1.)) * (1. + rho * (lambdas[-1] - 1.)))
    assert np.all(g > 0), 'g(rho) must be strictly positive. Got {} at rho={}'.format(g, rho)
    return g


def conditioning_matrix(rho, lambdas, rho_max=None):
    """ (L - 2, L - 1) matrix whose orthonormal rows span the complement of g(rho). """
    return householder_complement(g_vector(rho, lambdas, rho_max=rho_max))


def conditioning_value(ratio_x, f, M):
    """ h = M (log x_l - log f_l). Empty when L = 2. """
    ratio_x = np.asarray(ratio_x, dtype=np.float64)
    if np.any(ratio_x <= 0):
        raise DomainError('Ratio statistics must be positive. Got {}'.format(ratio_x))
    return M @ (np.log(ratio_x) - np.log(f))


def build_context(rho, lambdas, ratio_x, rho_max=None):
    f = f_values(rho, lambdas, rho_max=rho_max)
    g = g_vector(rho, lambdas, rho_max=rho_max)
    M = householder_complement(g)
    h = conditioning_value(ratio_x, f, M)
    return AssociationContext(rho=float(rho), f=f, phi=float(np.sum(np.log(f))), g=g, M=M, h=h)


def rho_to_psi(rho):
    """ Variance ratio sigma_a^2 / sigma_e^2 of a heritability value. """
    rho = np.asarray(rho, dtype=np.float64)
    with np.errstate(divide='ignore'):
        return rho / (1. - rho)


def psi_to_rho(psi):
    psi = np.asarray(psi, dtype=np.float64)
    return psi / (1. + psi)
