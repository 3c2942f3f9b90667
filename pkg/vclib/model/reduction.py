"""
Reduce mixed-model data y = X beta + Z alpha + eps, alpha ~ N(0, sigma_a^2 A), eps ~ N(0, sigma_e^2 I) to the
eigenstructure of G = K^T Z A Z^T K and the minimal sufficient statistics S_1..S_L.
"""

import logging

import numpy as np
import scipy.linalg

from vclib import config
from vclib.common import eps, DimensionError, RankDeficient, DegenerateModel, DegenerateData, DomainError, \
    NumericalError, DivisionByZero, OrderError

logger = logging.getLogger(__name__)


class MixedModelSpec(object):
    """ Raw data of a normal linear mixed model with two variance components.

    Args:
        y: (n,) response
        X: (n, p) fixed-effect design, full column rank
        Z: (n, a) random-effect design
        A: (a, a) symmetric positive semidefinite random-effect covariance. None means identity.
    """

    def __init__(self, y, X, Z, A=None):
        self.y = np.asarray(y, dtype=np.float64).ravel()
        self.X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self.Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        if A is None:
            A = np.eye(self.Z.shape[1])
        self.A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        self._validate()

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def a(self):
        return self.Z.shape[1]

    def _validate(self):
        n = self.n
        if self.X.shape[0] != n:
            raise DimensionError('X has {} rows but y has length {}'.format(self.X.shape[0], n))
        if self.Z.shape[0] != n:
            raise DimensionError('Z has {} rows but y has length {}'.format(self.Z.shape[0], n))
        if self.A.shape != (self.a, self.a):
            raise DimensionError('A must be {0}x{0} to match Z with {0} columns. Got {1}'.format(self.a, self.A.shape))
        if not 1 <= self.p < n:
            raise DimensionError('Need n > p >= 1. Got n={}, p={}'.format(n, self.p))
        if not np.all(np.isfinite(self.y)):
            raise DomainError('y contains non-finite values')

        tol_psd = 1e-10 * max(np.max(np.abs(self.A)), eps)
        if np.max(np.abs(self.A - self.A.T)) > tol_psd:
            raise DomainError('A is not symmetric')
        min_eig = scipy.linalg.eigvalsh(self.A)[0]
        if min_eig < -tol_psd:
            raise DomainError('A is not positive semidefinite, smallest eigenvalue {:.3e}'.format(min_eig))


def build_residual_projector(X, method='svd'):
    """ Orthonormal basis K of the null space of X^T, so K^T K = I and K K^T = I - X (X^T X)^{-1} X^T.

    Args:
        X: (n, p) design matrix
        method: 'svd' or 'qr'. Both give valid K; downstream statistics do not depend on the choice.

    Returns: K of shape (n, n - p)

    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, p = X.shape
    if p >= n:
        raise DimensionError('Need p < n to build a residual projector. Got n={}, p={}'.format(n, p))

    singular_values = scipy.linalg.svdvals(X)
    tol = n * eps * singular_values[0]
    rank = int(np.sum(singular_values > tol))
    if rank < p:
        raise RankDeficient('X has rank {} < p = {}'.format(rank, p))

    if method == 'svd':
        U, _, _ = scipy.linalg.svd(X, full_matrices=True)
        return U[:, p:]
    elif method == 'qr':
        Q, _ = scipy.linalg.qr(X, mode='full')
        return Q[:, p:]
    else:
        raise ValueError('Unknown method {}'.format(method))


def eigen_reduce(model: MixedModelSpec, cluster_tol=None, K=None):
    """ Distinct eigenvalues, multiplicities and eigenvector groups of G = K^T Z A Z^T K.

    Args:
        model: mixed model
        cluster_tol: relative tolerance; sorted eigenvalues closer than cluster_tol * lambda_max share a group
        K: residual projector. Built from model.X when None; pass the same K to sufficient_stats.

    Returns: (lambdas, mults, projectors) with lambdas strictly decreasing and projectors[l] of shape (n - p, r_l)

    """
    if cluster_tol is None:
        cluster_tol = config['cluster_tol']
    assert cluster_tol > 0, 'cluster_tol must be positive. Got {}'.format(cluster_tol)
    if K is None:
        K = build_residual_projector(model.X)

    KZ = K.T @ model.Z
    G = KZ @ model.A @ KZ.T
    G = 0.5 * (G + G.T)

    values, vectors = scipy.linalg.eigh(G)
    values = values[::-1]
    vectors = vectors[:, ::-1]

    scale = np.max(np.abs(values))
    if scale <= G.shape[0] * eps:
        raise DegenerateModel('G vanishes; the random effect carries no information')
    tol = cluster_tol * scale

    if values[-1] < -tol:
        raise NumericalError('G has a negative eigenvalue {:.3e} beyond tolerance'.format(values[-1]))

    # a new group starts wherever the gap exceeds tol
    breaks = np.nonzero(values[:-1] - values[1:] > tol)[0] + 1
    groups = np.split(np.arange(values.shape[0]), breaks)

    lambdas = np.array([np.mean(values[group]) for group in groups])
    if abs(lambdas[-1]) <= tol and lambdas[-1] != 0.:
        logger.debug('Clamping smallest eigenvalue {:.3e} to 0'.format(lambdas[-1]))
        lambdas[-1] = 0.
    mults = np.array([len(group) for group in groups], dtype=np.int64)
    projectors = [vectors[:, group] for group in groups]

    if lambdas.shape[0] < 2:
        raise DegenerateModel('G is proportional to the identity; heritability is not identifiable')

    logger.debug('Eigen reduction: lambdas={}, mults={}'.format(lambdas, mults))
    return lambdas, mults, projectors


def sufficient_stats(y, K, projectors):
    """ S_l = y^T K P_l P_l^T K^T y for every eigenvector group. """
    z = K.T @ np.asarray(y, dtype=np.float64)
    S = np.array([np.sum(np.square(P.T @ z)) for P in projectors])

    total = float(np.dot(z, z))
    y_norm = float(np.dot(y, y))
    if total <= 1e-24 * max(y_norm, eps):
        raise DegenerateData('Residual sum of squares vanishes; y lies in the column space of X')
    if np.any(S < -1e-12 * np.sum(S)):
        raise NumericalError('Negative sufficient statistic {}'.format(S))
    if abs(np.sum(S) - total) > 1e-8 * total:
        raise NumericalError('Projectors do not partition the residual space: {} != {}'.format(np.sum(S), total))
    return np.maximum(S, 0.)


def ratio_stats(S, mults):
    """ X_l = (S_l / r_l) / (S_L / r_L) for l < L and T(x) = sum_l log X_l.

    Returns: (ratio_x, t_stat)

    """
    S = np.asarray(S, dtype=np.float64)
    mults = np.asarray(mults, dtype=np.float64)
    assert S.shape == mults.shape, 'S and mults must align. Got {} and {}'.format(S.shape, mults.shape)
    if S[-1] <= 0.:
        raise DivisionByZero('S_L = {} leaves the ratio statistics undefined'.format(S[-1]))
    ratio_x = (S[:-1] / mults[:-1]) / (S[-1] / mults[-1])
    if np.any(ratio_x <= 0.):
        raise DegenerateData('Ratio statistics must be positive. Got {}'.format(ratio_x))
    t_stat = float(np.sum(np.log(ratio_x)))
    return ratio_x, t_stat


class EigenReduction(object):
    """ Eigenstructure and minimal sufficient statistics of a mixed model. """

    def __init__(self, lambdas, mults, S, n=None, p=None):
        self.lambdas = np.asarray(lambdas, dtype=np.float64)
        self.mults = np.asarray(mults, dtype=np.int64)
        self.S = np.asarray(S, dtype=np.float64)
        self.n = n
        self.p = p
        validate_eigenstructure(self.lambdas, self.mults)
        if self.S.shape != self.lambdas.shape:
            raise DimensionError('Need one statistic per eigenvalue. Got {} and {}'.format(
                self.S.shape, self.lambdas.shape))
        if n is not None and p is not None and int(np.sum(self.mults)) != n - p:
            raise DimensionError('Multiplicities sum to {} but n - p = {}'.format(np.sum(self.mults), n - p))
        self.ratio_x, self.t_stat = ratio_stats(self.S, self.mults)

    @classmethod
    def from_stats(cls, lambdas, mults, S, n=None, p=None):
        return cls(lambdas, mults, S, n=n, p=p)

    @property
    def num_components(self):
        return self.lambdas.shape[0]

    def scaled(self, c):
        """ Reduction of c * y. """
        return EigenReduction(self.lambdas, self.mults, self.S * c ** 2, n=self.n, p=self.p)

    def to_dict(self):
        return {
            'lambdas': self.lambdas.tolist(),
            'mults': self.mults.tolist(),
            'S': self.S.tolist(),
            'ratio_x': self.ratio_x.tolist(),
            't_stat': self.t_stat,
            'n': self.n,
            'p': self.p,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d['lambdas'], d['mults'], d['S'], n=d.get('n'), p=d.get('p'))

    def __repr__(self):
        return 'EigenReduction(lambdas={}, mults={}, S={})'.format(self.lambdas, self.mults, self.S)


def validate_eigenstructure(lambdas, mults):
    lambdas = np.asarray(lambdas, dtype=np.float64)
    mults = np.asarray(mults)
    if lambdas.ndim != 1 or lambdas.shape != mults.shape:
        raise DimensionError('lambdas and mults must be vectors of equal length. Got {} and {}'.format(
            lambdas.shape, mults.shape))
    if lambdas.shape[0] < 2:
        raise DegenerateModel('Need at least two distinct eigenvalues. Got {}'.format(lambdas))
    if np.any(np.diff(lambdas) >= 0):
        raise OrderError('Eigenvalues must be strictly decreasing. Got {}'.format(lambdas))
    if lambdas[-1] < 0:
        raise OrderError('Smallest eigenvalue must be nonnegative. Got {}'.format(lambdas[-1]))
    if np.any(mults < 1) or np.any(mults != np.round(mults)):
        raise DomainError('Multiplicities must be positive integers. Got {}'.format(mults))


def reduce_model(model: MixedModelSpec, cluster_tol=None, method='svd'):
    K = build_residual_projector(model.X, method=method)
    lambdas, mults, projectors = eigen_reduce(model, cluster_tol=cluster_tol, K=K)
    S = sufficient_stats(model.y, K, projectors)
    return EigenReduction(lambdas, mults, S, n=model.n, p=model.p)
