"""
Eigenstructures of published designs whose raw data are not bundled.
"""

import numpy as np


def assay_eigenstructure():
    """ Nine-point slope-ratio assay with two replications per dose. """
    return np.array([4.55, 1., 0.]), np.array([1, 1, 10])


def lamb_eigenstructure():
    """ Lamb birth-weight design: L = 18, lambda_1 = 5.09, lambda_8 = 2 twice, lambda_L = 0 with r_L = 37.

    Only those values are published; the other nonzero eigenvalues are spread evenly between them.
    """
    upper = np.linspace(5.09, 2., 8)
    lower = np.linspace(2., 0., 11)[1:-1]
    lambdas = np.concatenate((upper, lower, [0.]))
    mults = np.ones(len(lambdas), dtype=np.int64)
    mults[7] = 2
    mults[-1] = 37
    return lambdas, mults


def balanced_oneway_eigenstructure(num_groups, group_size):
    """ Intercept-only balanced one-way design with A = I: lambda = (m, 0), r = (a - 1, n - a). """
    n = num_groups * group_size
    return np.array([float(group_size), 0.]), np.array([num_groups - 1, n - num_groups])


FIXTURES = {
    'assay': assay_eigenstructure,
    'lamb': lamb_eigenstructure,
}
