"""
A sampler defines a method to sample random data from certain distribution.
Every sampler draws from an explicit numpy Generator so results never depend on global state.
"""

import numpy as np


class BaseSampler(object):
    def __init__(self):
        pass

    def sample(self, shape, rng):
        raise NotImplementedError


class ScaledChiSquareSampler(BaseSampler):
    """ Independent scale_l * ChiSq(df_l) draws, one column per component. """

    def __init__(self, df, scale=1.0):
        super(ScaledChiSquareSampler, self).__init__()
        self.df = np.atleast_1d(np.asarray(df, dtype=np.float64))
        self.scale = np.broadcast_to(np.asarray(scale, dtype=np.float64), self.df.shape)

        assert np.all(self.df > 0), 'Degrees of freedom must be positive. Got {}'.format(self.df)
        assert np.all(self.scale >= 0), 'Scales must be nonnegative. Got {}'.format(self.scale)

    def sample(self, shape, rng):
        return self.scale * rng.chisquare(self.df, size=tuple(shape) + self.df.shape)


class MultivariateFSampler(BaseSampler):
    """ U_l = (V_l / r_l) / (V_L / r_L) with V_l ~ ChiSq(r_l) independent, l < L. """

    def __init__(self, mults):
        super(MultivariateFSampler, self).__init__()
        self.mults = np.asarray(mults, dtype=np.float64)
        assert self.mults.shape[0] >= 2, 'Need at least two components. Got {}'.format(self.mults)
        self.chi_square = ScaledChiSquareSampler(self.mults)

    def sample(self, shape, rng):
        v = self.chi_square.sample(shape, rng) / self.mults
        return v[..., :-1] / v[..., -1:]
