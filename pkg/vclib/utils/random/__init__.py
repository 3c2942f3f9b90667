import numpy as np

from .sampler import BaseSampler, ScaledChiSquareSampler, MultivariateFSampler


def make_rng(seed=None):
    return np.random.default_rng(seed)


def stream_rng(seed, index):
    """ Generator for stream `index` under master `seed`.

    The stream depends only on (seed, index), so replications may be scheduled on any number of workers
    in any order without changing their draws.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,))))
