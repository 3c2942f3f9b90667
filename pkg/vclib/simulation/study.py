"""
Coverage and length studies of plausibility intervals under repeated sampling.

Every replication owns the random stream stream_rng(seed, index), so a study is a pure function of its
SimConfig no matter how many workers run it.
"""

import logging
import time
from collections import OrderedDict, namedtuple

import numpy as np
import scipy.stats
from joblib import Parallel, delayed
from tqdm.auto import tqdm

from vclib import config as vclib_config
from vclib.common import ConfigError, StudyFailure, VCError
from vclib.inference.plausibility import GridSpec, interval, pl_at
from vclib.model.reduction import EigenReduction, reduce_model, validate_eigenstructure
from vclib.simulation.generators import gen_baseline, gen_oneway, oneway_design
from vclib.utils.random import stream_rng

logger = logging.getLogger(__name__)

DESIGN_PATTERNS = ((1, 1, 1, 1, 1, 10), (2, 4, 4, 5), (2, 3, 10))

VARIANCE_PAIRS = ((0.05, 10.), (0.1, 10.), (0.5, 10.), (1., 10.), (0.5, 2.), (1., 1.), (2., 0.5), (5., 0.2),
                  (10., 0.1))

# variance components fitted to the lamb birth-weight data
LAMB_FITTED_VARIANCES = (0.767, 2.763)

MAX_FAILURE_RATE = 0.01

RepRecord = namedtuple('RepRecord', ('index', 'lower', 'upper', 'contains', 'pl_true', 'multimodal', 'runtime',
                                     'error'))


class SimConfig(object):
    """ One cell of a simulation study.

    Args:
        pattern: one-way group sizes (n_1, ..., n_a). Data are drawn as raw responses and reduced.
        lambdas, mults: eigenstructure. Sufficient statistics are drawn directly. Give either this or pattern.
        sigma_a2, sigma_e2: true variance components
        reps: number of replications
        alpha: interval level
        seed: master seed
        parallelism: joblib workers. Defaults to config['num_threads'].
        grid_spec: scan grid of every interval. Defaults to config['study_grid_points'] points on [0, rho_max];
            each crossing is then refined by bisection, so a coarse scan only loses disjoint regions narrower
            than the grid spacing.
    """

    def __init__(self, sigma_a2, sigma_e2, pattern=None, lambdas=None, mults=None, reps=1000, alpha=0.05, seed=0,
                 parallelism=None, grid_spec=None, quad_tol=None, refine_tol=None, cluster_tol=None):
        self.pattern = None if pattern is None else tuple(int(x) for x in pattern)
        self.lambdas = None if lambdas is None else tuple(float(x) for x in lambdas)
        self.mults = None if mults is None else tuple(int(x) for x in mults)
        self.sigma_a2 = float(sigma_a2)
        self.sigma_e2 = float(sigma_e2)
        self.reps = int(reps)
        self.alpha = float(alpha)
        self.seed = int(seed)
        self.parallelism = int(vclib_config['num_threads'] if parallelism is None else parallelism)
        self.grid_spec = GridSpec(points=vclib_config['study_grid_points']) if grid_spec is None else grid_spec
        self.quad_tol = vclib_config['quad_tol'] if quad_tol is None else quad_tol
        self.refine_tol = vclib_config['refine_tol'] if refine_tol is None else refine_tol
        self.cluster_tol = vclib_config['cluster_tol'] if cluster_tol is None else cluster_tol
        self._validate()

    def _validate(self):
        if (self.pattern is None) == (self.lambdas is None):
            raise ConfigError('Give exactly one of a group-size pattern or an eigenstructure')
        if self.pattern is not None:
            oneway_design(self.pattern)
        else:
            if self.mults is None:
                raise ConfigError('An eigenstructure needs multiplicities')
            validate_eigenstructure(self.lambdas, self.mults)
        if self.reps < 1:
            raise ConfigError('reps must be at least 1. Got {}'.format(self.reps))
        if self.sigma_a2 < 0 or self.sigma_e2 <= 0:
            raise ConfigError('Need sigma_a2 >= 0 and sigma_e2 > 0. Got ({}, {})'.format(self.sigma_a2, self.sigma_e2))
        if not 0. < self.alpha < 1.:
            raise ConfigError('alpha must lie in (0, 1). Got {}'.format(self.alpha))
        if self.parallelism < 1:
            raise ConfigError('parallelism must be at least 1. Got {}'.format(self.parallelism))
        if self.rho_true > self.grid_spec.rho_max:
            raise ConfigError('True rho {} lies above the grid ceiling {}'.format(self.rho_true, self.grid_spec.rho_max))

    @property
    def rho_true(self):
        return self.sigma_a2 / (self.sigma_a2 + self.sigma_e2)

    @property
    def psi_true(self):
        return self.sigma_a2 / self.sigma_e2

    def draw(self, rng):
        """ One replication's reduction. """
        if self.pattern is not None:
            model = gen_oneway(self.pattern, self.sigma_a2, self.sigma_e2, rng)
            return reduce_model(model, cluster_tol=self.cluster_tol)
        S = gen_baseline(self.lambdas, self.mults, self.sigma_a2, self.sigma_e2, rng)
        return EigenReduction.from_stats(self.lambdas, self.mults, S)

    def to_dict(self):
        """ Everything a study depends on. parallelism is left out since it never changes the result. """
        return OrderedDict([
            ('pattern', None if self.pattern is None else list(self.pattern)),
            ('lambdas', None if self.lambdas is None else list(self.lambdas)),
            ('mults', None if self.mults is None else list(self.mults)),
            ('sigma_a2', self.sigma_a2),
            ('sigma_e2', self.sigma_e2),
            ('rho_true', self.rho_true),
            ('psi_true', self.psi_true),
            ('reps', self.reps),
            ('alpha', self.alpha),
            ('seed', self.seed),
            ('grid', self.grid_spec.to_dict()),
            ('quad_tol', self.quad_tol),
            ('refine_tol', self.refine_tol),
            ('cluster_tol', self.cluster_tol),
        ])

    def __repr__(self):
        design = 'pattern={}'.format(self.pattern) if self.pattern is not None else 'lambdas={}, mults={}'.format(
            self.lambdas, self.mults)
        return 'SimConfig({}, sigma_a2={}, sigma_e2={}, reps={}, alpha={}, seed={})'.format(
            design, self.sigma_a2, self.sigma_e2, self.reps, self.alpha, self.seed)


class StudyResult(object):
    """ Replication records of one SimConfig and their summaries.

    Coverage is the fraction of all replications whose interval contains rho_true, so a failed replication
    counts as a miss. Length, pl(rho_true) and the multimodal count use successful replications only.
    """

    def __init__(self, config: SimConfig, records):
        self.config = config
        self.records = list(records)

    @property
    def successes(self):
        return [record for record in self.records if record.error is None]

    @property
    def num_failures(self):
        return len(self.records) - len(self.successes)

    @property
    def empirical_coverage(self):
        if len(self.records) == 0:
            return float('nan')
        return float(np.mean([record.contains for record in self.records]))

    @property
    def mean_length(self):
        successes = self.successes
        if len(successes) == 0:
            return float('nan')
        return float(np.mean([0. if record.lower is None else record.upper - record.lower for record in successes]))

    @property
    def pl_true(self):
        return np.array([record.pl_true for record in self.successes])

    @property
    def ks_uniform_pvalue(self):
        """ KS test of pl(rho_true) against Unif(0, 1); valid plausibility makes these uniform. """
        values = self.pl_true
        if len(values) < 2:
            return float('nan')
        return float(scipy.stats.kstest(values, 'uniform').pvalue)

    @property
    def multimodal_count(self):
        return int(sum(record.multimodal for record in self.successes))

    def log(self):
        stats = OrderedDict({
            'Coverage': self.empirical_coverage,
            'MeanLength': self.mean_length,
            'KSUniformPValue': self.ks_uniform_pvalue,
            'Failures': self.num_failures,
            'Multimodal': self.multimodal_count,
        })
        return stats

    def to_dict(self, include_timing=False):
        records = []
        for record in self.records:
            d = record._asdict()
            if not include_timing:
                d.pop('runtime')
            records.append(d)
        return OrderedDict([
            ('config', self.config.to_dict()),
            ('empirical_coverage', self.empirical_coverage),
            ('mean_length', self.mean_length),
            ('ks_uniform_pvalue', self.ks_uniform_pvalue),
            ('num_failures', self.num_failures),
            ('multimodal_count', self.multimodal_count),
            ('records', records),
        ])


def run_replication(config: SimConfig, index):
    rng = stream_rng(config.seed, index)
    start = time.perf_counter()
    try:
        reduction = config.draw(rng)
        result = interval(reduction, config.alpha, grid_spec=config.grid_spec, refine_tol=config.refine_tol,
                          quad_tol=config.quad_tol)
        pl_true = pl_at(reduction, config.rho_true, quad_tol=config.quad_tol, rho_max=config.grid_spec.rho_max)
        return RepRecord(index=index, lower=result.lower, upper=result.upper,
                         contains=bool(result.contains(config.rho_true)), pl_true=pl_true,
                         multimodal=result.multimodal, runtime=time.perf_counter() - start, error=None)
    except VCError as e:
        logger.warning('Replication {} failed: {}: {}'.format(index, type(e).__name__, e))
        return RepRecord(index=index, lower=None, upper=None, contains=False, pl_true=float('nan'),
                         multimodal=False, runtime=time.perf_counter() - start,
                         error='{}: {}'.format(type(e).__name__, e))


def run_study(config: SimConfig, verbose=False):
    if config.parallelism == 1:
        t = range(config.reps)
        if verbose:
            t = tqdm(t, desc='Replications')
        records = [run_replication(config, index) for index in t]
    else:
        records = Parallel(n_jobs=config.parallelism)(delayed(run_replication)(config, index)
                                                      for index in range(config.reps))

    result = StudyResult(config, records)
    if result.num_failures > MAX_FAILURE_RATE * config.reps:
        raise StudyFailure('{}/{} replications failed, above the {:.0%} budget. First error: {}'.format(
            result.num_failures, config.reps, MAX_FAILURE_RATE,
            next(record.error for record in records if record.error is not None)))

    if verbose:
        stats = result.log()
        strings = []
        for key, value in stats.items():
            strings.append(key + ": {:.4f}".format(value))
        logger.info('{} - {}'.format(config, " - ".join(strings)))
    return result


def run_grid(patterns=DESIGN_PATTERNS, variance_pairs=VARIANCE_PAIRS, verbose=False, **kwargs):
    """ One study per (pattern, variance pair) cell. kwargs are passed to every SimConfig. """
    results = []
    for pattern in patterns:
        for sigma_a2, sigma_e2 in variance_pairs:
            config = SimConfig(sigma_a2, sigma_e2, pattern=pattern, **kwargs)
            results.append(run_study(config, verbose=verbose))
    return results
