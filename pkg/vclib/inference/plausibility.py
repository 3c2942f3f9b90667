"""
Plausibility function of the heritability coefficient and the plausibility intervals it defines.

pl(rho) = 1 - F(|T(x) - phi(rho) - mu_rho|), where F is the distribution function of |V - mu_rho| under the
conditional law of V at localization point rho. The interval at level alpha is {rho : pl(rho) > alpha}, found
by scanning a grid and refining every crossing of alpha by bisection.
"""

import logging
from collections import OrderedDict

import numpy as np
import pandas as pd
import scipy.optimize
from joblib import Parallel, delayed
from tqdm.auto import tqdm

from vclib import config
from vclib.common import ConfigError, VCError
from vclib.distributions.conditional import build_law
from vclib.model.association import build_context, rho_to_psi
from vclib.model.reduction import EigenReduction

logger = logging.getLogger(__name__)


class GridSpec(object):
    """ Uniform grid of `points` heritability values on [rho_min, rho_max]. """

    def __init__(self, rho_min=0., rho_max=None, points=None):
        self.rho_min = float(rho_min)
        self.rho_max = float(config['rho_max'] if rho_max is None else rho_max)
        self.points = int(config['grid_points'] if points is None else points)
        self._validate()

    def _validate(self):
        ceiling = config['rho_max']
        if self.points < 2:
            raise ConfigError('A grid needs at least 2 points. Got {}'.format(self.points))
        if not (0. <= self.rho_min < self.rho_max <= ceiling < 1.):
            raise ConfigError('Need 0 <= rho_min < rho_max <= {}. Got [{}, {}]'.format(
                ceiling, self.rho_min, self.rho_max))

    @classmethod
    def parse(cls, text):
        """ 'rho_min:rho_max:points', e.g. '0:0.999:400'. """
        parts = text.split(':')
        if len(parts) != 3:
            raise ConfigError('Grid must look like rho_min:rho_max:points. Got {!r}'.format(text))
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError:
            raise ConfigError('Grid must look like rho_min:rho_max:points. Got {!r}'.format(text))

    def values(self):
        return np.linspace(self.rho_min, self.rho_max, self.points)

    def to_dict(self):
        return OrderedDict([('rho_min', self.rho_min), ('rho_max', self.rho_max), ('points', self.points)])

    def __repr__(self):
        return 'GridSpec({}:{}:{})'.format(self.rho_min, self.rho_max, self.points)


class PlausibilityResult(object):
    def __init__(self, grid, pl, diagnostics, alpha=None, lower=None, upper=None):
        self.grid = np.asarray(grid, dtype=np.float64)
        self.pl = np.asarray(pl, dtype=np.float64)
        self.diagnostics = diagnostics
        self.alpha = alpha
        self.lower = lower
        self.upper = upper

    @property
    def is_empty(self):
        return self.alpha is not None and self.lower is None

    @property
    def multimodal(self):
        return bool(self.diagnostics.get('multimodal', False))

    @property
    def length(self):
        return 0. if self.lower is None else self.upper - self.lower

    def contains(self, rho):
        return self.lower is not None and self.lower <= rho <= self.upper

    def psi_bounds(self):
        if self.lower is None:
            return None, None
        return float(rho_to_psi(self.lower)), float(rho_to_psi(self.upper))

    def to_frame(self, psi=False):
        df = pd.DataFrame(OrderedDict([('rho', self.grid), ('pl', self.pl)]))
        if psi:
            df['psi'] = rho_to_psi(self.grid)
        return df

    def interval_dict(self):
        psi_lower, psi_upper = self.psi_bounds()
        return OrderedDict([
            ('alpha', self.alpha),
            ('lower', self.lower),
            ('upper', self.upper),
            ('psi_lower', psi_lower),
            ('psi_upper', psi_upper),
            ('empty', self.is_empty),
            ('multimodal_flag', self.multimodal),
        ])

    def __repr__(self):
        if self.alpha is None:
            return 'PlausibilityResult(points={})'.format(len(self.grid))
        return 'PlausibilityResult(alpha={}, interval=[{}, {}], multimodal={})'.format(
            self.alpha, self.lower, self.upper, self.multimodal)


def pl_at(reduction: EigenReduction, rho, quad_tol=None, rho_max=None):
    """ Plausibility of the singleton assertion {rho}, localized at rho itself. """
    ctx = build_context(rho, reduction.lambdas, reduction.ratio_x, rho_max=rho_max)
    law = build_law(ctx, reduction.mults, quad_tol=quad_tol)
    pl = 1. - law.cdf_abs(abs(reduction.t_stat - ctx.phi - law.mu))
    return float(np.clip(pl, 0., 1.))


def _pl_or_failure(reduction, rho, quad_tol, rho_max):
    try:
        return pl_at(reduction, rho, quad_tol=quad_tol, rho_max=rho_max), 'ok'
    except VCError as e:
        return np.nan, '{}: {}'.format(type(e).__name__, e)


def pl_curve(reduction: EigenReduction, grid_spec=None, quad_tol=None, n_jobs=1, verbose=False):
    """ Plausibility at every grid point. Failed points hold NaN and their error in diagnostics['status']. """
    if grid_spec is None:
        grid_spec = GridSpec()
    grid = grid_spec.values()
    rho_max = grid_spec.rho_max

    if n_jobs == 1:
        t = grid
        if verbose:
            t = tqdm(grid, desc='Plausibility')
        outputs = [_pl_or_failure(reduction, rho, quad_tol, rho_max) for rho in t]
    else:
        outputs = Parallel(n_jobs=n_jobs)(delayed(_pl_or_failure)(reduction, rho, quad_tol, rho_max)
                                          for rho in grid)

    pl = np.array([output[0] for output in outputs])
    status = [output[1] for output in outputs]
    num_failures = sum(s != 'ok' for s in status)
    if num_failures > 0:
        logger.warning('{}/{} grid points failed to evaluate'.format(num_failures, len(grid)))
    diagnostics = OrderedDict([('status', status), ('num_failures', num_failures)])
    return PlausibilityResult(grid, pl, diagnostics)


def _refine_crossing(reduction, alpha, inside, outside, refine_tol, quad_tol, rho_max):
    """ Bisection between a grid point with pl <= alpha and a neighbour with pl > alpha. """

    def excess(rho):
        return pl_at(reduction, rho, quad_tol=quad_tol, rho_max=rho_max) - alpha

    a, b = min(inside, outside), max(inside, outside)
    try:
        return float(scipy.optimize.bisect(excess, a, b, xtol=refine_tol))
    except (VCError, ValueError) as e:
        logger.warning('Could not refine the crossing in [{}, {}]: {}'.format(a, b, e))
        return float(inside)


def interval(reduction: EigenReduction, alpha, grid_spec=None, refine_tol=None, quad_tol=None, n_jobs=1,
             verbose=False, curve=None):
    """ Plausibility interval {rho : pl(rho) > alpha}.

    Args:
        reduction: eigenstructure and statistics of the data
        alpha: level in (0, 1); the interval has coverage 1 - alpha
        grid_spec: scan grid. Default is config['grid_points'] points on [0, config['rho_max']].
        refine_tol: bisection tolerance for every crossing
        quad_tol: quadrature tolerance of the conditional laws
        n_jobs: workers for the grid scan
        curve: precomputed pl_curve on grid_spec, reused if given

    Returns: PlausibilityResult with lower/upper set, or both None when pl <= alpha on the whole grid. If
        pl - alpha changes sign more than twice the convex hull is returned and diagnostics['multimodal'] is set.

    """
    if not 0. < alpha < 1.:
        raise ConfigError('alpha must lie in (0, 1). Got {}'.format(alpha))
    if refine_tol is None:
        refine_tol = config['refine_tol']
    if grid_spec is None:
        grid_spec = GridSpec()
    if curve is None:
        curve = pl_curve(reduction, grid_spec, quad_tol=quad_tol, n_jobs=n_jobs, verbose=verbose)

    grid, pl = curve.grid, curve.pl
    diagnostics = OrderedDict(curve.diagnostics)
    # failed points are skipped; segments join across them
    evaluated = np.nonzero(np.isfinite(pl))[0]
    above = pl[evaluated] > alpha

    if not np.any(above):
        diagnostics['multimodal'] = False
        diagnostics['segments'] = []
        return PlausibilityResult(grid, pl, diagnostics, alpha=alpha)

    edges = np.diff(above.astype(np.int64))
    starts = list(np.nonzero(edges == 1)[0] + 1)
    ends = list(np.nonzero(edges == -1)[0])
    if above[0]:
        starts.insert(0, 0)
    if above[-1]:
        ends.append(len(evaluated) - 1)
    segments = [(int(evaluated[s]), int(evaluated[e])) for s, e in zip(starts, ends)]
    diagnostics['segments'] = segments
    diagnostics['multimodal'] = len(segments) > 1
    if diagnostics['multimodal']:
        logger.warning('Plausibility exceeds alpha={} on {} disjoint segments; reporting their hull'.format(
            alpha, len(segments)))

    first, last = starts[0], ends[-1]
    rho_max = grid_spec.rho_max
    if first == 0:
        lower = float(grid[evaluated[0]])
    else:
        lower = _refine_crossing(reduction, alpha, grid[evaluated[first]], grid[evaluated[first - 1]], refine_tol,
                                 quad_tol, rho_max)
    if last == len(evaluated) - 1:
        upper = float(grid[evaluated[-1]])
    else:
        upper = _refine_crossing(reduction, alpha, grid[evaluated[last]], grid[evaluated[last + 1]], refine_tol,
                                 quad_tol, rho_max)

    return PlausibilityResult(grid, pl, diagnostics, alpha=alpha, lower=lower, upper=upper)
