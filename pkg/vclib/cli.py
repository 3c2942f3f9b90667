"""
Command line surface: reduce, pl, interval, simulate and check.

Every output echoes the full run configuration (seed and tolerances included). Exit codes: 0 success,
1 usage, 2 data error, 3 numerical failure.
"""

import argparse
import logging
import os
import sys
from collections import OrderedDict
from contextlib import contextmanager

import pandas as pd

import vclib
from vclib.checks import run_checks
from vclib.common import ConfigError, VCError, NumericalError
from vclib.dataset.fixtures import lamb_eigenstructure
from vclib.dataset.utils import load_oneway, load_general, load_eigen, parse_stats, load_reduction, dump_json, \
    dump_csv
from vclib.inference.plausibility import GridSpec, pl_curve, interval
from vclib.model.reduction import EigenReduction, reduce_model
from vclib.simulation.study import SimConfig, run_study, run_grid, DESIGN_PATTERNS, VARIANCE_PAIRS, \
    LAMB_FITTED_VARIANCES

logger = logging.getLogger(__name__)

COMMANDS = ('reduce', 'pl', 'interval', 'simulate', 'check')
INPUT_COMMANDS = ('reduce', 'pl', 'interval')


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_common(parser):
    parser.add_argument('--quad_tol', '--quad-tol', type=float, default=None)
    parser.add_argument('--cluster_tol', '--cluster-tol', type=float, default=None)
    parser.add_argument('--rho_max', '--rho-max', type=float, default=None)
    parser.add_argument('--workers', type=int, default=None)
    parser.add_argument('--output', type=str, default='-', help='Output path. - writes to stdout')
    parser.add_argument('--format', type=str, choices=['json', 'csv'], default=None)
    parser.add_argument('-v', '--verbose', action='count', default=0)


def _add_input(parser):
    parser.add_argument('--design', type=str, choices=['oneway', 'general', 'eigen'], default='oneway')
    parser.add_argument('--data', type=str, help='one-way CSV with header group,value')
    parser.add_argument('--y', type=str)
    parser.add_argument('--x', type=str)
    parser.add_argument('--z', type=str)
    parser.add_argument('--a', type=str, default='identity')
    parser.add_argument('--eigen', type=str, help='lambda:mult pairs, a file of them or a fixture name')
    parser.add_argument('--stats', type=str, help='comma-separated sufficient statistics S_1, ..., S_L')
    parser.add_argument('--reduction', type=str, help='JSON written by the reduce command')


def make_parser():
    parser = _Parser(prog='im_heritability', description='Plausibility inference on heritability in mixed models')
    subparsers = parser.add_subparsers(dest='command')

    reduce_parser = subparsers.add_parser('reduce', help='eigenstructure and sufficient statistics')
    _add_input(reduce_parser)
    _add_common(reduce_parser)

    pl_parser = subparsers.add_parser('pl', help='plausibility curve on a grid')
    _add_input(pl_parser)
    _add_common(pl_parser)
    pl_parser.add_argument('--grid', type=str, default=None, help='rho_min:rho_max:points')
    pl_parser.add_argument('--psi', action='store_true', help='add the variance ratio column')

    interval_parser = subparsers.add_parser('interval', help='plausibility interval')
    _add_input(interval_parser)
    _add_common(interval_parser)
    interval_parser.add_argument('--alpha', type=float, default=0.05)
    interval_parser.add_argument('--grid', type=str, default=None)
    interval_parser.add_argument('--refine_tol', '--refine-tol', type=float, default=None)

    simulate_parser = subparsers.add_parser('simulate', help='coverage study')
    _add_common(simulate_parser)
    simulate_parser.add_argument('--pattern', type=str, help='one-way group sizes, e.g. 2,4,4,5')
    simulate_parser.add_argument('--eigen', type=str)
    simulate_parser.add_argument('--sigma_a2', '--sigma-a2', type=float, default=1.)
    simulate_parser.add_argument('--sigma_e2', '--sigma-e2', type=float, default=1.)
    simulate_parser.add_argument('--reps', type=int, default=1000)
    simulate_parser.add_argument('--alpha', type=float, default=0.05)
    simulate_parser.add_argument('--seed', type=int, default=0)
    simulate_parser.add_argument('--grid', type=str, default=None)
    simulate_parser.add_argument('--refine_tol', '--refine-tol', type=float, default=None)
    simulate_parser.add_argument('--cells', type=str, choices=['all'], default=None,
                                 help='every design pattern and variance pair of the reference grid')
    simulate_parser.add_argument('--preset', type=str, choices=['lamb'], default=None,
                                 help='lamb eigenstructure at its fitted variance components')
    simulate_parser.add_argument('--timing', action='store_true', help='keep per-replication runtimes')

    check_parser = subparsers.add_parser('check', help='oracle diagnostics')
    _add_common(check_parser)
    check_parser.add_argument('--seed', type=int, default=0)
    check_parser.add_argument('--draws', type=int, default=20000)
    check_parser.add_argument('--instances', type=int, default=20)
    check_parser.add_argument('--reps', type=int, default=200)
    return parser


class RunConfig(object):
    """ Validated command options. to_dict() is echoed into every output. """

    def __init__(self, args):
        self.args = OrderedDict((key, value) for key, value in sorted(vars(args).items()) if key != 'verbose')
        self.command = args.command
        self.verbose = getattr(args, 'verbose', 0)
        self._validate()

    def __getattr__(self, item):
        try:
            return self.__dict__['args'][item]
        except KeyError:
            raise AttributeError(item)

    def _validate(self):
        if self.command not in COMMANDS:
            raise ConfigError('Choose a command from {}'.format(', '.join(COMMANDS)))
        rho_max = self.args.get('rho_max')
        if rho_max is not None and not 0. < rho_max < 1.:
            raise ConfigError('rho_max must lie in (0, 1). Got {}'.format(rho_max))
        quad_tol = self.args.get('quad_tol')
        if quad_tol is not None and not 0. < quad_tol <= 1e-4:
            raise ConfigError('quad_tol must lie in (0, 1e-4]. Got {}'.format(quad_tol))
        alpha = self.args.get('alpha')
        if alpha is not None and not 0. < alpha < 1.:
            raise ConfigError('alpha must lie in (0, 1). Got {}'.format(alpha))
        workers = self.args.get('workers')
        if workers is not None and workers < 1:
            raise ConfigError('workers must be at least 1. Got {}'.format(workers))
        if self.command in INPUT_COMMANDS:
            self._validate_input()

    def _validate_input(self):
        if self.reduction is not None:
            paths = [self.reduction]
        elif self.design == 'oneway':
            paths = [self.data]
        elif self.design == 'general':
            paths = [self.y, self.x, self.z] + ([] if self.a == 'identity' else [self.a])
        else:
            if self.eigen is None or self.stats is None:
                raise ConfigError('--design eigen needs --eigen and --stats')
            paths = []
        for path in paths:
            if path is None:
                raise ConfigError('--design {} is missing an input path'.format(self.design))
            if not os.path.isfile(path):
                raise ConfigError('No such file: {}'.format(path))

    def to_dict(self):
        out = OrderedDict(self.args)
        for key in ('quad_tol', 'cluster_tol', 'rho_max', 'grid_points', 'study_grid_points', 'refine_tol',
                    'num_threads'):
            if out.get(key) is None:
                out[key] = vclib.config[key]
        out['version'] = vclib.__version__
        return out


def load_input(run_config):
    if run_config.reduction is not None:
        return load_reduction(run_config.reduction)
    if run_config.design == 'eigen':
        lambdas, mults = load_eigen(run_config.eigen)
        return EigenReduction.from_stats(lambdas, mults, parse_stats(run_config.stats))
    if run_config.design == 'oneway':
        model = load_oneway(run_config.data)
    else:
        model = load_general(run_config.y, run_config.x, run_config.z, run_config.a)
    return reduce_model(model, cluster_tol=run_config.cluster_tol)


def _grid_spec(run_config):
    if run_config.grid is None:
        return GridSpec()
    return GridSpec.parse(run_config.grid)


def _workers(run_config):
    return vclib.config['num_threads'] if run_config.workers is None else run_config.workers


@contextmanager
def _open_output(path):
    if path == '-':
        yield sys.stdout
    else:
        with open(path, 'w') as f:
            yield f


def reduce_command(run_config, f):
    reduction = load_input(run_config)
    logger.info('Reduced to {}'.format(reduction))
    if run_config.format == 'csv':
        df = pd.DataFrame(OrderedDict([('lambda', reduction.lambdas), ('mult', reduction.mults),
                                       ('S', reduction.S)]))
        dump_csv(df, f, echo=run_config.to_dict())
    else:
        dump_json(OrderedDict([('config', run_config.to_dict()), ('reduction', reduction.to_dict())]), f)
    return 0


def pl_command(run_config, f):
    reduction = load_input(run_config)
    curve = pl_curve(reduction, _grid_spec(run_config), quad_tol=run_config.quad_tol,
                     n_jobs=_workers(run_config), verbose=run_config.verbose > 0)
    if run_config.format == 'json':
        df = curve.to_frame(psi=run_config.psi)
        out = OrderedDict([('config', run_config.to_dict())])
        out.update((column, df[column].values) for column in df.columns)
        out['status'] = curve.diagnostics['status']
        dump_json(out, f)
    else:
        dump_csv(curve.to_frame(psi=run_config.psi), f, echo=run_config.to_dict())
    return 0


def interval_command(run_config, f):
    reduction = load_input(run_config)
    result = interval(reduction, run_config.alpha, grid_spec=_grid_spec(run_config),
                      refine_tol=run_config.refine_tol, quad_tol=run_config.quad_tol, n_jobs=_workers(run_config))
    summary = result.interval_dict()
    if run_config.format == 'csv':
        dump_csv(pd.DataFrame([summary]), f, echo=run_config.to_dict())
    else:
        out = OrderedDict([('config', run_config.to_dict())])
        out.update(summary)
        out['num_failures'] = result.diagnostics['num_failures']
        out['segments'] = result.diagnostics['segments']
        dump_json(out, f)
    return 0


def _sim_kwargs(run_config):
    # studies scan config['study_grid_points'] points unless --grid is given
    grid_spec = None if run_config.grid is None else GridSpec.parse(run_config.grid)
    return dict(reps=run_config.reps, alpha=run_config.alpha, seed=run_config.seed,
                parallelism=run_config.workers, grid_spec=grid_spec, quad_tol=run_config.quad_tol,
                refine_tol=run_config.refine_tol, cluster_tol=run_config.cluster_tol)


def _pattern(text):
    try:
        return tuple(int(token) for token in text.split(','))
    except ValueError:
        raise ConfigError('Pattern must be comma-separated group sizes. Got {!r}'.format(text))


def simulate_command(run_config, f):
    kwargs = _sim_kwargs(run_config)
    if run_config.cells == 'all':
        results = run_grid(DESIGN_PATTERNS, VARIANCE_PAIRS, verbose=True, **kwargs)
    elif run_config.preset == 'lamb':
        lambdas, mults = lamb_eigenstructure()
        sigma_a2, sigma_e2 = LAMB_FITTED_VARIANCES
        results = [run_study(SimConfig(sigma_a2, sigma_e2, lambdas=lambdas, mults=mults, **kwargs), verbose=True)]
    elif run_config.pattern is not None:
        sim_config = SimConfig(run_config.sigma_a2, run_config.sigma_e2, pattern=_pattern(run_config.pattern),
                               **kwargs)
        results = [run_study(sim_config, verbose=True)]
    elif run_config.eigen is not None:
        lambdas, mults = load_eigen(run_config.eigen)
        sim_config = SimConfig(run_config.sigma_a2, run_config.sigma_e2, lambdas=lambdas, mults=mults, **kwargs)
        results = [run_study(sim_config, verbose=True)]
    else:
        raise ConfigError('simulate needs --pattern, --eigen, --preset or --cells')

    if run_config.format == 'csv':
        rows = []
        for result in results:
            row = OrderedDict(result.config.to_dict())
            row.pop('grid')
            row.update((key, value) for key, value in result.to_dict().items() if key not in ('config', 'records'))
            rows.append(row)
        df = pd.DataFrame(rows)
        for column in ('pattern', 'lambdas', 'mults'):
            df[column] = df[column].map(lambda value: '' if value is None else ' '.join(str(x) for x in value))
        dump_csv(df, f, echo=run_config.to_dict())
    else:
        studies = [result.to_dict(include_timing=run_config.timing) for result in results]
        dump_json(OrderedDict([('config', run_config.to_dict()), ('studies', studies)]), f)
    return 0


def check_command(run_config, f):
    results = run_checks(seed=run_config.seed, num_draws=run_config.draws, num_instances=run_config.instances,
                         num_reps=run_config.reps, quad_tol=run_config.quad_tol)
    df = pd.DataFrame([result._asdict() for result in results])
    if run_config.format == 'csv':
        dump_csv(df, f, echo=run_config.to_dict())
    else:
        dump_json(OrderedDict([('config', run_config.to_dict()), ('passed', bool(df['passed'].all())),
                               ('checks', [result._asdict() for result in results])]), f)
    if not df['passed'].all():
        failed = ', '.join(df.loc[~df['passed'], 'name'])
        raise NumericalError('Oracle checks failed: {}'.format(failed))
    return 0


HANDLERS = {
    'reduce': reduce_command,
    'pl': pl_command,
    'interval': interval_command,
    'simulate': simulate_command,
    'check': check_command,
}


def _setup_logging(verbose):
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logging.getLogger('vclib').setLevel(level)


def run_cli(argv=None):
    """ Parse argv, run the command and return its exit code. """
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        sys.stderr.write('{}: error: {}\n'.format(parser.prog, e))
        return e.exit_code
    except SystemExit as e:
        return 0 if e.code is None else e.code

    _setup_logging(getattr(args, 'verbose', 0))
    rho_max = vclib.config['rho_max']
    try:
        run_config = RunConfig(args)
        if run_config.rho_max is not None:
            vclib.config['rho_max'] = run_config.rho_max
        if run_config.format is None:
            run_config.args['format'] = 'csv' if run_config.command == 'pl' else 'json'
        logger.info('Running {} with {}'.format(run_config.command, dict(run_config.args)))
        with _open_output(run_config.output) as f:
            return HANDLERS[run_config.command](run_config, f)
    except VCError as e:
        logger.error('{}: {}'.format(type(e).__name__, e))
        sys.stderr.write('{}: {}\n'.format(type(e).__name__, e))
        return e.exit_code
    finally:
        vclib.config['rho_max'] = rho_max
