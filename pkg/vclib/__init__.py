"""
When import vclib, it will make config directory .vclib under home folder.
It will create vclib.json if it doesn't exist. It contains
{
    'quad_tol': 1e-9,
    'cluster_tol': 1e-8,
    'rho_max': 0.9999,
    'grid_points': 400,
    'study_grid_points': 25,
    'refine_tol': 1e-6,
    'num_threads': 1
}
The path can be moved with VCLIB_CONFIG and num_threads can be overridden with VC_IM_THREADS.
"""

import errno
import json
import logging
import os

__version__ = '0.1.0'

logger = logging.getLogger(__name__)

default_config = {
    'quad_tol': 1e-9,
    'cluster_tol': 1e-8,
    'rho_max': 1. - 1e-4,
    'grid_points': 400,
    'study_grid_points': 25,
    'refine_tol': 1e-6,
    'num_threads': 1,
}

config_path = os.path.expanduser(os.environ.get('VCLIB_CONFIG', '~/.vclib/vclib.json'))


def _load_config(path):
    try:
        with open(path, 'r') as f:
            loaded = json.load(f)
    except (OSError, ValueError):
        loaded = None

    if loaded is None:
        try:
            if not os.path.exists(os.path.dirname(path)):
                try:
                    os.makedirs(os.path.dirname(path))
                except OSError as exc:  # Guard against race condition
                    if exc.errno != errno.EEXIST:
                        raise
            with open(path, 'w') as f:
                json.dump(default_config, f, indent=4)
        except OSError:
            logger.debug('Config path {} is not writable. Using defaults.'.format(path))
        loaded = {}

    out = dict(default_config)
    out.update({key: value for key, value in loaded.items() if key in default_config})
    return out


config = _load_config(config_path)

if 'VC_IM_THREADS' in os.environ:
    try:
        config['num_threads'] = int(os.environ['VC_IM_THREADS'])
    except ValueError:
        logger.warning('Ignoring VC_IM_THREADS={!r}, expected an integer'.format(os.environ['VC_IM_THREADS']))

from .model import MixedModelSpec, EigenReduction, reduce_model
from .inference import pl_at, pl_curve, interval, GridSpec, PlausibilityResult
