"""
Functions to load mixed-model data and eigenstructures, and to write results.

File formats:
    one-way CSV: header `group,value`, one row per observation; group labels are arbitrary strings.
    general: headerless numeric CSV matrices y (n x 1), X (n x p), Z (n x a), A (a x a).
    eigenstructure: comma-separated `lambda:mult` pairs, e.g. `4.55:1,1:1,0:10`, inline or in a text file
        (newlines act as commas), or a fixture name (`assay`, `lamb`).
    reduction JSON: output of the `reduce` command, {"reduction": {"lambdas", "mults", "S", ...}, "config": ...}.
"""

import json
import math
import os
from collections import OrderedDict

import numpy as np
import pandas as pd

from vclib.common import DimensionError, ParseError, SchemaError, OrderError
from vclib.dataset.fixtures import FIXTURES
from vclib.model.reduction import MixedModelSpec, EigenReduction, validate_eigenstructure

FLOAT_FORMAT = '%.17g'


def _drop_blank_lines(df, header_lines):
    """ Remove empty rows, returning the frame and the file line number of every remaining row. """
    lines = np.arange(len(df)) + 1 + header_lines
    keep = df.notna().any(axis=1).values
    return df[keep].reset_index(drop=True), lines[keep]


def _coerce_numeric(df, path, lines):
    """ Convert every column to float, citing the first offending line of the file. """
    numeric = df.apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna() & df.notna() | df.isna()
    if bad.values.any():
        row = int(np.nonzero(bad.values.any(axis=1))[0][0])
        col = int(np.nonzero(bad.values[row])[0][0])
        raise ParseError('{}: non-numeric value {!r}'.format(path, df.iat[row, col]), line=int(lines[row]))
    return numeric.values.astype(np.float64)


def load_oneway(path):
    try:
        df = pd.read_csv(path, dtype=str, skipinitialspace=True, skip_blank_lines=False)
    except pd.errors.ParserError as e:
        raise ParseError('{}: {}'.format(path, e))
    except pd.errors.EmptyDataError:
        raise SchemaError('{} is empty'.format(path))
    df.columns = [str(c).strip() for c in df.columns]

    missing = [c for c in ('group', 'value') if c not in df.columns]
    if missing:
        raise SchemaError('{} is missing column(s) {}'.format(path, ', '.join(missing)))
    df, lines = _drop_blank_lines(df, header_lines=1)
    if len(df) < 3:
        raise SchemaError('{} needs at least 3 rows. Got {}'.format(path, len(df)))

    y = _coerce_numeric(df[['value']], path, lines).ravel()
    if df['group'].isna().any():
        row = int(np.nonzero(df['group'].isna().values)[0][0])
        raise ParseError('{}: missing group label'.format(path), line=int(lines[row]))
    codes, labels = pd.factorize(df['group'].str.strip())
    if len(labels) < 2:
        raise SchemaError('{} has a single group; heritability is not identifiable'.format(path))

    n = len(y)
    X = np.ones((n, 1))
    Z = np.zeros((n, len(labels)))
    Z[np.arange(n), codes] = 1.
    return MixedModelSpec(y, X, Z, np.eye(len(labels)))


def _read_matrix(path):
    try:
        df = pd.read_csv(path, header=None, dtype=str, skipinitialspace=True, skip_blank_lines=False)
    except pd.errors.ParserError as e:
        raise ParseError('{}: {}'.format(path, e))
    except pd.errors.EmptyDataError:
        raise SchemaError('{} is empty'.format(path))
    df, lines = _drop_blank_lines(df, header_lines=0)
    if len(df) == 0:
        raise SchemaError('{} is empty'.format(path))
    return _coerce_numeric(df, path, lines)


def load_general(y_path, x_path, z_path, a_path='identity'):
    y = _read_matrix(y_path)
    X = _read_matrix(x_path)
    Z = _read_matrix(z_path)
    if y.ndim == 2 and y.shape[1] != 1:
        raise DimensionError('y ({}) must have a single column. Got {}'.format(y_path, y.shape[1]))
    y = y.ravel()
    if X.shape[0] != len(y):
        raise DimensionError('X ({}) has {} rows but y ({}) has {}'.format(x_path, X.shape[0], y_path, len(y)))
    if Z.shape[0] != len(y):
        raise DimensionError('Z ({}) has {} rows but y ({}) has {}'.format(z_path, Z.shape[0], y_path, len(y)))

    if a_path is None or a_path == 'identity':
        A = np.eye(Z.shape[1])
    else:
        A = _read_matrix(a_path)
        if A.shape != (Z.shape[1], Z.shape[1]):
            raise DimensionError('A ({}) is {}x{} but Z ({}) has {} columns'.format(
                a_path, A.shape[0], A.shape[1], z_path, Z.shape[1]))
    return MixedModelSpec(y, X, Z, A)


def parse_eigen(text):
    lambdas, mults = [], []
    tokens = [token.strip() for token in text.replace('\n', ',').split(',') if token.strip()]
    if len(tokens) == 0:
        raise ParseError('Empty eigenstructure')
    for position, token in enumerate(tokens):
        parts = token.split(':')
        if len(parts) != 2:
            raise ParseError('Eigen pair {} must look like lambda:mult. Got {!r}'.format(position + 1, token))
        try:
            value, mult = float(parts[0]), float(parts[1])
        except ValueError:
            raise ParseError('Eigen pair {} is not numeric: {!r}'.format(position + 1, token))
        if mult != round(mult) or mult < 1:
            raise ParseError('Multiplicity of pair {} must be a positive integer. Got {!r}'.format(position + 1, token))
        lambdas.append(value)
        mults.append(int(mult))

    lambdas, mults = np.array(lambdas), np.array(mults, dtype=np.int64)
    if np.any(np.diff(lambdas) >= 0) or lambdas[-1] < 0 or len(lambdas) < 2:
        raise OrderError('Need at least two strictly decreasing nonnegative eigenvalues. Got {}'.format(
            lambdas.tolist()))
    validate_eigenstructure(lambdas, mults)
    return lambdas, mults


def load_eigen(spec):
    """ Eigenstructure from a fixture name, a file path or an inline `lambda:mult,...` string. """
    if spec in FIXTURES:
        return FIXTURES[spec]()
    if os.path.isfile(spec):
        with open(spec, 'r') as f:
            return parse_eigen(f.read())
    return parse_eigen(spec)


def parse_stats(text):
    try:
        S = np.array([float(token) for token in text.split(',') if token.strip()])
    except ValueError:
        raise ParseError('Statistics must be comma-separated numbers. Got {!r}'.format(text))
    return S


def load_reduction(path):
    try:
        with open(path, 'r') as f:
            d = json.load(f)
    except ValueError as e:
        raise ParseError('{}: {}'.format(path, e))
    if 'reduction' not in d:
        raise SchemaError('{} has no "reduction" entry'.format(path))
    return EigenReduction.from_dict(d['reduction'])


def to_jsonable(obj):
    """ Plain JSON types; numpy scalars and arrays are unwrapped and NaN/inf become null. """
    if isinstance(obj, dict):
        return OrderedDict((str(key), to_jsonable(value)) for key, value in obj.items())
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def dump_json(obj, f):
    # repr of a float is its shortest exact round-trip form
    json.dump(to_jsonable(obj), f, indent=2, allow_nan=False)
    f.write('\n')


def dump_csv(df, f, echo=None):
    """ CSV with `# key: value` comment lines echoing the run configuration. """
    if echo:
        for key, value in echo.items():
            f.write('# {}: {}\n'.format(key, json.dumps(to_jsonable(value))))
    df.to_csv(f, index=False, float_format=FLOAT_FORMAT)


def read_csv(path):
    return pd.read_csv(path, comment='#')
