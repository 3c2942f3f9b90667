"""
Utilities for math operations
"""

import numpy as np


def householder_complement(g):
    """ Orthonormal basis of the orthogonal complement of span{g}.

    Uses the elementary reflector H = I - 2 u u^T / (u^T u) with H e_1 = -sign(g_1) g / |g|, so the
    remaining rows of H are orthonormal and orthogonal to g. Deterministic for fixed g.

    Args:
        g: (d,) nonzero vector

    Returns: (d - 1, d) matrix with orthonormal rows

    """
    g = np.asarray(g, dtype=np.float64)
    d = g.shape[0]
    norm = np.linalg.norm(g)
    assert norm > 0, 'Can not complement the zero vector'
    if d == 1:
        return np.zeros((0, 1))
    u = g / norm
    u[0] += 1. if u[0] >= 0 else -1.
    reflector = np.eye(d) - 2. * np.outer(u, u) / np.dot(u, u)
    return reflector[1:]


def cumulative_simpson(y, h):
    """ Composite Simpson's rule accumulated panel by panel.

    Args:
        y: (2m + 1, ...) samples on a uniform grid
        h: grid spacing

    Returns: (m + 1, ...) integral from the first node to every even node, starting at 0

    """
    y = np.asarray(y)
    assert y.shape[0] % 2 == 1 and y.shape[0] >= 3, 'Need an even number of intervals. Got {} nodes'.format(
        y.shape[0])
    panels = h / 3. * (y[0:-2:2] + 4. * y[1:-1:2] + y[2::2])
    out = np.zeros((panels.shape[0] + 1,) + y.shape[1:])
    np.cumsum(panels, axis=0, out=out[1:])
    return out


def monotone_hermite_slopes(x, y, slopes):
    """ Limit exact derivatives so the cubic Hermite interpolant of increasing data stays monotone.

    Fritsch-Carlson: on every interval with secant delta, (a, b) = (d_k, d_{k+1}) / delta must lie in the
    circle of radius 3. Flat intervals force zero slopes at both ends.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = np.maximum(np.asarray(slopes, dtype=np.float64), 0.).copy()
    delta = np.diff(y) / np.diff(x)
    flat = delta <= 0.
    d[:-1][flat] = 0.
    d[1:][flat] = 0.
    safe_delta = np.where(flat, 1., delta)
    a = d[:-1] / safe_delta
    b = d[1:] / safe_delta
    radius = np.hypot(a, b)
    scale = np.where((radius > 3.) & ~flat, 3. / np.where(radius > 0, radius, 1.), 1.)
    d[:-1] *= scale
    d[1:] *= scale
    return d
