"""Small quadrature and extrapolation utilities shared by the evaluators."""

from __future__ import annotations

import numpy as np

from .errors import RichardsonError

_GAUSS_CACHE = {}


def gauss_rule(n):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def panel_nodes(edges, order):
    """Composite Gauss-Legendre nodes/weights on consecutive [e_i, e_{i+1}]."""
    x, w = gauss_rule(order)
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
    weights = 0.5 * (b - a) * np.broadcast_to(w, nodes.shape)
    return nodes.ravel(), weights.ravel()


def richardson(values, ratio):
    """Extrapolate a sequence F(h), F(h/2), ... whose error shrinks by
    `ratio` per halving.  Returns (value, error_estimate); raises
    RichardsonError when the correction triangle diverges outright.
    """
    values = [complex(v) for v in values]
    if len(values) == 1:
        return values[0], float("inf")
    triangle = [values]
    fac = ratio
    while len(triangle[-1]) > 1:
        prev = triangle[-1]
        triangle.append([(fac * prev[i + 1] - prev[i]) / (fac - 1.0)
                         for i in range(len(prev) - 1)])
        fac *= ratio
    diag = [row[-1] for row in triangle]
    corrections = [abs(diag[i + 1] - diag[i]) for i in range(len(diag) - 1)]
    value = diag[-1]
    err = corrections[-1]
    if len(corrections) >= 2 and corrections[-1] > 4.0 * corrections[-2] \
            and corrections[-1] > 1e-9 * max(1.0, abs(value)):
        raise RichardsonError(
            f"Richardson triangle diverges: corrections {corrections}",
            triangle=triangle)
    return value, err


def wrap_difference(delta, period):
    """Signed difference folded into (-period/2, period/2]."""
    return delta - period * np.round(delta / period)
