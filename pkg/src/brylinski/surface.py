"""Parametric surfaces in R^3 with derivative access up to total order 4.

A Chart maps a parameter rectangle into R^3 and can return every partial
derivative d^{i+j} q / du^i dv^j with i + j <= 4, vectorized over parameter
arrays.  Built-in surfaces (sphere, ellipsoid, torus, polynomial graph
patch) supply these derivatives analytically; user charts given only by a
position function fall back to fourth-order central differences with the
documented accuracy loss.

Quadrature grids are tensor products: Gauss-Legendre on non-periodic axes,
midpoint/trapezoid on periodic ones (spectrally accurate for smooth
periodic integrands), and Gauss in cos(theta) on polar axes of closed
sphere-like charts so that nodes stay clear of the coordinate poles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ImmersionError, SpecError

_SIN_CYCLE = (np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x))


def _dsin(k, x):
    """k-th derivative of sin at x."""
    return _SIN_CYCLE[k % 4](x)


def _dcos(k, x):
    """k-th derivative of cos at x."""
    return _SIN_CYCLE[(k + 1) % 4](x)


DERIV_ORDERS = [(i, j) for i in range(5) for j in range(5) if i + j <= 4]


@dataclass(frozen=True)
class Chart:
    """One parametric patch.

    derivs(U, V, order) returns {(i, j): array of shape broadcast + (3,)}
    for all i + j <= order.  axis_rule entries: 'gauss', 'cos' (Gauss in
    cos theta for a [0, pi] polar axis), or 'periodic'.
    """

    name: str
    domain: tuple
    periodic: tuple
    derivs: Callable
    node_hint: tuple = (12, 12)
    axis_rule: tuple = None
    metric_scale_hint: tuple = None

    def position(self, U, V):
        return self.derivs(U, V, order=0)[(0, 0)]

    def rules(self):
        if self.axis_rule is not None:
            return self.axis_rule
        return tuple("periodic" if p else "gauss" for p in self.periodic)

    def axis_lengths(self):
        (a1, b1), (a2, b2) = self.domain
        return (b1 - a1, b2 - a2)

    def metric_scales(self):
        """Rough max of sqrt(E), sqrt(G) over the chart (for grid sizing)."""
        if self.metric_scale_hint is not None:
            return self.metric_scale_hint
        (a1, b1), (a2, b2) = self.domain
        uu = np.linspace(a1 + 1e-3 * (b1 - a1), b1 - 1e-3 * (b1 - a1), 17)
        vv = np.linspace(a2 + 1e-3 * (b2 - a2), b2 - 1e-3 * (b2 - a2), 17)
        U, V = np.meshgrid(uu, vv, indexing="ij")
        d = self.derivs(U, V, order=1)
        su = np.sqrt((d[(1, 0)] ** 2).sum(-1)).max()
        sv = np.sqrt((d[(0, 1)] ** 2).sum(-1)).max()
        return (float(su), float(sv))


@dataclass(frozen=True)
class Surface:
    """Charts covering M up to measure zero, plus bookkeeping."""

    charts: tuple
    label: str
    closed: bool

    def chart(self, k=0):
        return self.charts[k]


@dataclass(frozen=True)
class FundamentalForms:
    """First/second fundamental forms and the coordinate unit normal."""

    I: np.ndarray
    II: np.ndarray
    normal: np.ndarray

    def flipped(self):
        """Forms for the reversed normal: I fixed, II negated exactly."""
        return FundamentalForms(self.I, -self.II, -self.normal)


# ---------------------------------------------------------------------------
# built-in surfaces


def _sphere_like_derivs(a, b, c, r_hint):
    """Derivative evaluator for (a sin t cos p, b sin t sin p, c cos t)."""

    def derivs(U, V, order=4):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        shape = np.broadcast(U, V).shape
        out = {}
        for (i, j) in DERIV_ORDERS:
            if i + j > order:
                continue
            arr = np.empty(shape + (3,))
            arr[..., 0] = a * _dsin(i, U) * _dcos(j, V)
            arr[..., 1] = b * _dsin(i, U) * _dsin(j, V)
            arr[..., 2] = c * _dcos(i, U) if j == 0 else 0.0
            out[(i, j)] = arr
        return out

    return derivs


def sphere(r):
    """Round sphere of radius r, chart (theta, phi) in [0, pi] x [0, 2 pi]."""
    if r <= 0:
        raise SpecError("sphere radius must be positive")
    chart = Chart(
        name="sphere",
        domain=((0.0, math.pi), (0.0, 2.0 * math.pi)),
        periodic=(False, True),
        derivs=_sphere_like_derivs(r, r, r, r),
        node_hint=(12, 24),
        axis_rule=("cos", "periodic"),
        metric_scale_hint=(r, r),
    )
    return Surface(charts=(chart,), label=f"sphere(r={r:g})", closed=True)


def ellipsoid(a, b, c):
    """Ellipsoid with semi-axes a, b, c in the same polar chart as the sphere."""
    if min(a, b, c) <= 0:
        raise SpecError("ellipsoid semi-axes must be positive")
    chart = Chart(
        name="ellipsoid",
        domain=((0.0, math.pi), (0.0, 2.0 * math.pi)),
        periodic=(False, True),
        derivs=_sphere_like_derivs(a, b, c, max(a, b, c)),
        node_hint=(12, 24),
        axis_rule=("cos", "periodic"),
        metric_scale_hint=(max(a, b, c), max(a, b)),
    )
    return Surface(charts=(chart,), label=f"ellipsoid(a={a:g},b={b:g},c={c:g})", closed=True)


def torus(R, rho):
    """Torus of revolution: tube radius rho around a circle of radius R."""
    if not (R > rho > 0):
        raise SpecError("torus requires R > rho > 0")

    def derivs(U, V, order=4):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        shape = np.broadcast(U, V).shape
        out = {}
        for (i, j) in DERIV_ORDERS:
            if i + j > order:
                continue
            g = (R + rho * np.cos(U)) if i == 0 else rho * _dcos(i, U)
            arr = np.empty(shape + (3,))
            arr[..., 0] = g * _dcos(j, V)
            arr[..., 1] = g * _dsin(j, V)
            arr[..., 2] = rho * _dsin(i, U) if j == 0 else 0.0
            out[(i, j)] = arr
        return out

    chart = Chart(
        name="torus",
        domain=((0.0, 2.0 * math.pi), (0.0, 2.0 * math.pi)),
        periodic=(True, True),
        derivs=derivs,
        node_hint=(16, 32),
        metric_scale_hint=(rho, R + rho),
    )
    return Surface(charts=(chart,), label=f"torus(R={R:g},rho={rho:g})", closed=True)


def _poly_derivative_tables(coeffs):
    """All derivative coefficient vectors of a degree-4 bivariate polynomial."""
    from .series import MONOMIALS, INDEX, NTERMS

    tables = {}
    for (di, dj) in DERIV_ORDERS:
        vec = np.zeros(NTERMS)
        for k, (i, j) in enumerate(MONOMIALS):
            if coeffs[k] == 0.0 or i < di or j < dj:
                continue
            fac = (math.factorial(i) // math.factorial(i - di)) * (
                math.factorial(j) // math.factorial(j - dj))
            vec[INDEX[(i - di, j - dj)]] += fac * coeffs[k]
        tables[(di, dj)] = vec
    return tables


def _poly_eval(vec, U, V):
    from .series import MONOMIALS

    out = np.zeros(np.broadcast(U, V).shape)
    for k, (i, j) in enumerate(MONOMIALS):
        if vec[k] != 0.0:
            out = out + vec[k] * U**i * V**j
    return out


def graph_patch(coeffs, extent):
    """Graph z = f(x, y) of a polynomial of total degree <= 4 over the
    square [-extent, extent]^2.

    `coeffs` is either a {(i, j): value} dict or a 15-vector in the
    graded-lex order of the series module.
    """
    from .series import TruncatedSeries2

    if extent <= 0:
        raise SpecError("graph_patch extent must be positive")
    if isinstance(coeffs, dict):
        poly = TruncatedSeries2.from_dict(coeffs)
        if any(i + j > 4 for (i, j) in coeffs):
            raise SpecError("graph polynomial must have total degree <= 4")
    else:
        poly = TruncatedSeries2(coeffs)
    tables = _poly_derivative_tables(poly.c)

    def derivs(U, V, order=4):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        shape = np.broadcast(U, V).shape
        out = {}
        for (i, j) in DERIV_ORDERS:
            if i + j > order:
                continue
            arr = np.zeros(shape + (3,))
            if (i, j) == (0, 0):
                arr[..., 0] = U
                arr[..., 1] = V
            elif (i, j) == (1, 0):
                arr[..., 0] = 1.0
            elif (i, j) == (0, 1):
                arr[..., 1] = 1.0
            arr[..., 2] = _poly_eval(tables[(i, j)], U, V)
            out[(i, j)] = arr
        return out

    chart = Chart(
        name="graph",
        domain=((-extent, extent), (-extent, extent)),
        periodic=(False, False),
        derivs=derivs,
        node_hint=(12, 12),
    )
    return Surface(charts=(chart,), label=f"graph_patch(extent={extent:g})", closed=False)


_BUILTINS = {
    "sphere": (sphere, ("r",)),
    "ellipsoid": (ellipsoid, ("a", "b", "c")),
    "torus": (torus, ("R", "rho")),
}


def make_builtin(kind, **params):
    """Factory by name; graph patches take coeffs= and extent=."""
    if kind == "graph":
        return graph_patch(params.pop("coeffs"), params.pop("extent"))
    if kind not in _BUILTINS:
        raise SpecError(f"unknown surface kind '{kind}'")
    fn, names = _BUILTINS[kind]
    missing = [n for n in names if n not in params]
    if missing:
        raise SpecError(f"surface kind '{kind}' missing parameter(s): {', '.join(missing)}")
    extra = [n for n in params if n not in names]
    if extra:
        raise SpecError(f"surface kind '{kind}' got unknown parameter(s): {', '.join(extra)}")
    return fn(**{n: params[n] for n in names})


# ---------------------------------------------------------------------------
# forms and area


def _forms_arrays(chart, U, V):
    d = chart.derivs(U, V, order=2)
    xu, xv = d[(1, 0)], d[(0, 1)]
    E = (xu * xu).sum(-1)
    F = (xu * xv).sum(-1)
    G = (xv * xv).sum(-1)
    det = E * G - F * F
    scale = np.maximum(E, G)
    if np.any(det <= 1e-24 * scale * scale):
        raise ImmersionError("degenerate tangent frame (immersion failure)")
    n = np.cross(xu, xv)
    n = n / np.sqrt(det)[..., None]
    L = (d[(2, 0)] * n).sum(-1)
    M = (d[(1, 1)] * n).sum(-1)
    N = (d[(0, 2)] * n).sum(-1)
    return E, F, G, L, M, N, n


def fundamental_forms(chart, p):
    """First and second fundamental forms at parameter point p = (u, v).

    The normal is the normalized cross product of the coordinate tangents;
    it is a convention, not an "outward" direction.
    """
    u, v = p
    E, F, G, L, M, N, n = _forms_arrays(chart, float(u), float(v))
    I = np.array([[E, F], [F, G]])
    II = np.array([[L, M], [M, N]])
    return FundamentalForms(I, II, n)


def area_element(chart, p):
    """Area density sqrt(E G - F^2) at p (length^2 per parameter^2)."""
    u, v = p
    d = chart.derivs(float(u), float(v), order=1)
    xu, xv = d[(1, 0)], d[(0, 1)]
    E = (xu * xu).sum(-1)
    F = (xu * xv).sum(-1)
    G = (xv * xv).sum(-1)
    det = E * G - F * F
    if det <= 1e-24 * max(E, G) ** 2:
        raise ImmersionError("zero area density (immersion failure)")
    return float(np.sqrt(det))


def principal_curvatures(chart, U, V):
    """Vectorized principal curvatures (k1 >= k2) w.r.t. the coordinate normal."""
    E, F, G, L, M, N, _ = _forms_arrays(chart, U, V)
    det = E * G - F * F
    K = (L * N - M * M) / det
    H = (E * N - 2.0 * F * M + G * L) / (2.0 * det)
    disc = np.sqrt(np.maximum(H * H - K, 0.0))
    return H + disc, H - disc


# ---------------------------------------------------------------------------
# quadrature


@dataclass
class ChartQuadrature:
    """Tensor grid on one chart; weights include the area element."""

    chart_id: int
    chart: Chart
    points: np.ndarray      # (N, 2)
    weights: np.ndarray     # (N,)
    positions: np.ndarray = None  # (N, 3), filled on demand

    def with_positions(self):
        if self.positions is None:
            self.positions = self.chart.position(self.points[:, 0], self.points[:, 1])
        return self


def _axis_nodes(rule, a, b, n):
    if rule == "periodic":
        h = (b - a) / n
        t = a + h * (np.arange(n) + 0.5)
        w = np.full(n, h)
    elif rule == "gauss":
        x, w = np.polynomial.legendre.leggauss(n)
        t = 0.5 * (a + b) + 0.5 * (b - a) * x
        w = 0.5 * (b - a) * w
    elif rule == "cos":
        # Gauss in cos(theta) on [0, pi]: spectrally accurate for smooth
        # integrands against sin(theta) d(theta), nodes clear of the poles
        x, w = np.polynomial.legendre.leggauss(n)
        t = np.arccos(x[::-1])
        w = w[::-1] / np.sin(t)
    else:
        raise SpecError(f"unknown axis rule '{rule}'")
    return t, w


def chart_grid(chart, chart_id, counts):
    """Tensor grid with given per-axis node counts; weights include area."""
    (a1, b1), (a2, b2) = chart.domain
    r1, r2 = chart.rules()
    t1, w1 = _axis_nodes(r1, a1, b1, counts[0])
    t2, w2 = _axis_nodes(r2, a2, b2, counts[1])
    U, V = np.meshgrid(t1, t2, indexing="ij")
    W = np.outer(w1, w2)
    d = chart.derivs(U, V, order=1)
    xu, xv = d[(1, 0)], d[(0, 1)]
    dens = np.sqrt((xu * xu).sum(-1) * (xv * xv).sum(-1) - (xu * xv).sum(-1) ** 2)
    pts = np.stack([U.ravel(), V.ravel()], axis=1)
    return ChartQuadrature(chart_id, chart, pts, (W * dens).ravel())


def quadrature_nodes(surface, level):
    """Quadrature grids for all charts; node count grows geometrically with level."""
    if level < 0:
        raise SpecError("quadrature level must be >= 0")
    grids = []
    for k, ch in enumerate(surface.charts):
        counts = (ch.node_hint[0] * 2**level, ch.node_hint[1] * 2**level)
        grids.append(chart_grid(ch, k, counts))
    return grids


def quadrature_for_spacing(surface, spacing, max_nodes=6_000_000):
    """Grids whose node spacing (in surface length) is at most `spacing`.

    Returns (grids, achieved_spacing); the spacing is relaxed if the node
    budget would be exceeded.
    """
    while True:
        grids = []
        total = 0
        for k, ch in enumerate(surface.charts):
            s1, s2 = ch.metric_scales()
            L1, L2 = ch.axis_lengths()
            n1 = max(ch.node_hint[0], int(math.ceil(s1 * L1 / spacing)))
            n2 = max(ch.node_hint[1], int(math.ceil(s2 * L2 / spacing)))
            total += n1 * n2
            grids.append((ch, k, (n1, n2)))
        if total <= max_nodes:
            return [chart_grid(ch, k, c) for ch, k, c in grids], spacing
        spacing *= 1.5


def surface_area(surface, level):
    return float(sum(g.weights.sum() for g in quadrature_nodes(surface, level)))


# ---------------------------------------------------------------------------
# user charts from positions only, and rigid motions


_FD_STENCILS = {
    0: (np.array([0]), np.array([1.0])),
    1: (np.arange(-2, 3), np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0),
    2: (np.arange(-2, 3), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
    3: (np.arange(-3, 4), np.array([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]) / 8.0),
    4: (np.arange(-4, 5),
        np.array([-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -91.0 / 8, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6])),
}


def chart_from_positions(position_fn, domain, periodic, name="user"):
    """Chart whose derivatives come from fourth-order central differences.

    Step h = (machine eps)^{1/6} x axis scale.  Accuracy degrades with the
    derivative order (absolute error roughly eps^{2/3} x scale for order 4);
    built-ins should be preferred wherever they exist.
    """
    (a1, b1), (a2, b2) = domain
    h1 = (np.finfo(float).eps ** (1.0 / 6.0)) * (b1 - a1) * 0.5
    h2 = (np.finfo(float).eps ** (1.0 / 6.0)) * (b2 - a2) * 0.5

    def derivs(U, V, order=4):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        out = {}
        for (i, j) in DERIV_ORDERS:
            if i + j > order:
                continue
            offs_i, ci = _FD_STENCILS[i]
            offs_j, cj = _FD_STENCILS[j]
            acc = 0.0
            for oi, wi in zip(offs_i, ci):
                for oj, wj in zip(offs_j, cj):
                    if wi == 0.0 or wj == 0.0:
                        continue
                    acc = acc + (wi * wj) * position_fn(U + oi * h1, V + oj * h2)
            out[(i, j)] = np.asarray(acc) / (h1**i * h2**j)
        return out

    return Chart(name=name, domain=domain, periodic=periodic, derivs=derivs)


def rigid_transform(surface, rotation, translation):
    """The same surface moved by q -> R q + t (R orthogonal)."""
    R = np.asarray(rotation, dtype=float)
    t = np.asarray(translation, dtype=float)
    if R.shape != (3, 3) or not np.allclose(R @ R.T, np.eye(3), atol=1e-12):
        raise SpecError("rotation must be a 3x3 orthogonal matrix")

    def wrap(chart):
        inner = chart.derivs

        def derivs(U, V, order=4):
            d = inner(U, V, order=order)
            out = {k: v @ R.T for k, v in d.items()}
            out[(0, 0)] = out[(0, 0)] + t
            return out

        return Chart(
            name=chart.name + "+rigid",
            domain=chart.domain,
            periodic=chart.periodic,
            derivs=derivs,
            node_hint=chart.node_hint,
            axis_rule=chart.axis_rule,
            metric_scale_hint=chart.metric_scale_hint,
        )

    return Surface(
        charts=tuple(wrap(c) for c in surface.charts),
        label=surface.label + "+rigid",
        closed=surface.closed,
    )
