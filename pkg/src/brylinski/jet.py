"""Fourth-order local graph jets and the closed-form pointwise residues.

At a point u of the surface, pick an orthonormal tangent frame (e1, e2, n)
and write the surface as a graph over its tangent plane,

    z = f(x, y) = b1 x^2 + b2 xy + b3 y^2 + c1 x^3 + ... + d5 y^4 + O(5).

The twelve coefficients determine the residues of the pointwise beta
function at s = -2, -4, -6:

    res2 = 2 pi
    res4 = (pi/2) (b1^2 + b2^2 + b3^2 - 2 b1 b3)   [= (pi/8)(k1 - k2)^2]
    res6 = (pi/32) * (21-term quartic bracket, see _res6_bracket)

res4 and res6 here are the jet-coefficient polynomials; an alternative
family written in the curvature traces H0..H5 circulates with a different
normalization at -4, and residue_cross_check reports both so the
discrepancy stays visible rather than hidden.  Numerical adjudication
lives in the beta module (residue_numeric).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ImmersionError, NumericalError
from .series import INDEX, MONOMIALS, TruncatedSeries2, invert_map, series_compose2


@dataclass(frozen=True)
class LocalFrame:
    """Right-handed orthonormal frame: normal = e1 x e2."""

    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True)
class JetCoefficients:
    b1: float
    b2: float
    b3: float
    c1: float
    c2: float
    c3: float
    c4: float
    d1: float
    d2: float
    d3: float
    d4: float
    d5: float

    def as_array(self):
        return np.array([self.b1, self.b2, self.b3,
                         self.c1, self.c2, self.c3, self.c4,
                         self.d1, self.d2, self.d3, self.d4, self.d5])

    def flipped_normal(self):
        """Jet of the same surface with the normal reversed (all signs flip)."""
        return JetCoefficients(*(-self.as_array()))


@dataclass(frozen=True)
class CurvatureInvariants:
    H0: float
    H1: float
    H2: float
    H3: float
    H4: float
    H5: float
    gauss: float
    kappa1: float
    kappa2: float


_JET_NAMES = ("b1", "b2", "b3", "c1", "c2", "c3", "c4", "d1", "d2", "d3", "d4", "d5")
_JET_MONOS = ((2, 0), (1, 1), (0, 2),
              (3, 0), (2, 1), (1, 2), (0, 3),
              (4, 0), (3, 1), (2, 2), (1, 3), (0, 4))


def _graph_series(chart, U, V, frame_angle=0.0):
    """Frame vectors and the frame-projected Taylor series of the embedding.

    Vectorized over parameter arrays; returns (origin, e1, e2, normal,
    X, Y, Z) where X, Y, Z are batched series in the chart displacements.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    d = chart.derivs(U, V, order=4)
    xu, xv = d[(1, 0)], d[(0, 1)]

    nu = np.linalg.norm(xu, axis=-1)
    if np.any(nu == 0.0):
        raise ImmersionError("zero tangent vector")
    e1 = xu / nu[..., None]
    e2 = xv - (xv * e1).sum(-1)[..., None] * e1
    ne2 = np.linalg.norm(e2, axis=-1)
    if np.any(ne2 <= 1e-12 * np.linalg.norm(xv, axis=-1)):
        raise ImmersionError("tangent vectors are parallel")
    e2 = e2 / ne2[..., None]
    if frame_angle != 0.0:
        ca, sa = math.cos(frame_angle), math.sin(frame_angle)
        e1, e2 = ca * e1 + sa * e2, -sa * e1 + ca * e2
    normal = np.cross(e1, e2)

    batch = np.broadcast(U, V).shape
    X = TruncatedSeries2(batch_shape=batch)
    Y = TruncatedSeries2(batch_shape=batch)
    Z = TruncatedSeries2(batch_shape=batch)
    for (i, j) in MONOMIALS:
        if i + j == 0:
            continue
        coeff = d[(i, j)] / (math.factorial(i) * math.factorial(j))
        k = INDEX[(i, j)]
        X.c[k] = (coeff * e1).sum(-1)
        Y.c[k] = (coeff * e2).sum(-1)
        Z.c[k] = (coeff * normal).sum(-1)
    return d[(0, 0)], e1, e2, normal, X, Y, Z


def _graph_jet(chart, U, V, frame_angle=0.0):
    """Batched jet extraction core; also returns the inverse map series."""
    origin, e1, e2, normal, X, Y, Z = _graph_series(chart, U, V, frame_angle)
    P, Q = invert_map(X, Y)
    f = series_compose2(Z, P, Q)

    quad = np.max(np.abs(np.stack([f.c[3], f.c[4], f.c[5]])), axis=0)
    scale = np.maximum(1.0, quad)
    low = np.max(np.abs(np.stack([f.c[0], f.c[1], f.c[2]])), axis=0)
    if np.any(low > 1e-10 * scale):
        raise NumericalError(
            "graph jet has non-vanishing constant/linear part; "
            "frame or series inversion is inconsistent "
            f"(max |low-order| = {np.max(low):.3e})")
    coeffs = {name: f.coeff(*mono) for name, mono in zip(_JET_NAMES, _JET_MONOS)}
    return origin, e1, e2, normal, P, Q, coeffs


def extract_jet(surface, p, chart=0, frame_angle=0.0):
    """Local frame and degree-4 graph jet at parameter point p = (u, v).

    frame_angle rotates (e1, e2) in the tangent plane; residues must not
    depend on it.  The embedding is Taylor-expanded in chart parameters,
    projected onto the frame, and the tangential pair (X, Y) is inverted so
    the normal component becomes z = f(x, y).  Constant and linear terms of
    f must vanish; values above 1e-10 x (coefficient scale) abort, since a
    corrupt jet would poison every residue downstream.
    """
    ch = surface.charts[chart] if hasattr(surface, "charts") else surface
    origin, e1, e2, normal, _, _, coeffs = _graph_jet(
        ch, float(p[0]), float(p[1]), frame_angle)
    frame = LocalFrame(origin=origin, e1=e1, e2=e2, normal=normal)
    return frame, JetCoefficients(**{k: float(v) for k, v in coeffs.items()})


def jet_batch(chart, U, V):
    """Jet coefficient arrays over parameter arrays (for grid integrals)."""
    *_, coeffs = _graph_jet(chart, U, V)
    return coeffs


def curvature_invariants(jet):
    """Complete contractions H0..H5 of II and its covariant derivatives.

    Evaluated from the graph jet in the orthonormal frame at the point.
    Note the cubic part of H3 is not x<->y symmetric (-48 b3^3 with no b1^3
    term); it is kept in that form deliberately, and residue_cross_check
    surfaces the consequences instead of patching them.
    """
    b1, b2, b3 = jet.b1, jet.b2, jet.b3
    c1, c2, c3, c4 = jet.c1, jet.c2, jet.c3, jet.c4
    d1, d2, d3, d4, d5 = jet.d1, jet.d2, jet.d3, jet.d4, jet.d5

    H0 = 2.0 * b3 + 2.0 * b1
    H1 = 4.0 * b3**2 + 2.0 * b2**2 + 4.0 * b1**2
    H2 = 36.0 * c4**2 + 12.0 * c3**2 + 12.0 * c2**2 + 36.0 * c1**2
    H3 = (24.0 * d5 + 8.0 * d3 - 24.0 * b3**3 - 8.0 * b1 * b3**2
          - 16.0 * b2**2 * b3 - 8.0 * b1**2 * b3 - 16.0 * b1 * b2**2
          + 24.0 * d1 - 24.0 * b3**3)
    H4 = (48.0 * b3 * d5 + 12.0 * b2 * d4 + 8.0 * b3 * d3 + 8.0 * b1 * d3
          - 48.0 * b3**4 - 48.0 * b2**2 * b3**2 - 32.0 * b1**2 * b3**2
          - 32.0 * b1 * b2**2 * b3 + 12.0 * b2 * d2 - 8.0 * b2**4
          - 48.0 * b1**2 * b2**2 + 48.0 * b1 * d1 - 48.0 * b1**4)
    H5 = (48.0 * b3 * d5 + 12.0 * b2 * d4 + 8.0 * b3 * d3 + 8.0 * b1 * d3
          - 48.0 * b3**4 - 16.0 * b1 * b3**3 - 44.0 * b2**2 * b3**2
          - 56.0 * b1 * b2**2 * b3 - 16.0 * b1**3 * b3 + 12.0 * b2 * d2
          - 4.0 * b2**4 - 44.0 * b1**2 * b2**2 + 48.0 * b1 * d1 - 48.0 * b1**4)

    # II = [[2 b1, b2], [b2, 2 b3]] in the orthonormal frame
    mean = b1 + b3
    gauss = 4.0 * b1 * b3 - b2**2
    disc = math.sqrt(max(mean * mean - gauss, 0.0))
    return CurvatureInvariants(H0=H0, H1=H1, H2=H2, H3=H3, H4=H4, H5=H5,
                               gauss=gauss, kappa1=mean + disc, kappa2=mean - disc)


def _res4_quadratic(b1, b2, b3):
    return b1 * b1 + b2 * b2 + b3 * b3 - 2.0 * b1 * b3


def _res6_bracket(b1, b2, b3, c1, c2, c3, c4, d1, d2, d3, d4, d5):
    return (72.0 * b3 * d5 - 24.0 * b1 * d5 + 24.0 * b2 * d4 + 48.0 * c4**2
            + 8.0 * b3 * d3 + 8.0 * b1 * d3 + 16.0 * c3**2
            - 63.0 * b3**4 + 12.0 * b1 * b3**3 - 66.0 * b2**2 * b3**2
            - 26.0 * b1**2 * b3**2 - 44.0 * b1 * b2**2 * b3 - 24.0 * d1 * b3
            + 12.0 * b1**3 * b3 + 24.0 * b2 * d2 + 16.0 * c2**2
            - 11.0 * b2**4 - 66.0 * b1**2 * b2**2 + 72.0 * b1 * d1
            + 48.0 * c1**2 - 63.0 * b1**4)


def pointwise_residues_closed_form(jet):
    """Residues of B^u at s = -2, -4, -6 from the jet coefficients.

    Every monomial has even total parity in (b, c, d), so the values are
    exactly invariant under normal reversal.
    """
    res2 = 2.0 * math.pi
    res4 = 0.5 * math.pi * _res4_quadratic(jet.b1, jet.b2, jet.b3)
    res6 = (math.pi / 32.0) * _res6_bracket(*jet.as_array())
    return res2, res4, res6


def residues_batch(chart, U, V):
    """(res2, res4, res6) arrays over a parameter grid."""
    c = jet_batch(chart, U, V)
    res2 = np.full(np.broadcast(U, V).shape, 2.0 * math.pi)
    res4 = 0.5 * math.pi * _res4_quadratic(c["b1"], c["b2"], c["b3"])
    res6 = (math.pi / 32.0) * _res6_bracket(*(c[n] for n in _JET_NAMES))
    return res2, res4, res6


@dataclass(frozen=True)
class ResidueCrossCheck:
    """Jet-coefficient residues against the curvature-trace variants."""

    res4_bcd: float
    res4_H: float
    res6_bcd: float
    res6_H: float
    ratio4: float | None
    ratio6: float | None
    degenerate: bool


def residue_cross_check(jet, tiny=1e-300):
    """Evaluate both closed-form families at -4 and -6 and their ratios.

    The curvature-trace family is (pi/2)(2 H1 - H0^2) at -4 and
    (pi/32)(-(3/16) H0^4 + (3/4) H1^2 + (4/3) H2 - (1/2) H0 H3 + (3/2) H4
    + (1/2) H5) at -6.  Algebraically 2 H1 - H0^2 = 4 (b1^2 + b2^2 + b3^2
    - 2 b1 b3), so ratio4 is identically 4: the two families disagree by
    that factor, and the numerical residue extractor decides which one
    matches the actual pole.  Ratios are None for degenerate (sphere-like)
    jets where the denominators vanish.
    """
    _, res4_bcd, res6_bcd = pointwise_residues_closed_form(jet)
    H = curvature_invariants(jet)
    res4_H = 0.5 * math.pi * (2.0 * H.H1 - H.H0**2)
    res6_H = (math.pi / 32.0) * (-(3.0 / 16.0) * H.H0**4 + 0.75 * H.H1**2
                                 + (4.0 / 3.0) * H.H2 - 0.5 * H.H0 * H.H3
                                 + 1.5 * H.H4 + 0.5 * H.H5)
    degenerate = abs(res4_bcd) < tiny or abs(res6_bcd) < tiny
    ratio4 = (res4_H / res4_bcd) if abs(res4_bcd) > tiny else None
    ratio6 = (res6_H / res6_bcd) if abs(res6_bcd) > tiny else None
    return ResidueCrossCheck(res4_bcd=res4_bcd, res4_H=res4_H,
                             res6_bcd=res6_bcd, res6_H=res6_H,
                             ratio4=ratio4, ratio6=ratio6, degenerate=degenerate)


def sphere_jet(r, sign=1.0):
    """Exact jet of a sphere of radius r (sign = normal orientation)."""
    return JetCoefficients(
        b1=sign / (2.0 * r), b2=0.0, b3=sign / (2.0 * r),
        c1=0.0, c2=0.0, c3=0.0, c4=0.0,
        d1=sign / (8.0 * r**3), d2=0.0, d3=sign / (4.0 * r**3), d4=0.0,
        d5=sign / (8.0 * r**3),
    )
