"""Truncated bivariate power series of total degree <= 4.

The local graph z = f(x, y) of a surface near a point is needed through its
quartic Taylor terms (that is what the residue formulas at -2, -4, -6
consume), so the truncation degree is hard-coded to 4.  A series is a dense
vector of 15 coefficients in graded-lexicographic monomial order:

    1; x, y; x^2, xy, y^2; x^3, x^2 y, x y^2, y^3; x^4, ..., y^4

All arithmetic discards terms of total degree > 4.  Coefficients may carry
trailing batch dimensions (shape (15,) + batch), in which case every
operation acts elementwise on the batch; jet extraction over whole
quadrature grids relies on this.
"""

from __future__ import annotations

import numpy as np

DEGREE = 4

#: monomial exponents (i, j) in graded-lex order, 15 entries
MONOMIALS = [(i - j, j) for i in range(DEGREE + 1) for j in range(i + 1)]
INDEX = {m: k for k, m in enumerate(MONOMIALS)}
NTERMS = len(MONOMIALS)

# flat multiplication table: (k_a, k_b, k_target) for every coefficient pair
# whose exponent sum stays within the truncation degree
_MUL_TABLE = [
    (ka, kb, INDEX[(ma[0] + mb[0], ma[1] + mb[1])])
    for ka, ma in enumerate(MONOMIALS)
    for kb, mb in enumerate(MONOMIALS)
    if ma[0] + mb[0] + ma[1] + mb[1] <= DEGREE
]
_MUL_A = np.array([t[0] for t in _MUL_TABLE])
_MUL_B = np.array([t[1] for t in _MUL_TABLE])
_MUL_C = np.array([t[2] for t in _MUL_TABLE])

_DEG = np.array([i + j for i, j in MONOMIALS])


class TruncatedSeries2:
    """Polynomial in two variables, truncated at total degree 4.

    `coeffs` has shape (15,) for a single series or (15,) + batch for a
    batch of series sharing the same monomial layout.
    """

    __slots__ = ("c",)

    # keep ndarray * series from being swallowed by numpy broadcasting
    __array_ufunc__ = None

    def __init__(self, coeffs=None, batch_shape=()):
        if coeffs is None:
            self.c = np.zeros((NTERMS,) + tuple(batch_shape))
        else:
            c = np.asarray(coeffs, dtype=float)
            if c.shape[0] != NTERMS:
                raise ValueError(f"leading axis must have {NTERMS} entries, got {c.shape}")
            self.c = c.copy()

    @property
    def batch_shape(self):
        return self.c.shape[1:]

    @classmethod
    def from_dict(cls, d):
        s = cls()
        for (i, j), v in d.items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in monomial ({i}, {j})")
            if i + j > DEGREE:
                continue
            s.c[INDEX[(i, j)]] = v
        return s

    @classmethod
    def constant(cls, v, batch_shape=()):
        s = cls(batch_shape=batch_shape)
        s.c[0] = v
        return s

    @classmethod
    def x(cls):
        return cls.from_dict({(1, 0): 1.0})

    @classmethod
    def y(cls):
        return cls.from_dict({(0, 1): 1.0})

    def coeff(self, i, j):
        v = self.c[INDEX[(i, j)]]
        return float(v) if v.ndim == 0 else v

    def truncated(self, degree):
        """Copy with all terms of total degree > `degree` dropped."""
        s = TruncatedSeries2(self.c)
        s.c[_DEG > degree] = 0.0
        return s

    def __add__(self, other):
        return series_add(self, _coerce(other, self.batch_shape))

    __radd__ = __add__

    def __sub__(self, other):
        return series_add(self, -_coerce(other, self.batch_shape))

    def __rsub__(self, other):
        return series_add(_coerce(other, self.batch_shape), -self)

    def __neg__(self):
        return TruncatedSeries2(-self.c)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries2):
            return series_mul(self, other)
        return TruncatedSeries2(self.c * np.asarray(other))

    __rmul__ = __mul__

    def __call__(self, x, y):
        """Evaluate at numeric (x, y); broadcasts against the batch shape."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = 0.0
        for k, (i, j) in enumerate(MONOMIALS):
            ck = self.c[k]
            if np.any(ck != 0.0):
                out = out + ck * x**i * y**j
        return np.asarray(out + np.zeros(np.broadcast(x, y).shape))

    def __repr__(self):
        if self.batch_shape:
            return f"TruncatedSeries2(batch {self.batch_shape})"
        terms = []
        for k, (i, j) in enumerate(MONOMIALS):
            if self.c[k] != 0.0:
                terms.append(f"{self.c[k]:g}*x^{i}*y^{j}")
        return "TruncatedSeries2(" + (" + ".join(terms) if terms else "0") + ")"


def _coerce(v, batch_shape=()):
    if isinstance(v, TruncatedSeries2):
        return v
    if isinstance(v, (int, float, np.floating)):
        return TruncatedSeries2.constant(float(v), batch_shape)
    raise TypeError(f"cannot coerce {type(v)!r} to TruncatedSeries2")


def series_add(a, b):
    """Coefficientwise sum."""
    return TruncatedSeries2(a.c + b.c)


def series_mul(a, b):
    """Cauchy product truncated at total degree 4."""
    prod = a.c[_MUL_A] * b.c[_MUL_B]
    shape = prod.shape[1:]
    out = TruncatedSeries2(batch_shape=shape)
    np.add.at(out.c, _MUL_C, prod)
    return out


def series_compose2(outer, u, v):
    """outer(u(x,y), v(x,y)) truncated at degree 4.

    u and v must have zero constant term; otherwise the substitution would
    need infinitely many terms of `outer`.
    """
    if np.any(u.c[0] != 0.0) or np.any(v.c[0] != 0.0):
        raise ValueError("composition requires zero constant term in both inner series")
    # powers u^i, v^j for i, j <= 4; higher mixed powers vanish by truncation
    upow = [TruncatedSeries2.constant(1.0, u.batch_shape)]
    vpow = [TruncatedSeries2.constant(1.0, v.batch_shape)]
    for _ in range(DEGREE):
        upow.append(series_mul(upow[-1], u))
        vpow.append(series_mul(vpow[-1], v))
    out = None
    for k, (i, j) in enumerate(MONOMIALS):
        ck = outer.c[k]
        if np.any(ck != 0.0):
            term = series_mul(upow[i], vpow[j]) * ck
            out = term if out is None else series_add(out, term)
    if out is None:
        out = TruncatedSeries2(batch_shape=np.broadcast_shapes(
            outer.batch_shape, u.batch_shape, v.batch_shape))
    return out


def invert_map(u, v):
    """Inverse of the formal map (x, y) -> (u(x,y), v(x,y)) modulo degree 5.

    Returns (p, q) with u(p, q) = x, v(p, q) = y and p(u, v) = x,
    q(u, v) = y, all up to degree-4 truncation.  The linear part must be
    invertible (a degenerate tangent frame shows up here as a singular
    2x2 block).
    """
    if np.any(u.c[0] != 0.0) or np.any(v.c[0] != 0.0):
        raise ValueError("invert_map requires zero constant terms")
    l11, l12 = u.c[INDEX[(1, 0)]], u.c[INDEX[(0, 1)]]
    l21, l22 = v.c[INDEX[(1, 0)]], v.c[INDEX[(0, 1)]]
    det = l11 * l22 - l12 * l21
    scale = np.max(np.abs(np.stack([l11, l12, l21, l22])), axis=0)
    if np.any(scale == 0.0) or np.any(np.abs(det) < 1e-13 * scale * scale):
        raise ValueError("singular linear part: map is not invertible at this order")
    i11, i12 = l22 / det, -l12 / det
    i21, i22 = -l21 / det, l11 / det

    x = _var_like((1, 0), u)
    y = _var_like((0, 1), u)
    # nonlinear tails: u = L + nu, v = L + nv
    nu = TruncatedSeries2(u.c)
    nv = TruncatedSeries2(v.c)
    nu.c[1:3] = 0.0
    nv.c[1:3] = 0.0

    # fixed point iteration (p,q) <- L^{-1} [ (x,y) - (nu, nv)(p,q) ];
    # each pass fixes one more degree, so 4 passes are exact at degree 4
    p = i11 * x + i12 * y
    q = i21 * x + i22 * y
    for _ in range(DEGREE):
        ru = x - series_compose2(nu, p, q)
        rv = y - series_compose2(nv, p, q)
        p = i11 * ru + i12 * rv
        q = i21 * ru + i22 * rv
    return p, q


def _var_like(mono, template):
    s = TruncatedSeries2(batch_shape=template.batch_shape)
    s.c[INDEX[mono]] = 1.0
    return s
