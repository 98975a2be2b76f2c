"""Implicit equations of the surfaces and elimination of the ruling parameter h."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateError

TINY = np.finfo(float).tiny


class UniPoly:
    """Univariate polynomial in h, coefficients in ascending degree."""

    def __init__(self, coefficients, rtol=1e-12):
        c = np.atleast_1d(np.asarray(coefficients, dtype=float)).copy()
        big = np.max(np.abs(c)) if c.size else 0.0
        k = c.size
        while k > 1 and abs(c[k - 1]) <= rtol * big:
            k -= 1
        self.coefficients = c[:k] if big > 0 else np.zeros(1)

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, h):
        return np.polynomial.polynomial.polyval(h, self.coefficients)

    def __repr__(self):
        return f"UniPoly({self.coefficients.tolist()})"

    def is_zero(self):
        return not np.any(self.coefficients)


@dataclass
class ResidualReport:
    value: object
    scale: object
    relative: object
    flag: str = ""

    def to_dict(self):
        return {"value": np.asarray(self.value).tolist(),
                "scale": np.asarray(self.scale).tolist(),
                "relative": np.asarray(self.relative).tolist(), "flag": self.flag}


def _report(terms, flag=""):
    terms = np.stack(np.broadcast_arrays(*terms), axis=-1)
    value = terms.sum(axis=-1)
    scale = np.maximum(np.max(np.abs(terms), axis=-1), TINY)
    return ResidualReport(value=value, scale=scale, relative=np.abs(value) / scale, flag=flag)


def _xyz(pt):
    pt = np.asarray(pt, dtype=float)
    return pt[..., 0], pt[..., 1], pt[..., 2]


def sextic_residual_halfway(pt):
    """Degree-6 implicit equation of the halfway (n = 2, t = 0) surface, monomial by monomial."""
    x, y, z = _xyz(pt)
    x2, y2, z2 = x * x, y * y, z * z
    return _report([
        4 * x2 * x * y * z, -4 * x * y2 * y * z,
        4 * x2 * x2 * y2, 4 * x2 * y2 * y2, -4 * x2 * y2,
        -4 * z2 * z2,
        -x2 * x2 * z2, -2 * x2 * y2 * z2, -y2 * y2 * z2, 4 * x2 * z2, 4 * y2 * z2,
    ])


def boy_quintic_residual(pt):
    """Degree-5 implicit equation of the Boy (n = 3, t = 0) surface."""
    x, y, z = _xyz(pt)
    x2, y2 = x * x, y * y
    return _report([
        4 * z ** 3,
        z * x2 * x2, 2 * z * x2 * y2, z * y2 * y2, -3 * z * x2, -3 * z * y2,
        6 * x2 * y * z, -2 * y2 * y * z,
        x2 * x, -3 * x * y2, -x2 * x2 * x, 2 * x2 * x * y2, 3 * x * y2 * y2,
    ])


def sylvester_matrix(pa, pb):
    a = np.asarray(pa.coefficients)[::-1]
    b = np.asarray(pb.coefficients)[::-1]
    m, n = len(a) - 1, len(b) - 1
    S = np.zeros((m + n, m + n))
    for i in range(n):
        S[i, i:i + m + 1] = a
    for i in range(m):
        S[n + i, i:i + n + 1] = b
    return S


def resultant(pa, pb):
    """Sylvester resultant of two polynomials of degree >= 1."""
    if not isinstance(pa, UniPoly):
        pa = UniPoly(pa)
    if not isinstance(pb, UniPoly):
        pb = UniPoly(pb)
    if pa.degree < 1 or pb.degree < 1:
        raise DegenerateError("resultant needs both degrees >= 1")
    return float(np.linalg.det(sylvester_matrix(pa, pb)))


def resultant_bound(pa, pb):
    """Hadamard-type bound |a|^deg(b) |b|^deg(a) on the resultant."""
    return (np.linalg.norm(pa.coefficients) ** pb.degree
            * np.linalg.norm(pb.coefficients) ** pa.degree)


def euclid_final_remainder(pa, pb):
    """Run the Euclidean algorithm; 0 when a remainder vanishes before degree 0.

    Each remainder is rescaled to unit max-coefficient so the returned constant
    is scale free.
    """
    if not isinstance(pa, UniPoly):
        pa = UniPoly(pa)
    if not isinstance(pb, UniPoly):
        pb = UniPoly(pb)
    a = pa.coefficients / np.max(np.abs(pa.coefficients))
    b = pb.coefficients / np.max(np.abs(pb.coefficients))
    if len(a) < len(b):
        a, b = b, a
    while len(b) > 1:
        _, r = np.polynomial.polynomial.polydiv(a, b)
        big = np.max(np.abs(r))
        if big <= 1e-11:
            return 0.0
        r = UniPoly(r / big, rtol=1e-10).coefficients
        a, b = b, r
    return float(abs(b[0]))


def halfway_t_polynomials(pt, t, q=0.0):
    """The two polynomials in h whose common root places pt on the family (p = 1)."""
    x, y, z = (float(v) for v in np.asarray(pt, dtype=float))
    A, B, C = 2 * x * y, x * x - y * y, x * x + y * y
    t2 = t * t
    pol_a = UniPoly([(t2 - 1) ** 2 - (t2 + 1) * C + 2 * t * A, -2 * B, 2 * (t2 - 1) - C, 0.0, 1.0])
    c1 = t * (1 + 2 * q)
    pol_b = UniPoly([2 * z * (t2 - 1) + t * B, c1 * (t2 - 1) - t * C + 2 * A, 2 * z, c1])
    return pol_a, pol_b


def sextic_residual_t(pt, t, q=0.0):
    """Normalised resultant residual of the time-dependent surface (p = 1).

    Vectorised over points; the flag records degenerate points where the
    second polynomial collapses to a constant.
    """
    pts = np.asarray(pt, dtype=float)
    flat = pts.reshape(-1, 3)
    val = np.zeros(len(flat))
    scale = np.zeros(len(flat))
    flag = ""
    for i, r in enumerate(flat):
        pa, pb = halfway_t_polynomials(r, t, q)
        if pb.degree < 1:
            flag = "degenerate"
            val[i] = pb.coefficients[0]
            scale[i] = max(abs(val[i]), TINY) if val[i] else 1.0
            continue
        val[i] = resultant(pa, pb)
        scale[i] = max(resultant_bound(pa, pb), TINY)
    shape = pts.shape[:-1]
    return ResidualReport(value=val.reshape(shape), scale=scale.reshape(shape),
                          relative=(np.abs(val) / scale).reshape(shape), flag=flag)


def quadratic_common_root_residual(pt):
    """Common-root criterion for z h^2 + 2xy h - z and the second quadratic (times z^2)."""
    x, y, z = _xyz(pt)
    C, z2 = x * x + y * y, z * z
    a1, b1, c1 = z, 2 * x * y, -z
    a2 = C * z2 - 4 * x * x * y * y
    b2 = 2 * (x * x - y * y) * z2
    c2 = C * z2
    lhs = (c1 * a2 - c2 * a1) ** 2
    rhs = (a1 * b2 - a2 * b1) * (c2 * b1 - c1 * b2)
    value = lhs - rhs
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), TINY)
    flag = "z=0 limit" if np.any(z == 0) else ""
    return ResidualReport(value=value, scale=scale, relative=np.abs(value) / scale, flag=flag)


def extraneous_factor(pt, t):
    """(t(x^2+y^2) - 2xy)^2, the spurious square dividing the resultant.

    Res_h(polA, polB) = -(t C - A)^2 * sextic. The factor vanishes on the z axis
    and, for |t| < 1, on two planes through it, none of which lie on the surface.
    """
    x, y, _ = _xyz(pt)
    return (t * (x * x + y * y) - 2 * x * y) ** 2


def reduced_sextic_value(pt, t, q=0.0):
    """The sextic itself, -Res / (t C - A)^2, computed pointwise."""
    rep = sextic_residual_t(pt, t, q)
    return -np.asarray(rep.value) / extraneous_factor(pt, t)


SEXTIC_EXPONENTS = [(i, j, k) for i in range(7) for j in range(7 - i) for k in range(7 - i - j)]


def _monomials(pts):
    pts = np.asarray(pts, dtype=float)
    return np.stack([pts[..., 0] ** i * pts[..., 1] ** j * pts[..., 2] ** k
                     for i, j, k in SEXTIC_EXPONENTS], axis=-1)


@lru_cache(maxsize=64)
def sextic_coefficients_t(t, q=0.0):
    """Monomial coefficients of the reduced sextic, recovered by least squares.

    Samples are drawn away from the planes where the spurious factor vanishes so
    the division is well conditioned; tiny coefficients are snapped to zero.
    """
    rng = np.random.default_rng(20240607)
    pts = rng.uniform(-1.0, 1.0, size=(2000, 3))
    C = pts[:, 0] ** 2 + pts[:, 1] ** 2
    A = 2 * pts[:, 0] * pts[:, 1]
    keep = np.abs(t * C - A) > 0.2 * (C + 1e-3)
    pts = pts[keep][:600]
    vals = reduced_sextic_value(pts, t, q)
    coef = np.linalg.lstsq(_monomials(pts), vals, rcond=None)[0]
    coef[np.abs(coef) < 1e-10 * np.max(np.abs(coef))] = 0.0
    return tuple(coef)


def reduced_sextic_residual_t(pt, t, q=0.0):
    """Sextic of the time-dependent surface, normalised by its largest monomial term."""
    coef = np.asarray(sextic_coefficients_t(float(t), float(q)))
    terms = _monomials(pt) * coef
    value = terms.sum(axis=-1)
    scale = np.maximum(np.max(np.abs(terms), axis=-1), TINY)
    return ResidualReport(value=value, scale=scale, relative=np.abs(value) / scale)
