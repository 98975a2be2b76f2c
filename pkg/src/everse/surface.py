"""Parametric maps of the eversion and their composition.

Everything is vectorised over numpy arrays: angles and heights broadcast
against each other and points come back with a trailing axis of length 3.
The complex shorthand w = x + iy, u = exp(i phi) is used internally.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import DomainError, ForbiddenStageError, SingularMapError

GAMMA_SERIES_CUTOFF = 1e-8
DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class SurfaceParams:
    n: int = 2
    t: float = 0.0
    p: float = 1.0
    q: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if self.p < 0 or self.q < 0:
            raise ValueError("p and q must be non-negative")
        for name in ("t", "p", "q"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def coupled(cls, n=2, t=0.0, q=0.0):
        """Surface with the recommended coupling p = 1 - |q t| (clamped at 0)."""
        return cls(n=n, t=t, p=max(0.0, 1.0 - abs(q * t)), q=q)


@dataclass(frozen=True)
class StageParams:
    surface: SurfaceParams = field(default_factory=SurfaceParams)
    xi: float = 1.0
    eta: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0 / 25.0
    omega: float = 2.0
    lam: float = 1.0
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        for name in ("xi", "eta", "alpha", "beta", "epsilon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError("omega must be > 0")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.alpha + self.beta <= 0:
            raise SingularMapError("alpha + beta must be positive")
        if self.alpha == 0 and self.xi == 0 and abs(self.surface.t) <= 1:
            raise ForbiddenStageError(
                f"alpha = xi = 0 is not allowed for |t| <= 1 (t = {self.surface.t})")

    @property
    def n(self):
        return self.surface.n

    @property
    def t(self):
        return self.surface.t

    @property
    def kappa(self):
        return (self.surface.n - 1) / (2.0 * self.surface.n)

    @property
    def gamma(self):
        return 2.0 * math.sqrt(self.alpha * self.beta)

    @classmethod
    def make(cls, n=2, t=0.0, p=None, q=0.0, **kw):
        """Build a stage from flat keywords; p defaults to 1 - |q t|."""
        if p is None:
            p = max(0.0, 1.0 - abs(q * t))
        return cls(surface=SurfaceParams(n=n, t=t, p=p, q=q), **kw)

    def with_surface(self, **kw):
        return replace(self, surface=replace(self.surface, **kw))

    def as_dict(self):
        s = self.surface
        return {"n": s.n, "t": s.t, "p": s.p, "q": s.q, "xi": self.xi,
                "eta": self.eta, "alpha": self.alpha, "beta": self.beta,
                "omega": self.omega, "lambda": self.lam, "epsilon": self.epsilon,
                "kappa": self.kappa, "gamma": self.gamma}


@dataclass(frozen=True)
class ParamPoint:
    """A domain point, either (h, phi) on the open cylinder or (theta, phi) on the sphere."""
    phi: float
    h: float = None
    theta: float = None

    def __post_init__(self):
        if (self.h is None) == (self.theta is None):
            raise ValueError("exactly one of h or theta must be given")
        object.__setattr__(self, "phi", float(normalize_angle(self.phi)))
        if self.theta is not None and abs(self.theta) > math.pi / 2 + 1e-15:
            raise DomainError(f"theta outside [-pi/2, pi/2]: {self.theta}")

    @property
    def chart(self):
        return "h" if self.h is not None else "theta"


def normalize_angle(phi):
    """Map angles to [-pi, pi)."""
    out = np.remainder(np.asarray(phi, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return out if np.ndim(out) else float(out)


def _stack(x, y, z):
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def check_finite(r, what="map"):
    r = np.asarray(r)
    if not np.all(np.isfinite(r)):
        raise SingularMapError(f"{what} produced a non-finite value")
    return r


def halfway_point(n, h, phi):
    h = np.asarray(h, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return _stack(np.sin((n - 1) * phi) - h * np.sin(phi),
                  np.cos((n - 1) * phi) + h * np.cos(phi),
                  h * np.sin(n * phi))


def family_point(params, h, phi):
    n, t, p, q = params.n, params.t, params.p, params.q
    h = np.asarray(h, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    x = t * c + p * np.sin((n - 1) * phi) - h * s
    y = t * s + p * np.cos((n - 1) * phi) + h * c
    z = h * np.sin(n * phi) - (t / n) * np.cos(n * phi) - q * t * h
    return _stack(x, y, z)


def family_tangents(params, h, phi):
    """Analytic partial derivatives (r_h, r_phi) of the family."""
    n, t, p, q = params.n, params.t, params.p, params.q
    h = np.asarray(h, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    r_h = _stack(-s, c, np.sin(n * phi) - q * t)
    r_phi = _stack(-t * s + p * (n - 1) * np.cos((n - 1) * phi) - h * c,
                   t * c - p * (n - 1) * np.sin((n - 1) * phi) - h * s,
                   n * h * np.cos(n * phi) + t * np.sin(n * phi))
    return r_h, r_phi


def theta_to_h(theta, omega, n):
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) >= np.pi / 2):
        raise DomainError("theta_to_h is undefined at the poles; use pipeline()")
    out = omega * np.sin(theta) / np.cos(theta) ** n
    return out if np.ndim(out) else float(out)


def dh_dtheta(theta, omega, n):
    c = np.cos(theta)
    return omega * (c * c + n * np.sin(theta) ** 2) / c ** (n + 1)


def damp_map(r, stage):
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    s = stage.xi + stage.eta * (x * x + y * y)
    if np.any(s <= 0):
        raise SingularMapError("damping denominator xi + eta*(x^2+y^2) vanishes")
    sk = s ** (-stage.kappa)
    return check_finite(_stack(x * sk, y * sk, z / s), "damp_map")


def damp_jacobian(r, stage):
    """3x3 Jacobian matrices of damp_map, shape (..., 3, 3)."""
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    xi, eta, k = stage.xi, stage.eta, stage.kappa
    s = xi + eta * (x * x + y * y)
    sk = s ** (-k - 1)
    J = np.zeros(r.shape[:-1] + (3, 3))
    J[..., 0, 0] = (s - 2 * k * eta * x * x) * sk
    J[..., 0, 1] = -2 * k * eta * x * y * sk
    J[..., 1, 0] = J[..., 0, 1]
    J[..., 1, 1] = (s - 2 * k * eta * y * y) * sk
    J[..., 2, 0] = -2 * eta * x * z / (s * s)
    J[..., 2, 1] = -2 * eta * y * z / (s * s)
    J[..., 2, 2] = 1.0 / s
    return J


def expm1_over(gamma, z):
    """(exp(gamma z) - 1)/gamma with its gamma -> 0 limit z."""
    if gamma < GAMMA_SERIES_CUTOFF:
        return z * (1.0 + gamma * z / 2.0 + (gamma * z) ** 2 / 6.0)
    return np.expm1(gamma * z) / gamma


def inversion_map(rp, stage):
    """Closing inversion with mean radius 1/gamma.

    The z component is rearranged as a*(e^{gz}-1)/g + g(1-rho)/(2 g_den (alpha+beta))
    which equals the textbook form but stays finite as gamma -> 0.
    """
    rp = np.asarray(rp, dtype=float)
    x, y, z = rp[..., 0], rp[..., 1], rp[..., 2]
    a, b, g = stage.alpha, stage.beta, stage.gamma
    rho = x * x + y * y
    den = a + b * rho
    if np.any(den <= 0):
        raise SingularMapError("inversion denominator alpha + beta*rho vanishes")
    e = np.exp(g * z)
    zz = (a - b * rho) / den * expm1_over(g, z) + g * (1 - rho) / (2 * den * (a + b))
    return check_finite(_stack(x * e / den, y * e / den, zz), "inversion_map")


def inversion_jacobian(rp, stage):
    rp = np.asarray(rp, dtype=float)
    x, y, z = rp[..., 0], rp[..., 1], rp[..., 2]
    a, b, g = stage.alpha, stage.beta, stage.gamma
    rho = x * x + y * y
    den = a + b * rho
    e = np.exp(g * z)
    d2 = den * den
    J = np.zeros(rp.shape[:-1] + (3, 3))
    J[..., 0, 0] = e * (a + b * (y * y - x * x)) / d2
    J[..., 0, 1] = -2 * b * x * y * e / d2
    J[..., 0, 2] = g * x * e / den
    J[..., 1, 0] = J[..., 0, 1]
    J[..., 1, 1] = e * (a + b * (x * x - y * y)) / d2
    J[..., 1, 2] = g * y * e / den
    J[..., 2, 0] = -g * x * e / d2
    J[..., 2, 1] = -g * y * e / d2
    J[..., 2, 2] = e * (a - b * rho) / den
    return J


def inversion_limit_point(stage):
    """Image of h -> +-inf: the rho' -> inf limit of the inversion, on the z axis."""
    a, b = stage.alpha, stage.beta
    if b <= 0:
        raise SingularMapError("the far end only closes up for beta > 0")
    return np.array([0.0, 0.0, -math.sqrt(a / b) / (a + b)])


def plane_inversion(r, stage):
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    rho = x * x + y * y
    if np.any(rho <= 0):
        raise SingularMapError("plane inversion is singular on the z axis")
    k, eta = stage.kappa, stage.eta
    f = eta ** k * rho ** (k - 1)
    return check_finite(_stack(x * f, y * f, -z / (eta * rho)), "plane_inversion")


def sphere_radius(stage):
    return stage.eta ** stage.kappa * abs(stage.t) ** (-1.0 / stage.n)


def _lambda_coefficient(stage):
    t, k = stage.t, stage.kappa
    return stage.eta ** (1 + k) * t * abs(t) ** (2 * k)


def unfold_point(stage, theta, phi):
    """Pre-inversion surface of the lambda stage for |theta| < pi/2.

    w = u [t (lam + (1-lam)/cos^n) + i lam h + i p conj(u)^n]
    z = lam z_family - (1-lam) K sin(theta)/cos^{2n}(theta), K = eta^{1+kappa} t |t|^{2 kappa}
    """
    s = stage.surface
    n, t, lam = s.n, s.t, stage.lam
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    h = theta_to_h(theta, stage.omega, n)
    inv_m = 1.0 / np.cos(theta) ** n
    u = np.exp(1j * phi)
    w = u * (t * (lam + (1 - lam) * inv_m) + 1j * lam * h + 1j * s.p * np.conj(u) ** n)
    zf = h * np.sin(n * phi) - (t / n) * np.cos(n * phi) - s.q * t * h
    z = lam * zf - (1 - lam) * _lambda_coefficient(stage) * np.sin(theta) * inv_m ** 2
    return _stack(w.real, w.imag, z)


def unfold_tangents(stage, theta, phi):
    """Analytic (r_theta, r_phi) of unfold_point."""
    s = stage.surface
    n, t, lam, p, q = s.n, s.t, stage.lam, s.p, s.q
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = np.cos(theta)
    sn = np.sin(theta)
    h = stage.omega * sn / c ** n
    hp = dh_dtheta(theta, stage.omega, n)
    inv_m = 1.0 / c ** n
    d_inv_m = n * sn / c ** (n + 1)
    d_zm = (c * c + 2 * n * sn * sn) / c ** (2 * n + 1)
    u = np.exp(1j * phi)
    ubn = np.conj(u) ** n
    w = u * (t * (lam + (1 - lam) * inv_m) + 1j * lam * h + 1j * p * ubn)
    w_th = u * (t * (1 - lam) * d_inv_m + 1j * lam * hp)
    w_ph = 1j * w + n * p * u * ubn
    z_th = lam * (np.sin(n * phi) - q * t) * hp - (1 - lam) * _lambda_coefficient(stage) * d_zm
    z_ph = lam * (n * h * np.cos(n * phi) + t * np.sin(n * phi))
    return _stack(w_th.real, w_th.imag, z_th), _stack(w_ph.real, w_ph.imag, z_ph)


def unfold_sphere_point(theta, phi, stage):
    """Lambda-stage surface after the plane inversion; poles via the C-form pipeline."""
    if stage.alpha != 0 or stage.xi != 0 or stage.beta != 1:
        raise DomainError("the unfolding stage needs alpha = 0, xi = 0, beta = 1")
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    out = np.empty(theta.shape + (3,))
    pole = np.abs(theta) >= np.pi / 2
    if np.any(~pole):
        out[~pole] = plane_inversion(unfold_point(stage, theta[~pole], phi[~pole]), stage)
    if np.any(pole):
        out[pole] = pipeline(stage, theta[pole], phi[pole])
    return out


def pipeline(stage, theta, phi):
    """Full map (theta, phi) -> r'' valid on the closed sphere, poles included.

    Uses C = cos^2(theta), Z = sin(theta), W = u sqrt(C); cos^n(theta) is never
    divided by. At odd n with epsilon > 0 each explicit cos^n is replaced by
    sqrt(C^n + epsilon), which makes the result smooth across the poles.
    """
    s = stage.surface
    n, t, p, q = s.n, s.t, s.p, s.q
    lam, k, g = stage.lam, stage.kappa, stage.gamma
    a, b = stage.alpha, stage.beta
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct = np.clip(np.cos(theta), 0.0, None)
    C = ct * ct
    Z = np.sin(theta)
    u = np.exp(1j * phi)
    Cn = C ** n
    mn = ct ** n
    if n % 2 == 1 and stage.epsilon > 0:
        m = np.sqrt(Cn + stage.epsilon)
    else:
        m = mn
    wn = u ** n * mn
    U = t * (lam * m + 1 - lam) + 1j * lam * stage.omega * Z + 1j * p * np.conj(wn)
    R = U.real ** 2 + U.imag ** 2
    zR = (lam * (stage.omega * Z * wn.imag - t * m * (wn.real / n + q * stage.omega * Z))
          - (1 - lam) * _lambda_coefficient(stage) * Z)
    Rp = Cn * stage.xi + stage.eta * R
    if np.any(Rp <= 0):
        raise SingularMapError("pipeline hit a zero of the damping denominator")
    zp = zR / Rp
    Rk = Rp ** k
    CR = C * Rk * Rk
    D = a * CR + b * R
    if np.any(D <= 0):
        raise SingularMapError("pipeline hit a zero of the inversion denominator")
    w2 = u * ct * U * Rk * np.exp(g * zp) / D
    z2 = (a * CR - b * R) / D * expm1_over(g, zp) + g * (CR - R) / (2 * D * (a + b))
    return check_finite(_stack(w2.real, w2.imag, z2), "pipeline")


def pipeline_open(stage, h, phi):
    """Family -> damping -> inversion on the open (h, phi) chart (lambda = 1)."""
    return inversion_map(damp_map(family_point(stage.surface, h, phi), stage), stage)


def compose_naive(stage, theta, phi):
    """Literal chain theta -> h -> r -> r' -> r'' for lambda = 1; reference only."""
    h = theta_to_h(theta, stage.omega, stage.n)
    return pipeline_open(stage, h, phi)


def evaluate(stage, point):
    if point.chart == "h":
        return pipeline_open(stage, point.h, point.phi)
    return pipeline(stage, point.theta, point.phi)


def pipeline_tangents(stage, theta, phi):
    """Tangent vectors of the pipeline surface for |theta| < pi/2.

    Tangents of the pre-damping surface are pushed through the analytic damping
    and inversion Jacobians; with lambda = 1 this is the family surface.
    """
    if stage.lam == 1.0:
        h = theta_to_h(theta, stage.omega, stage.n)
        r = family_point(stage.surface, h, phi)
        r_h, r_phi = family_tangents(stage.surface, h, phi)
        r_th = r_h * dh_dtheta(theta, stage.omega, stage.n)[..., None]
    else:
        r = unfold_point(stage, theta, phi)
        r_th, r_phi = unfold_tangents(stage, theta, phi)
    rp = damp_map(r, stage)
    J = inversion_jacobian(rp, stage) @ damp_jacobian(r, stage)
    a = np.einsum("...ij,...j->...i", J, r_th)
    b = np.einsum("...ij,...j->...i", J, r_phi)
    return a, b


def rotate_z(r, delta):
    r = np.asarray(r, dtype=float)
    c, s = math.cos(delta), math.sin(delta)
    return _stack(c * r[..., 0] - s * r[..., 1], s * r[..., 0] + c * r[..., 1], r[..., 2])
