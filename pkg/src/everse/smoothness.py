"""Immersion checks: normals, margins, Jacobian determinants and pole regularity."""
from dataclasses import dataclass, field, asdict
import math

import numpy as np

from .errors import DomainError, SmoothnessError
from .surface import (
    StageParams, damp_map, family_point, pipeline,
    pipeline_tangents, unfold_point, unfold_tangents,
)

FD_DOMAIN_STEP = 1e-5


@dataclass
class Margin:
    value: float
    h: float
    phi: float

    @property
    def passed(self):
        return self.value > 0


@dataclass
class SmoothnessReport:
    margin: float
    min_normal_norm: float
    min_jacobian: float
    passed: bool
    value_jump: float = 0.0
    slope_jump: float = 0.0
    derivative_jumps: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def normal_vector(params, h, phi):
    """r_h x r_phi from the closed complex form (n_x + i n_y, n_z)."""
    n, t, p, q = params.n, params.t, params.p, params.q
    h = np.asarray(h, dtype=float)
    phi = np.asarray(phi, dtype=float)
    u = np.exp(1j * phi)
    snq = np.sin(n * phi) - q * t
    nxy = u * (n * h * np.cos(n * phi) + q * t * t
               + 1j * (p * (n - 1) * np.conj(u) ** n - h) * snq)
    nz = h - p * (n - 1) * np.cos(n * phi)
    return np.stack(np.broadcast_arrays(nxy.real, nxy.imag, nz), axis=-1)


def fd_normal(params, h, phi, step=FD_DOMAIN_STEP):
    rh = (family_point(params, h + step, phi) - family_point(params, h - step, phi)) / (2 * step)
    rp = (family_point(params, h, phi + step) - family_point(params, h, phi - step)) / (2 * step)
    return np.cross(rh, rp)


def smoothness_margin(params):
    """(n-1) p (1 - q|t|) + q t^2, with a point where |normal| equals it.

    A positive value certifies the family is immersed. It is not the minimum
    of |normal| in general; that is reported separately by stage_report.
    The witness sits at sin(n phi) = sgn t (taking +1 at t = 0), h = 0.
    """
    n, t, p, q = params.n, params.t, params.p, params.q
    value = (n - 1) * p * (1 - q * abs(t)) + q * t * t
    sgn = 1.0 if t >= 0 else -1.0
    return Margin(value=value, h=0.0, phi=sgn * math.pi / (2 * n))


def jacobian_damp(r, stage):
    r = np.asarray(r, dtype=float)
    w2 = r[..., 0] ** 2 + r[..., 1] ** 2
    xi, eta, k = stage.xi, stage.eta, stage.kappa
    s = xi + eta * w2
    if np.any(s <= 0):
        raise DomainError("damping Jacobian is singular where xi + eta |w|^2 = 0")
    return (xi * xi + xi * eta * w2 * (2 - 2 * k) + eta * eta * w2 * w2 * (1 - 2 * k)) / s ** (3 + 2 * k)


def jacobian_inversion(rp, stage):
    # each of the three output components carries a factor exp(gamma z'),
    # so the determinant has exp(3 gamma z')
    rp = np.asarray(rp, dtype=float)
    den = stage.alpha + stage.beta * (rp[..., 0] ** 2 + rp[..., 1] ** 2)
    if np.any(den <= 0):
        raise DomainError("inversion Jacobian is singular where alpha + beta |w'|^2 = 0")
    return np.exp(3 * stage.gamma * rp[..., 2]) / den ** 2


def fd_jacobian(f, r):
    """Central-difference Jacobian of a map R^3 -> R^3 at points r (..., 3)."""
    r = np.asarray(r, dtype=float)
    step = 1e-6 * (1 + np.linalg.norm(r, axis=-1))[..., None]
    J = np.zeros(r.shape[:-1] + (3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        J[..., :, j] = (f(r + step * e) - f(r - step * e)) / (2 * step)
    return J


def lambda_stage(n=2, t=1.5, lam=0.0, omega=2.0, eta=1.0, q=None, epsilon=0.0):
    """Unfolding-stage parameters (alpha = xi = 0, beta = 1, p = 0)."""
    if q is None:
        q = 1.0 / abs(t)
    return StageParams.make(n=n, t=t, p=0.0, q=q, xi=0.0, eta=eta, alpha=0.0,
                            beta=1.0, omega=omega, lam=lam, epsilon=epsilon)


def radial_monotonicity_check(stage, samples=1000, n_phi=8):
    """True when x''^2 + y''^2 grows with C = cos^2(theta) on both hemispheres."""
    if abs(stage.t) <= 1:
        raise DomainError("the radial check applies to the |t| > 1 regime")
    C = np.linspace(0.0, 1.0, samples)
    theta = np.arccos(np.sqrt(C))
    phi = np.linspace(-np.pi, np.pi, n_phi, endpoint=False)
    ok = True
    for sign in (1.0, -1.0):
        r = pipeline(stage, sign * theta[:, None], phi[None, :])
        rad = r[..., 0] ** 2 + r[..., 1] ** 2
        d = np.diff(rad, axis=0)
        scale = np.max(np.abs(rad)) + 1e-300
        ok &= bool(np.all(d >= -1e-13 * scale))
        ok &= bool(np.all(d[1:-1] > 0))
    return ok


def _pole_path(stage, phi0, s, pole=1.0):
    # straight line through the pole on the parameter sphere
    s = np.asarray(s, dtype=float)
    theta = pole * (np.pi / 2 - np.abs(s))
    phi = np.where(s < 0, phi0, phi0 + np.pi)
    return pipeline(stage, theta, phi)


def pole_derivative_jumps(stage, phi0=0.3, delta=0.02, degree=7, samples=60, pole=1.0):
    """Jumps of derivatives 0..4 across a pole, from one-sided polynomial fits."""
    s = np.linspace(0.0, delta, samples)
    right = _pole_path(stage, phi0, s, pole)
    left = _pole_path(stage, phi0, -s, pole)
    cr = np.polynomial.polynomial.polyfit(s, right, degree)
    cl = np.polynomial.polynomial.polyfit(-s, left, degree)
    return [float(np.max(np.abs(cr[k] - cl[k])) * math.factorial(k)) for k in range(5)]


def pole_regularity_check(stage, tol=1e-6, phis=(0.3, 1.1, 2.5)):
    """Continuity of value and first derivative across both poles.

    Value jumps are measured directly. The slope jump compares one-sided
    second-order differences with step 1e-4, and the higher-order jumps come
    from polynomial fits on each side.
    """
    if stage.eta <= 0 or stage.beta <= 0:
        raise DomainError("pole regularity needs a closed stage (eta, beta > 0)")
    hstep = 1e-4
    vj = sj = 0.0
    jumps = [0.0] * 5
    for pole in (1.0, -1.0):
        for phi0 in phis:
            r = lambda s: _pole_path(stage, phi0, s, pole)
            a = pipeline(stage, pole * np.pi / 2, phi0)
            b = pipeline(stage, pole * np.pi / 2, phi0 + np.pi)
            vj = max(vj, float(np.max(np.abs(a - b))))
            right = (-3 * r(0.0) + 4 * r(hstep) - r(2 * hstep)) / (2 * hstep)
            left = (3 * r(0.0) - 4 * r(-hstep) + r(-2 * hstep)) / (2 * hstep)
            scale = 1.0 + float(np.max(np.abs(right)))
            sj = max(sj, float(np.max(np.abs(right - left))) / scale)
            jumps = [max(x, y) for x, y in zip(jumps, pole_derivative_jumps(stage, phi0, pole=pole))]
    passed = vj < tol and sj < tol
    return SmoothnessReport(margin=smoothness_margin(stage.surface).value,
                            min_normal_norm=float("nan"), min_jacobian=float("nan"),
                            passed=passed, value_jump=vj, slope_jump=sj,
                            derivative_jumps=jumps)


def h0_regularity_value(stage):
    """lam q |t| omega + (1-lam) eta^{1+kappa} |t|^{2 kappa}; both terms carry sgn t
    in the actual tangent, so the magnitude is what decides regularity at h = 0."""
    t, k = abs(stage.t), stage.kappa
    return (stage.lam * stage.surface.q * t * stage.omega
            + (1 - stage.lam) * stage.eta ** (1 + k) * t ** (2 * k))


def stage_report(stage, grid=(200, 200), H=3.0):
    """Sampled immersion report for one stage."""
    params = stage.surface
    m = smoothness_margin(params).value
    nh, nphi = grid
    phi = np.linspace(-np.pi, np.pi, nphi, endpoint=False)
    notes = []
    if stage.lam == 1.0:
        h = np.linspace(-H, H, nh)
        hh, pp = np.meshgrid(h, phi, indexing="ij")
        nrm = np.linalg.norm(normal_vector(params, hh, pp), axis=-1)
        r = family_point(params, hh, pp)
    else:
        theta = np.linspace(-np.pi / 2, np.pi / 2, nh + 2)[1:-1]
        th, pp = np.meshgrid(theta, phi, indexing="ij")
        a, b = unfold_tangents(stage, th, pp)
        # normalise by the tangent scales so the ratio is a sine of an angle
        nrm = np.linalg.norm(np.cross(a, b), axis=-1) / (
            np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1))
        r = unfold_point(stage, th, pp)
        notes.append("normal norm is the sine of the tangent angle for the unfolding stage")
    min_normal = float(np.min(nrm))
    jd = jacobian_damp(r, stage)
    ji = jacobian_inversion(damp_map(r, stage), stage)
    min_jac = float(min(np.min(jd), np.min(ji)))
    passed = m > 0 and min_normal > 0 and min_jac > 0
    return SmoothnessReport(margin=m, min_normal_norm=min_normal, min_jacobian=min_jac,
                            passed=bool(passed), notes=notes)


def precheck(stage, grid=(64, 64)):
    """Raise SmoothnessError carrying the report when a stage is not an immersion."""
    rep = stage_report(stage, grid=grid)
    if not rep.passed:
        raise SmoothnessError(
            f"stage fails the smoothness precheck (margin {rep.margin:.3g}, "
            f"min |normal| {rep.min_normal_norm:.3g})", rep)
    return rep


def pipeline_normal_rank(stage, theta, phi):
    """Norm of the cross product of pipeline tangents, normalised by their lengths."""
    a, b = pipeline_tangents(stage, theta, phi)
    return np.linalg.norm(np.cross(a, b), axis=-1) / (
        np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1))
