"""Topological events of the eversion: Q, D-type points, T events and triple points."""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .errors import DegenerateError, DomainError
from .surface import (
    ParamPoint, StageParams, SurfaceParams, family_point, inversion_limit_point,
)

SQRT2 = math.sqrt(2.0)
T_EVENT = (math.sqrt(17.0) - 3.0) / 2.0          # |t| of the T events, about 0.5616
T_EVENT_X = (5.0 - math.sqrt(17.0)) / (2.0 * SQRT2)  # |x| = |y| of the T locations

KINDS = ("D0", "D1", "D2", "D01", "D21", "Tplus", "Tminus", "Q", "triple")
MIRROR = {"D0": "D2", "D2": "D0", "Tplus": "Tminus", "Tminus": "Tplus",
          "D01": "D21", "D21": "D01"}


@dataclass
class EventRecord:
    kind: str
    t: float
    location: np.ndarray
    preimages: list
    at_infinity: bool = False
    note: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        self.location = np.asarray(self.location, dtype=float)

    def to_dict(self):
        pre = []
        for p in self.preimages:
            d = {"phi": p.phi}
            d.update({"h": p.h} if p.chart == "h" else {"theta": p.theta})
            pre.append(d)
        return {"kind": self.kind, "t": self.t, "location": self.location.tolist(),
                "preimages": pre, "at_infinity": self.at_infinity, "note": self.note}


def _record(kind, t, pre, params=None, **kw):
    """Event whose location is the common image of its (h, phi) preimages."""
    params = params or SurfaceParams(n=2, t=t)
    pts = [ParamPoint(phi=phi, h=h) for h, phi in pre]
    loc = family_point(params, pts[0].h, pts[0].phi)
    return EventRecord(kind, t, loc, pts, **kw)


# ---------------------------------------------------------------- local models

@dataclass
class LocalModel:
    kind: str
    t: float
    sheets: list            # implicit functions f(x, y, z) = 0, one per sheet
    patches: list           # sampled sheets, arrays (g, g, 3)
    description: str = ""

    def residuals(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.stack([f(pts[..., 0], pts[..., 1], pts[..., 2]) for f in self.sheets], axis=-1)

    def common_point(self, tol=1e-12):
        """Point where all (planar) sheets meet, or None; Q model only."""
        if self.kind != "Q":
            raise DomainError("common_point is defined for the Q model")
        M = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=float)
        rhs = np.array([0, 0, 0, self.t])
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        return sol if np.linalg.norm(M @ sol - rhs) < tol else None

    def intersection_curve(self, samples=256):
        """Analytic intersection set of the moving sheet with the fixed ones."""
        t = self.t
        s = np.linspace(-np.pi, np.pi, samples, endpoint=False)
        if self.kind in ("D0", "D2"):
            if t < 0:
                return np.zeros((0, 3))
            r = math.sqrt(t)
            return np.stack([r * np.cos(s), r * np.sin(s), 0 * s], axis=-1)
        if self.kind == "D1":
            v = np.linspace(-2, 2, samples)
            if t == 0:
                z = np.zeros_like(v)
                return np.concatenate([np.stack([v, z, z], -1), np.stack([z, v, z], -1)])
            v = np.geomspace(1e-2, 1e2, samples // 2)
            a = np.concatenate([v, -v])
            return np.stack([a, t / a, 0 * a], axis=-1)
        if self.kind in ("Tplus", "Tminus"):
            z = np.linspace(-2, 2, samples)
            x = z * z - t
            return np.concatenate([np.stack([x, x, z], -1), np.stack([x, -x, z], -1)])
        raise DomainError(f"no closed-form curve for {self.kind}")

    def triple_points(self):
        if self.kind not in ("Tplus", "Tminus"):
            raise DomainError("triple points belong to the T model")
        if self.t <= 0:
            return np.zeros((0, 3))
        r = math.sqrt(self.t)
        return np.array([[0.0, 0.0, r], [0.0, 0.0, -r]])


def local_model(kind, t, grid=33, extent=1.5):
    """Normal forms near each event type, sampled as graphs over a square."""
    a = np.linspace(-extent, extent, grid)
    U, V = np.meshgrid(a, a, indexing="ij")
    Z0 = np.zeros_like(U)

    def graph_z(f):
        return np.stack([U, V, f(U, V)], axis=-1)

    if kind in ("D0", "D2"):
        sheets = [lambda x, y, z: z, lambda x, y, z: z - (x * x + y * y - t)]
        patches = [graph_z(lambda x, y: 0 * x), graph_z(lambda x, y: x * x + y * y - t)]
        desc = "loop z = 0, x^2 + y^2 = t for t > 0"
    elif kind == "D1":
        sheets = [lambda x, y, z: z, lambda x, y, z: z - (x * y - t)]
        patches = [graph_z(lambda x, y: 0 * x), graph_z(lambda x, y: x * y - t)]
        desc = "hyperbolas x y = t, lines x = 0 and y = 0 at t = 0"
    elif kind in ("D01", "D21"):
        def moving(x, y):
            r2 = x * x + y * y
            return x * x - y * y + t * (1 + r2) * r2
        sheets = [lambda x, y, z: z, lambda x, y, z: z - moving(x, y)]
        patches = [graph_z(lambda x, y: 0 * x), graph_z(moving)]
        desc = "no intersection versus two disconnected strands, switching at t = +-1"
    elif kind in ("Tplus", "Tminus"):
        sheets = [lambda x, y, z: x - y, lambda x, y, z: x + y, lambda x, y, z: x - (z * z - t)]
        patches = [np.stack([U, U, V], -1), np.stack([U, -U, V], -1),
                   np.stack([V * V - t, U, V], -1)]
        desc = "parabolas +-y = x = z^2 - t meet the line x = y = 0 at z = +-sqrt(t)"
    elif kind == "Q":
        sheets = [lambda x, y, z: x, lambda x, y, z: y, lambda x, y, z: z,
                  lambda x, y, z: x + y + z - t]
        patches = [np.stack([Z0, U, V], -1), np.stack([U, Z0, V], -1), np.stack([U, V, Z0], -1),
                   graph_z(lambda x, y: t - x - y)]
        desc = "three coordinate planes and x + y + z = t; all four meet only at t = 0"
    else:
        raise ValueError(f"no local model for {kind!r}")
    return LocalModel(kind, float(t), sheets, patches, desc)


# ---------------------------------------------------------------- halfway moment

def d1_preimages():
    """Locations and (h, phi) preimages of the four D1 points of the halfway surface."""
    r = SQRT2
    return [
        ((r, 0.0, 0.0), [(1 - r, math.pi / 2), (1 + r, -math.pi / 2)]),
        ((-r, 0.0, 0.0), [(1 + r, math.pi / 2), (1 - r, -math.pi / 2)]),
        ((0.0, r, 0.0), [(r - 1, 0.0), (-1 - r, math.pi)]),
        ((0.0, -r, 0.0), [(-1 - r, 0.0), (r - 1, math.pi)]),
    ]


def halfway_events(n=2):
    if n == 2:
        out = [_record("Q", 0.0, [(1.0, math.pi / 2), (1.0, -math.pi / 2), (-1.0, 0.0), (-1.0, math.pi)])]
        for _, pre in d1_preimages():
            out.append(_record("D1", 0.0, pre))
        return out
    if n == 3:
        params = SurfaceParams(n=3, t=0.0)
        pre = [(1.0, math.pi / 3), (1.0, -math.pi / 3), (1.0, math.pi)]
        return [_record("triple", 0.0, pre, params,
                        note="each preimage also appears as (-h, phi + pi)")]
    raise DomainError(f"halfway events are known for n = 2 and n = 3, not {n}")


# ---------------------------------------------------------------- triple points

def displayed_quartic(t):
    """Classical quartic in s = sin(psi), ascending coefficients.

    It comes from an elimination with the opposite sign on the h cos(psi) term,
    so its roots are not the triple points (see triple_point_quartic). Its
    s = +-1 factorisation and the sign of its derivative discriminant still
    locate the T events, and the root-structure checks run on it.
    """
    t2 = t * t
    return np.array([t2 ** 3 + 12 * t2 * t2 + 4 * t2,
                     -8 * t * t2 * (4 + t2),
                     2 * t2 * (2 + 7 * t2),
                     8 * t * (1 + t2),
                     -(4 + 3 * t2 + 4 * t2 * t2)])


def triple_point_quartic(t):
    """Determinant of the triple-point linear system in s, ascending coefficients.

    Equal to (s - t)^3 ((5 t^2 - 4) s - t (t^2 + 4)); the triple root s = t is
    spurious, the simple root carries the triple points.
    """
    cubic = np.polynomial.polynomial.polypow([-t, 1.0], 3)
    return np.polynomial.polynomial.polymul(cubic, [-t * (t * t + 4), 5 * t * t - 4])


def normalized_quartic(t, which="displayed"):
    c = displayed_quartic(t) if which == "displayed" else triple_point_quartic(t)
    return c / abs(c[-1])


def derivative_discriminant(t):
    """Discriminant of d/ds of the displayed quartic, computed from its coefficients."""
    c = np.polynomial.polynomial.polyder(displayed_quartic(t))
    d, cc, b, a = c  # a s^3 + b s^2 + cc s + d
    return (18 * a * b * cc * d - 4 * b ** 3 * d + b * b * cc * cc
            - 4 * a * cc ** 3 - 27 * a * a * d * d)


def derivative_discriminant_closed(t):
    t2 = t * t
    return -(2 ** 10) * t2 ** 3 * (t2 - 1) ** 2 * (
        3388 + 4796 * t2 + 4735 * t2 ** 2 + 2084 * t2 ** 3 + 432 * t2 ** 4)


def _polish(coef, x):
    p = np.polynomial.polynomial
    d = p.polyval(x, p.polyder(coef))
    return x - p.polyval(x, coef) / d if d != 0 else x


def quartic_root_structure(t, imag_tol=1e-6):
    """The real roots (s_plus > 0, s_minus < 0) of the displayed quartic."""
    if t == 0:
        raise DegenerateError("at t = 0 the quartic is -s^4 and has only the root 0")
    coef = displayed_quartic(t)
    roots = np.polynomial.polynomial.polyroots(coef)
    real = sorted(_polish(coef, r.real) for r in roots if abs(r.imag) <= imag_tol)
    if len(real) != 2:
        raise DegenerateError(f"expected two real roots at t = {t}, found {len(real)}")
    return max(real), min(real)


@dataclass
class TriplePointSolve:
    t: float
    s: float
    psi: float
    A: float
    B: float
    wprime: float
    zprime: float
    w: float
    z: float
    h_roots: np.ndarray
    point: np.ndarray = None
    preimages: list = field(default_factory=list)
    system_residual: float = 0.0

    def to_dict(self):
        return {"t": self.t, "s": self.s, "psi": self.psi, "A": self.A, "B": self.B,
                "wprime": self.wprime, "zprime": self.zprime, "w": self.w, "z": self.z,
                "h_roots": np.asarray(self.h_roots).tolist(),
                "point": None if self.point is None else np.asarray(self.point).tolist(),
                "preimages": [[p.h, p.phi] for p in self.preimages],
                "system_residual": self.system_residual}


def triple_system(t, s, c):
    """4x4 homogeneous system in (A, B, w', z') with w' = w + B z, z' = A z."""
    tt = t * t
    e = c * (t - t * tt) / 2
    f = 2 * t * s - 1 - tt
    return np.array([
        [1.5 * t * c, s, 0.0, 1.0],
        [(2 * tt - 1) * s - t, -1.5 * t * c, -1.0, -2 * c],
        [e, s - t, -2 * c, f],
        [(tt - 1) ** 2 * s, e, f, 0.0],
    ])


def h_cubic(t, s, c, z):
    """Cubic in h (descending) whose roots are the three sheets through a triple point."""
    return np.array([s, z + 1.5 * t * c, 2 * z * c - s + t,
                     z * (t * t + 1 - 2 * t * s) + 0.5 * t * (t * t - 1) * c])


def preimage_phi(x, y, t, h):
    d = h * h + t * t - 1
    return math.atan2((y * t - x * (1 + h)) / d, (x * t - y * (1 - h)) / d)


def _solve_one(t, s, c):
    M = triple_system(t, s, c)
    _, sv, vt = np.linalg.svd(M)
    v = vt[-1]
    if abs(v[0] * s) < 1e-14:
        raise DegenerateError("normalisation A sin(psi) = 1 is singular")
    v = v / (v[0] * s)
    A, B, wp, zp = v
    z = zp / A
    w = wp - B * zp / A
    resid = float(np.max(np.abs(M @ v)))
    return A, B, wp, zp, w, z, resid


def _triple_from(t, s, c, sign):
    A, B, wp, zp, w, z, resid = _solve_one(t, s, c)
    if w < -1e-12:
        return None
    w = max(w, 0.0)
    psi = math.atan2(s, c)
    rt = math.sqrt(w)
    x, y = sign * rt * math.cos(psi / 2), sign * rt * math.sin(psi / 2)
    roots = np.roots(h_cubic(t, s, c, z))
    hs = np.sort(roots.real[np.abs(roots.imag) < 1e-7])
    pre = [ParamPoint(phi=preimage_phi(x, y, t, h), h=float(h)) for h in hs]
    return TriplePointSolve(t=t, s=s, psi=psi, A=A, B=B, wprime=wp, zprime=zp, w=w, z=z,
                            h_roots=hs, point=np.array([x, y, z]), preimages=pre,
                            system_residual=resid)


def triple_root(t):
    """The root of the system determinant with t s < 0, or None when |s| > 1."""
    den = 5 * t * t - 4
    if t == 0 or den == 0:
        return None
    s = t * (t * t + 4) / den
    if t * s >= 0 or abs(s) > 1:
        return None
    return _polish(triple_point_quartic(t), s) if abs(s) < 1 else s


def triple_points(t):
    """The four triple points of the p = 1, q = 0, n = 2 surface at time t."""
    if t == 0 or abs(t) >= 1:
        return []
    s = triple_root(t)
    if s is None:
        return []
    c = math.sqrt(max(0.0, 1 - s * s))
    out = []
    for cc in ((c, -c) if c > 0 else (0.0,)):
        for sign in (1.0, -1.0):
            sol = _triple_from(t, s, cc, sign)
            if sol is not None:
                out.append(sol)
    return out


def t_of_T_events():
    """(t of T+, t of T-): the birth happens at negative t, the death at positive t."""
    return -T_EVENT, T_EVENT


def T_events():
    """Records for the two T+ and two T- events with three preimages each.

    At t = -(sqrt 17 - 3)/2 the merging pairs sit on x = y (s = 1); at the
    mirrored time on x = -y (s = -1).
    """
    out = []
    for kind, t, s in (("Tplus", -T_EVENT, 1.0), ("Tminus", T_EVENT, -1.0)):
        for sign in (1.0, -1.0):
            sol = _triple_from(t, s, 0.0, sign)
            out.append(EventRecord(kind, t, sol.point, sol.preimages,
                                   note="pair of triple points merging"))
    return out


def w_zero_z(t, h):
    """z of the z-axis double point, from the first form of the w = 0 fraction (h^2 = 1 - t^2)."""
    return (4 * h * (h - 1) * t - t * ((h - 1) ** 2 - t * t)) / (2 * ((h - 1) ** 2 + t * t))


# ---------------------------------------------------------------- D events

def d_events(n=2, q=2.0 / 3.0, stage=None):
    """D0 / D2 at the origin at t = -+1 and the D01 / D21 events at infinity at |q t| = 1."""
    if n != 2:
        raise DomainError("D events are tabulated for n = 2")
    out = []
    for kind, t, pre in (("D0", -1.0, [(0.0, math.pi / 4), (0.0, -3 * math.pi / 4)]),
                         ("D2", 1.0, [(0.0, 3 * math.pi / 4), (0.0, -math.pi / 4)])):
        for _ in range(2):
            out.append(_record(kind, t, pre, note="the two loops are born / die together"))
    if q > 0:
        st = stage or StageParams()
        T = 1.0 / q
        for kind, t in (("D01", -T), ("D21", T)):
            # only the closing stage gives this point a finite location
            pre = [ParamPoint(phi=0.0, theta=math.pi / 2), ParamPoint(phi=0.0, theta=-math.pi / 2)]
            out.append(EventRecord(kind, t, inversion_limit_point(st), pre, at_infinity=True,
                                   note="location is the image of h = +-inf under the inversion"))
    return out


def extra_d1(t=0.0, stage=None):
    st = stage or StageParams()
    pre = [ParamPoint(phi=0.0, theta=math.pi / 2), ParamPoint(phi=0.0, theta=-math.pi / 2)]
    return EventRecord("D1", t, inversion_limit_point(st), pre,
                       note="independent D1; its time is a free choice")


def _sweep_range(schedule):
    if schedule is None:
        T = 1.5
        return -T, T
    return schedule.sweep_range()


def event_timeline(schedule=None, extra_d1_t=None):
    """Events met while t sweeps through the schedule, in the order they happen.

    The canonical 13 events are always present; the independent D1 is added
    only when extra_d1_t is given.
    """
    t0, t1 = _sweep_range(schedule)
    reverse = t0 > t1
    lo, hi = min(t0, t1), max(t0, t1)
    d = [e for e in d_events(q=0.0)]
    events = d[:2] + T_events()[:2] + halfway_events(2)
    if extra_d1_t is not None:
        events.append(extra_d1(float(extra_d1_t)))
    events += T_events()[2:] + d[2:]
    events = sorted(events, key=lambda e: e.t)  # stable: keeps Q before the D1 points
    inside = [e for e in events if lo <= e.t <= hi]
    if not (lo < 0 < hi) or len(inside) < len(events):
        warnings.warn(f"schedule sweeps t over [{lo}, {hi}] only; timeline is partial")
    if reverse:
        inside = [EventRecord(MIRROR.get(e.kind, e.kind), e.t, e.location, e.preimages,
                              e.at_infinity, e.note) for e in reversed(inside)]
        # events at the same time keep their canonical order
        inside = _regroup(inside)
    return inside


def _regroup(events):
    out, i = [], 0
    while i < len(events):
        j = i
        while j < len(events) and events[j].t == events[i].t:
            j += 1
        out.extend(reversed(events[i:j]))
        i = j
    return out


def encoding(events):
    return [e.kind for e in events]
