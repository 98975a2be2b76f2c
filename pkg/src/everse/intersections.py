"""Self-intersection curves: analytic branches, preimage search and a mesh-based detector."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateError, DomainError
from .smoothness import smoothness_margin
from .surface import SurfaceParams, family_point, family_tangents, normalize_angle


@dataclass
class IntersectionBranch:
    kind: str
    phi_plus: np.ndarray
    phi_minus: np.ndarray
    h_plus: np.ndarray
    h_minus: np.ndarray
    points: np.ndarray
    note: str = ""

    def preimages(self):
        """The two domain points (h1, phi1), (h2, phi2) of every sample."""
        h1 = self.h_plus + self.h_minus
        h2 = self.h_plus - self.h_minus
        p1 = self.phi_plus + self.phi_minus
        p2 = self.phi_plus - self.phi_minus
        return (h1, p1), (h2, p2)

    def __len__(self):
        return len(self.points)


@dataclass
class IntersectionCloud:
    segments: np.ndarray           # (k, 2, 3)
    pair_ids: np.ndarray           # (k, 2) triangle indices, first < second
    candidate_pairs: int = 0

    @property
    def points(self):
        if len(self.segments) == 0:
            return np.zeros((0, 3))
        mid = self.segments.mean(axis=1)
        return np.concatenate([self.segments[:, 0], mid, self.segments[:, 1]])

    def __len__(self):
        return len(self.segments)


# ---------------------------------------------------------------- preimages

def _gauss_newton(params, target, h, phi, iters=60, tol=1e-13):
    """Batched Levenberg-damped Gauss-Newton on |family_point(h, phi) - target|."""
    h = h.astype(float).copy()
    phi = phi.astype(float).copy()
    mu = np.full(h.shape, 1e-6)
    f = family_point(params, h, phi) - target
    err = np.linalg.norm(f, axis=-1)
    for _ in range(iters):
        a, b = family_tangents(params, h, phi)
        aa = np.einsum("ij,ij->i", a, a)
        bb = np.einsum("ij,ij->i", b, b)
        ab = np.einsum("ij,ij->i", a, b)
        ga = np.einsum("ij,ij->i", a, f)
        gb = np.einsum("ij,ij->i", b, f)
        m11, m22 = aa + mu * (1 + aa), bb + mu * (1 + bb)
        det = m11 * m22 - ab * ab
        dh = -(m22 * ga - ab * gb) / det
        dp = -(m11 * gb - ab * ga) / det
        h_new, p_new = h + dh, phi + dp
        f_new = family_point(params, h_new, p_new) - target
        e_new = np.linalg.norm(f_new, axis=-1)
        better = e_new < err
        h = np.where(better, h_new, h)
        phi = np.where(better, p_new, phi)
        f = np.where(better[:, None], f_new, f)
        err = np.where(better, e_new, err)
        mu = np.where(better, mu * 0.3, mu * 10.0)
        if np.all((err < tol) | (mu > 1e12)):
            break
    return h, phi, err


def _merge(h, phi, radius=1e-6):
    keep = []
    for i in np.argsort(h, kind="stable"):
        dup = False
        for j in keep:
            dphi = abs(normalize_angle(phi[i] - phi[j]))
            if abs(h[i] - h[j]) < radius and dphi < radius:
                dup = True
                break
        if not dup:
            keep.append(i)
    return keep


def find_preimages(point, params, tol=1e-8, H=3.0, grid=(400, 400), chunk=500_000):
    """All (h, phi) with |family_point - point| < tol, h in [-H, H].

    A coarse grid is scanned for local minima of the distance, each candidate is
    polished by damped Gauss-Newton, and duplicates closer than 1e-6 are merged.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    point = np.asarray(point, dtype=float)
    nh, nphi = grid
    hs = np.linspace(-H, H, nh)
    phis = np.linspace(-np.pi, np.pi, nphi, endpoint=False)
    d = np.empty((nh, nphi))
    rows_per = max(1, chunk // nphi)
    for i in range(0, nh, rows_per):
        hh, pp = np.meshgrid(hs[i:i + rows_per], phis, indexing="ij")
        d[i:i + rows_per] = np.linalg.norm(family_point(params, hh, pp) - point, axis=-1)
    # local minima over the 8-neighbourhood, periodic in phi, open in h
    pad = np.pad(d, ((1, 1), (0, 0)), constant_values=np.inf)
    is_min = np.ones_like(d, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = np.roll(pad, dj, axis=1)[1 + di:1 + di + nh]
            is_min &= d <= nb
    step = max(2 * H / (nh - 1), 2 * np.pi / nphi)
    speed = 1.0 + H + abs(params.t) + params.p * params.n
    cand = np.argwhere(is_min & (d < 2 * speed * step))
    if len(cand) == 0:
        return []
    h0 = hs[cand[:, 0]]
    p0 = phis[cand[:, 1]]
    h, phi, err = _gauss_newton(params, point, h0, p0)
    ok = (err < tol) & (np.abs(h) <= H + 1e-9)
    h, phi = h[ok], normalize_angle(phi[ok])
    keep = _merge(h, np.atleast_1d(phi))
    return sorted(((float(h[i]), float(np.atleast_1d(phi)[i])) for i in keep))


def preimage_count(point, params, tol=1e-8, **kw):
    return len(find_preimages(point, params, tol=tol, **kw))


# ---------------------------------------------------------------- analytic curves

def quadrifolium_curve(samples=2000):
    """Self-intersection curve of the halfway n = 2 surface, phi over a 4 pi interval."""
    phi = np.linspace(0.0, 4 * np.pi, samples, endpoint=False)
    pts = np.stack([math.sqrt(2) * np.cos(2 * phi) * np.cos(phi),
                    math.sqrt(2) * np.cos(2 * phi) * np.sin(phi),
                    -0.5 * np.sin(4 * phi)], axis=-1)
    # preimage pairs: phi_plus = -phi up to pi, cos(phi_minus) = |S|/sqrt 2 and
    # h_minus = sqrt 2 sgn(S) sin(phi_minus); the lift of phi_plus mod 2 pi is
    # the one whose image has the sign of (x, y) in the curve formula
    php = -phi
    S = np.sin(2 * php)
    phm = np.arccos(np.abs(S) / math.sqrt(2))
    hp = np.cos(2 * php)
    hm = math.sqrt(2) * np.sign(S) * np.sin(phm)
    img = family_point(SurfaceParams(n=2), hp + hm, php + phm)
    flip = np.sum(img[:, :2] * pts[:, :2], axis=-1) < 0
    php = np.where(flip, php + np.pi, php)
    return IntersectionBranch("quadrifolium", php, phm, hp, hm, pts)


def trifolium_curve(samples=2000, p=1.0):
    """Self-intersection curve of the Boy surface (n = 3, t = 0)."""
    php = np.linspace(0.0, np.pi, samples, endpoint=False)
    c2m = -0.5 * np.cos(6 * php)
    if np.any(np.abs(c2m) > 1):
        raise DomainError("cos 2 phi_minus left [-1, 1]")
    phm = 0.5 * np.arccos(c2m)
    w = -p * np.exp(-2j * php) * np.sin(6 * php)
    z = -(p / 4) * np.sin(12 * php)
    pts = np.stack([w.real, w.imag, z], axis=-1)
    hp = 2 * p * np.cos(3 * php) * np.cos(phm)
    hm = 2 * p * np.sin(3 * php) * np.sin(phm)
    return IntersectionBranch("trifolium", php, phm, hp, hm, pts)


def axis_lines(params, H=3.0, samples=400):
    """Straight self-intersection lines in the z = 0 plane at t = 0 (n even)."""
    n, p = params.n, params.p
    k = n // 2
    out = []
    extent = H - p
    hm = np.linspace(-extent, extent, samples)
    for j in range(n):
        php = np.pi * j / n
        hp = (-1) ** (j + k - 1) * p
        pts = family_point(params, hp + hm, php + np.pi / 2)
        out.append(IntersectionBranch("axis_line", np.full(samples, php),
                                      np.full(samples, np.pi / 2), np.full(samples, hp), hm, pts))
    return out


def _clustered(a, b, samples):
    u = np.linspace(0.0, 1.0, samples)
    return a + (b - a) * (1 - np.cos(np.pi * u)) / 2


def cos2_phi_minus(S, params):
    t, p, q = params.t, params.p, params.q
    return (S + q * t) * (p * S - t) / (2 * p - t * S)


def valid_intervals(params):
    """Maximal intervals of S = sin(2 phi_plus) in [-1, 1] with 0 <= cos^2(phi_minus) <= 1.

    The zeros of cos^2 sit at S = -qt and S = t/p; for p = 1, q = 0 this gives
    [-1, 0] and [t, 1] when t > 0, mirrored for t < 0.
    """
    t, p, q = params.t, params.p, params.q
    if t == 0 and q * t == 0:
        return [(-1.0, 1.0)]
    cuts = {-1.0, 1.0, -q * t}
    if p > 0:
        cuts.add(t / p)
        for r in np.roots([p, p * q * t, -(q * t * t + 2 * p)]):
            if abs(r.imag) < 1e-14:
                cuts.add(float(r.real))
    if t != 0:
        cuts.add(2 * p / t)
    cuts = sorted(c for c in cuts if -1.0 <= c <= 1.0)
    out = []
    for a, b in zip(cuts, cuts[1:]):
        if b - a < 1e-15:
            continue
        c2 = cos2_phi_minus(0.5 * (a + b), params)
        if 0.0 <= c2 <= 1.0:
            if out and out[-1][1] == a:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    return out


def general_curve(params, samples=400, rmax=None):
    """Self-intersection branches of the n = 2 family.

    Every valid sin(2 phi_plus) interval is swept along the four arcs of phi_plus
    and both signs of cos(phi_minus). Sample points are evaluated from the first
    preimage; the closed forms in h_plus, h_minus are used for the preimages.
    """
    if params.n != 2:
        raise DomainError("general_curve handles n = 2 only")
    if smoothness_margin(params).value <= 0:
        raise DomainError("surface is not an immersion for these parameters")
    t, p, q = params.t, params.p, params.q
    if t == 0 and q == 0:
        quad = quadrifolium_curve(4 * samples)
        quad.points = quad.points * p
        quad.h_plus = quad.h_plus * p
        quad.h_minus = quad.h_minus * p
        return [quad] + axis_lines(params)
    branches = []
    qt = q * t
    for a, b in valid_intervals(params):
        S = _clustered(a, b, samples)
        c2 = np.clip(cos2_phi_minus(S, params), 0.0, 1.0)
        # (pS - t)/cos(phi_minus) without the 0/0 at S = t/p
        ratio = np.sqrt(np.abs(p * S - t) * (2 * p - t * S) / np.maximum(np.abs(S + qt), 1e-300))
        ratio *= np.sign(p * S - t)
        base = np.arcsin(np.clip(S, -1, 1))
        for arc in (base, np.pi - base, base + 2 * np.pi, 3 * np.pi - base):
            php = arc / 2
            hp = p * np.cos(2 * php)
            for sign in (1.0, -1.0):
                cm = sign * np.sqrt(c2)
                phm = np.arccos(cm)
                hm = np.sin(phm) * ratio * sign
                h1, p1 = hp + hm, php + phm
                pts = family_point(params, h1, p1)
                good = np.all(np.isfinite(pts), axis=-1)
                if rmax is not None:
                    good &= np.linalg.norm(pts, axis=-1) <= rmax
                br = IntersectionBranch("general", php[good], phm[good], hp[good], hm[good],
                                        pts[good], note=f"S in [{a:.6g}, {b:.6g}]")
                if len(br):
                    branches.append(br)
    if abs(t) <= p and t != 0:
        hz = math.sqrt(p * p - t * t)
        s2 = t / p
        pts, php, hps = [], [], []
        for h in (hz, -hz):
            ph = 0.5 * math.atan2(s2, h / p)
            # the second preimage sits at phi_plus +- pi/2, h_minus = 0
            pts.append(family_point(params, h, ph + np.pi / 2))
            php.append(ph)
            hps.append(h)
        branches.append(IntersectionBranch("z_segment", np.array(php), np.full(2, np.pi / 2),
                                           np.array(hps), np.zeros(2), np.array(pts),
                                           note="double points on the z axis"))
    return branches


def clip_to_domain(branches, H):
    """Keep samples whose two preimages both satisfy |h| <= H."""
    out = []
    for br in branches:
        (h1, _), (h2, _) = br.preimages()
        keep = (np.abs(h1) <= H) & (np.abs(h2) <= H)
        if np.any(keep):
            out.append(IntersectionBranch(br.kind, br.phi_plus[keep], br.phi_minus[keep],
                                          br.h_plus[keep], br.h_minus[keep], br.points[keep],
                                          br.note))
    return out


def branch_points(branches):
    pts = [br.points for br in branches if len(br)]
    return np.concatenate(pts) if pts else np.zeros((0, 3))


# ---------------------------------------------------------------- monotonicity

def w_of_S(S, params):
    """x^2 + y^2 along the branch, in terms of S = -sin(2 phi_plus)."""
    t, p, q = params.t, params.p, params.q
    return ((p * S + t) * ((t * t + 4 * p * q * t * t) * S * S + 4 * p * (p + t * S) * (1 - S * S)
                           + 4 * p * p * q * q * t * t)) / ((S - q * t) * (2 * p + S * t))


def der_polynomial(S, params):
    """-(S - qt)^2 (2p + S t)^2 w'(S) in closed form."""
    t, p = params.t, params.p
    qq = params.q * t
    return (qq * S ** 2 * t ** 4
            + 8 * p ** 4 * (2 * S ** 3 + qq * (1 + qq ** 2) - 3 * qq * S ** 2)
            + p * S * t ** 3 * (3 * S ** 3 + 4 * qq + S * (2 + 4 * qq ** 2) - 6 * qq * S ** 2)
            + 2 * p ** 2 * t ** 2 * (4 * S ** 5 + 4 * S * (1 + 3 * qq ** 2) + S ** 3 * (6 + 4 * qq ** 2)
                                     + 2 * qq * (1 - qq ** 2) - 13 * qq * S ** 2 - 8 * qq * S ** 4)
            + 4 * p ** 3 * t * (2 + 2 * qq ** 2 + 7 * S ** 4 + S ** 2 * (1 + 7 * qq ** 2) - 14 * qq * S ** 3))


def y_over_x(k, t):
    """y/x on the [t, 1] branch for p = 1, q = 0 as a function of k = tan(phi_plus)."""
    return k * (t * k + 1 - k * k) / (t * k - 1 + k * k)


def y_over_x_derivative(k, t):
    d = t * k - 1 + k * k
    num = (2 * t * k + 1 - 3 * k * k) * d - k * (t * k + 1 - k * k) * (t + 2 * k)
    return num / (d * d)


@dataclass
class MonotonicityReport:
    min_der: float
    s_range: tuple
    min_neg_slope: float = float("nan")
    passed: bool = False
    notes: list = field(default_factory=list)


def monotonicity_witness(params, samples=4001):
    """Check that x^2+y^2 is monotone along the [-1, -qt] branch and, for p = 1, q = 0,
    that y/x is monotone in tan(phi_plus)."""
    t, q = params.t, params.q
    if abs(q * t) >= 1:
        raise DomainError("monotonicity needs |qt| < 1")
    if params.n != 2:
        raise DomainError("n = 2 only")
    lo = max(0.0, q * abs(t))
    S = np.linspace(lo, 1.0, samples)
    if q * abs(t) > 0:
        S = S[1:]  # w(S) has its pole at S = qt
    sp = SurfaceParams(n=2, t=abs(t), p=params.p, q=q)
    der = der_polynomial(S, sp)
    rep = MonotonicityReport(min_der=float(np.min(der)), s_range=(float(S[0]), float(S[-1])))
    ok = rep.min_der > 0
    if params.p == 1 and q == 0 and 0 < abs(t) <= 1:
        k = np.geomspace(1e-3, 1e3, samples)
        tt = abs(t)
        d = t * 0 + (tt * k - 1 + k * k)
        k = k[np.abs(d) > 1e-6]
        g = y_over_x_derivative(k, tt)
        rep.min_neg_slope = float(np.min(-g))
        ok = ok and rep.min_neg_slope > 0
        rep.notes.append("y/x strictly decreasing in tan(phi_plus) on both sides of its pole")
    rep.passed = bool(ok)
    return rep


# ---------------------------------------------------------------- mesh detector

def _morton(cent, lo, hi):
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    q = np.clip(((cent - lo) / span * 1023).astype(np.int64), 0, 1023)

    def spread(v):
        v = (v | (v << 16)) & 0x030000FF
        v = (v | (v << 8)) & 0x0300F00F
        v = (v | (v << 4)) & 0x030C30C3
        v = (v | (v << 2)) & 0x09249249
        return v

    return (spread(q[:, 0]) << 2) | (spread(q[:, 1]) << 1) | spread(q[:, 2])


class TriangleBVH:
    """Implicit binary tree over Morton-sorted triangles.

    Leaves hold `leaf` consecutive triangles; level boxes are built bottom up
    by merging sibling boxes, so the whole build is a handful of numpy passes.
    """

    def __init__(self, tri_lo, tri_hi, leaf=4):
        m = len(tri_lo)
        cent = 0.5 * (tri_lo + tri_hi)
        order = np.argsort(_morton(cent, cent.min(axis=0), cent.max(axis=0)), kind="stable")
        self.order = order
        self.leaf = leaf
        nleaf = max(1, -(-m // leaf))
        size = 1
        while size < nleaf:
            size *= 2
        lo = np.full((size, leaf, 3), np.inf)
        hi = np.full((size, leaf, 3), -np.inf)
        flat_lo = lo.reshape(-1, 3)
        flat_hi = hi.reshape(-1, 3)
        flat_lo[:m] = tri_lo[order]
        flat_hi[:m] = tri_hi[order]
        self.levels = [(lo.min(axis=1), hi.max(axis=1))]
        while len(self.levels[-1][0]) > 1:
            l, h = self.levels[-1]
            self.levels.append((np.minimum(l[0::2], l[1::2]), np.maximum(h[0::2], h[1::2])))
        self.levels.reverse()  # levels[0] is the root
        self.count = m

    def self_pairs(self, pad=0.0):
        """Candidate triangle pairs (i < j, original ids) with overlapping boxes."""
        pairs = np.zeros((1, 2), dtype=np.int64)
        for depth in range(1, len(self.levels)):
            lo, hi = self.levels[depth]
            a, b = pairs[:, 0], pairs[:, 1]
            ca = np.stack([2 * a, 2 * a + 1], axis=1)
            cb = np.stack([2 * b, 2 * b + 1], axis=1)
            xa = np.repeat(ca, 2, axis=1).reshape(-1)
            xb = np.tile(cb, (1, 2)).reshape(-1)
            keep = xa <= xb
            xa, xb = xa[keep], xb[keep]
            ov = np.all((lo[xa] <= hi[xb] + pad) & (lo[xb] <= hi[xa] + pad), axis=1)
            pairs = np.stack([xa[ov], xb[ov]], axis=1)
        # expand leaves into triangle pairs
        L = self.leaf
        ia = (pairs[:, 0:1] * L + np.arange(L)[None, :])
        ib = (pairs[:, 1:2] * L + np.arange(L)[None, :])
        ta = np.repeat(ia, L, axis=1).reshape(-1)
        tb = np.tile(ib, (1, L)).reshape(-1)
        keep = (ta < tb) & (tb < self.count)
        ta, tb = self.order[ta[keep]], self.order[tb[keep]]
        return np.stack([np.minimum(ta, tb), np.maximum(ta, tb)], axis=1)


def _tri_segments(P, Q, eps=1e-10):
    """Vectorised triangle-triangle intersection segments.

    P, Q are (k, 3, 3). Returns (hit mask, segments (k, 2, 3)). Coplanar and
    touching-within-eps pairs are treated as non-intersecting.
    """
    def plane(T):
        n = np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0])
        nn = np.linalg.norm(n, axis=1, keepdims=True)
        n = n / np.where(nn > 0, nn, 1.0)
        return n, np.einsum("ij,ij->i", n, T[:, 0])

    nP, dP = plane(P)
    nQ, dQ = plane(Q)
    scale = np.maximum(np.abs(P).max(axis=(1, 2)), np.abs(Q).max(axis=(1, 2))) + 1.0
    tol = eps * scale
    sQ = np.einsum("kij,kj->ki", Q, nP) - dP[:, None]
    sP = np.einsum("kij,kj->ki", P, nQ) - dQ[:, None]
    sQ = np.where(np.abs(sQ) < tol[:, None], 0.0, sQ)
    sP = np.where(np.abs(sP) < tol[:, None], 0.0, sP)
    hit = ~(np.all(sQ > 0, axis=1) | np.all(sQ < 0, axis=1)
            | np.all(sP > 0, axis=1) | np.all(sP < 0, axis=1))
    hit &= ~(np.all(sQ == 0, axis=1) | np.all(sP == 0, axis=1))
    direction = np.cross(nP, nQ)
    dn = np.linalg.norm(direction, axis=1)
    hit &= dn > 1e-12
    direction = direction / np.where(dn > 0, dn, 1.0)[:, None]

    def clip(T, s):
        # points where the triangle edges cross the other plane
        pts = np.full((len(T), 2, 3), np.nan)
        cnt = np.zeros(len(T), dtype=int)
        for i, j in ((0, 1), (1, 2), (2, 0)):
            si, sj = s[:, i], s[:, j]
            on_i = si == 0
            cross = (si * sj < 0)
            u = np.where(cross, si / np.where(cross, si - sj, 1.0), 0.0)
            x = T[:, i] + u[:, None] * (T[:, j] - T[:, i])
            for mask, val in ((on_i, T[:, i]), (cross, x)):
                put0 = mask & (cnt == 0)
                put1 = mask & (cnt == 1)
                pts[put0, 0] = val[put0]
                pts[put1, 1] = val[put1]
                cnt = cnt + (mask & (cnt < 2))
        single = cnt == 1
        pts[single, 1] = pts[single, 0]
        return pts, cnt >= 1

    segP, okP = clip(P, sP)
    segQ, okQ = clip(Q, sQ)
    hit &= okP & okQ
    tp = np.einsum("kij,kj->ki", np.nan_to_num(segP), direction)
    tq = np.einsum("kij,kj->ki", np.nan_to_num(segQ), direction)
    p0, p1 = tp.min(axis=1), tp.max(axis=1)
    q0, q1 = tq.min(axis=1), tq.max(axis=1)
    lo = np.maximum(p0, q0)
    hi = np.minimum(p1, q1)
    hit &= hi >= lo - 1e-14 * scale
    # endpoints of the overlap, taken on the P segment
    ip0 = np.argmin(tp, axis=1)
    base = np.nan_to_num(segP)[np.arange(len(P)), ip0]
    seg = np.stack([base + (lo - p0)[:, None] * direction,
                    base + (hi - p0)[:, None] * direction], axis=1)
    return hit, seg


def mesh_self_intersections(mesh, min_area=1e-12, batch=1_000_000):
    """All intersection segments between triangles sharing no vertex."""
    V = np.asarray(mesh.vertices, dtype=float)
    F = np.asarray(mesh.triangles, dtype=np.int64)
    T = V[F]
    area = 0.5 * np.linalg.norm(np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0]), axis=1)
    bad = np.nonzero(area <= min_area)[0]
    if len(bad):
        raise DegenerateError(f"degenerate triangles: {bad[:20].tolist()}"
                              + (" ..." if len(bad) > 20 else ""))
    bvh = TriangleBVH(T.min(axis=1), T.max(axis=1))
    pairs = bvh.self_pairs()
    # drop pairs sharing a vertex
    fa, fb = F[pairs[:, 0]], F[pairs[:, 1]]
    share = np.zeros(len(pairs), dtype=bool)
    for i in range(3):
        for j in range(3):
            share |= fa[:, i] == fb[:, j]
    pairs = pairs[~share]
    # exact box overlap at triangle level before the geometric test
    lo, hi = T.min(axis=1), T.max(axis=1)
    ov = np.all((lo[pairs[:, 0]] <= hi[pairs[:, 1]]) & (lo[pairs[:, 1]] <= hi[pairs[:, 0]]), axis=1)
    pairs = pairs[ov]
    segs, ids = [], []
    for s in range(0, len(pairs), batch):
        pr = pairs[s:s + batch]
        hit, seg = _tri_segments(T[pr[:, 0]], T[pr[:, 1]])
        segs.append(seg[hit])
        ids.append(pr[hit])
    seg = np.concatenate(segs) if segs else np.zeros((0, 2, 3))
    ids = np.concatenate(ids) if ids else np.zeros((0, 2), dtype=np.int64)
    order = np.lexsort((ids[:, 1], ids[:, 0]))
    return IntersectionCloud(segments=seg[order], pair_ids=ids[order], candidate_pairs=len(pairs))


def hausdorff(a, b):
    """Symmetric Hausdorff distance between two point sets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        return float("inf") if len(a) or len(b) else 0.0
    return float(max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max()))


def directed_distance(a, b):
    """max over a of the distance to the set b."""
    a = np.asarray(a, dtype=float)
    if len(a) == 0:
        return 0.0
    return float(cKDTree(np.asarray(b, dtype=float)).query(a)[0].max())
