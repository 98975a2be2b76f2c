"""Acceptance criteria 1-9, one PASS/FAIL line each (see the terminal summary)."""
import hashlib
import math
import subprocess
import sys

import numpy as np
import pytest

from everse.algebra import (
    boy_quintic_residual, reduced_sextic_residual_t, sextic_residual_halfway, sextic_residual_t,
)
from everse.errors import SmoothnessError
from everse.events import (
    derivative_discriminant, displayed_quartic, encoding, event_timeline, halfway_events,
    normalized_quartic, T_events, triple_points,
)
from everse.intersections import (
    branch_points, clip_to_domain, find_preimages, general_curve, hausdorff,
    mesh_self_intersections, monotonicity_witness, preimage_count, trifolium_curve,
)
from everse.meshio import default_schedule, signed_volume, tessellate
from everse.smoothness import (
    fd_jacobian, fd_normal, jacobian_damp, jacobian_inversion, lambda_stage, normal_vector,
    precheck, radial_monotonicity_check, smoothness_margin,
)
from everse.surface import (
    StageParams, SurfaceParams, damp_map, family_point, halfway_point, inversion_map,
)

SQ2 = math.sqrt(2)
T_EXPECT = (math.sqrt(17) - 3) / 2


def domain_samples(rng, k=1000, H=3.0):
    return rng.uniform(-H, H, k), rng.uniform(-np.pi, np.pi, k)


def test_criterion_1_implicit_residuals(acceptance):
    rng = np.random.default_rng(1)
    h, phi = domain_samples(rng)
    r_half = sextic_residual_halfway(halfway_point(2, h, phi)).relative.max()
    h, phi = domain_samples(rng)
    r_boy = boy_quintic_residual(halfway_point(3, h, phi)).relative.max()
    r_gen = {}
    for t, q in ((1.5, 0.0), (0.5, 1 / 3)):
        h, phi = domain_samples(rng)
        pts = family_point(SurfaceParams(n=2, t=t, p=1.0, q=q), h, phi)
        r_gen[(t, q)] = max(sextic_residual_t(pts, t, q).relative.max(),
                            reduced_sextic_residual_t(pts, t, q).relative.max())
    ok = r_half < 1e-8 and r_boy < 1e-9 and all(v < 1e-8 for v in r_gen.values())
    acceptance(1, ok, f"sextic {r_half:.1e} < 1e-8, quintic {r_boy:.1e} < 1e-9, resultant "
                      + ", ".join(f"(t={t:g},q={q:.3g}) {v:.1e}" for (t, q), v in r_gen.items())
                      + " < 1e-8")


def _t_roots_at(s):
    # D(s, t) is degree 6 in t: interpolate on Chebyshev nodes and take the real roots
    ts = np.cos(np.pi * (np.arange(9) + 0.5) / 9)
    vals = [np.polynomial.polynomial.polyval(s, displayed_quartic(t)) for t in ts]
    c = np.polynomial.polynomial.polyfit(ts, vals, 6)
    r = np.polynomial.polynomial.polyroots(c)
    return np.sort(r.real[np.abs(r.imag) < 1e-6])


def test_criterion_2_event_coordinates(acceptance):
    P = SurfaceParams(n=2)
    d1 = [(SQ2, 0, 0), (-SQ2, 0, 0), (0, SQ2, 0), (0, -SQ2, 0)]
    d1_counts = [preimage_count(np.array(p, float), P, tol=1e-8) for p in d1]
    d1_ev = sorted(tuple(np.round(e.location, 9)) for e in halfway_events(2) if e.kind == "D1")
    q_count = preimage_count(np.zeros(3), P, tol=1e-8)
    # T times: the non-trivial root in (-1, 1) of D(+-1, t), away from t = +-1
    times = []
    for s in (1.0, -1.0):
        r = _t_roots_at(s)
        r = r[(np.abs(r) < 0.99)]
        times.append(float(r[0]))
    t_err = max(abs(times[0] + T_EXPECT), abs(times[1] - T_EXPECT))
    x_expect = (5 - math.sqrt(17)) / (2 * SQ2)
    loc_err, pre_ok = 0.0, True
    for e in T_events():
        loc_err = max(loc_err, abs(abs(e.location[0]) - x_expect), abs(abs(e.location[1]) - x_expect))
        pre = find_preimages(e.location, SurfaceParams(n=2, t=e.t), tol=1e-8)
        pre_ok &= len(pre) == 3
    ok = (min(d1_counts) >= 2 and np.allclose(d1_ev, sorted(d1)) and q_count == 4
          and t_err < 1e-10 and loc_err < 1e-8 and pre_ok)
    acceptance(2, ok, f"D1 preimages {d1_counts} >= 2, Q preimages {q_count} == 4, "
                      f"T time err {t_err:.1e} < 1e-10, T |x| err {loc_err:.1e} < 1e-8, "
                      f"T preimages 3: {pre_ok}")


def test_criterion_3_triple_points(acceptance):
    worst, counts = 0.0, []
    for t in (0.2, 0.4, 0.55):
        P = SurfaceParams(n=2, t=t)
        tps = triple_points(t)
        counts.append(len(tps))
        for tp in tps:
            pre = find_preimages(tp.point, P, tol=1e-8)
            counts.append(len(pre))
            if len(pre) != 3:
                worst = float("inf")
            for h, phi in pre:
                worst = max(worst, float(np.linalg.norm(family_point(P, h, phi) - tp.point)))
            # the analytic preimages agree with the brute-force ones
            for pp in tp.preimages:
                d = min(math.hypot(pp.h - h, math.remainder(pp.phi - phi, 2 * math.pi))
                        for h, phi in pre)
                worst = max(worst, d)
    c0 = normalized_quartic(0.0)
    q0_ok = np.all(np.abs(c0[:4]) < 1e-12) and c0[4] == -1
    rng = np.random.default_rng(3)
    ts = rng.uniform(0.02, 1.98, 20) * rng.choice([-1, 1], 20)
    disc = np.array([derivative_discriminant(t) for t in ts])
    ok = (counts[0::5] == [4, 4, 4] and all(c == 3 for i, c in enumerate(counts) if i % 5)
          and worst < 1e-7 and q0_ok and np.all(disc < 0))
    acceptance(3, ok, f"4 triple points per t with 3 brute-force preimages each, "
                      f"agreement {worst:.1e} < 1e-7; t=0 quartic -s^4: {bool(q0_ok)}; "
                      f"Delta < 0 at {int(np.sum(disc < 0))}/20 t")


def test_criterion_4_smoothness(acceptance):
    rng = np.random.default_rng(4)
    nerr = jerr_d = jerr_i = 0.0
    for n, t, p, q in ((2, 0.0, 1, 0), (2, 0.7, 0.8, 0.3), (3, 0.0, 1, 0), (2, -1.2, 0.5, 0.4)):
        P = SurfaceParams(n=n, t=t, p=p, q=q)
        h, phi = domain_samples(rng)
        a, b = normal_vector(P, h, phi), fd_normal(P, h, phi)
        nerr = max(nerr, float(np.max(np.linalg.norm(a - b, axis=-1) / np.linalg.norm(a, axis=-1))))
        st = StageParams.make(n=n, t=t, p=p, q=q, xi=1, eta=1, alpha=1, beta=1 / 25)
        r = family_point(P, h, phi)
        jd = np.linalg.det(fd_jacobian(lambda x: damp_map(x, st), r))
        jerr_d = max(jerr_d, float(np.max(np.abs(jd / jacobian_damp(r, st) - 1))))
        rp = damp_map(r, st)
        ji = np.linalg.det(fd_jacobian(lambda x: inversion_map(x, st), rp))
        jerr_i = max(jerr_i, float(np.max(np.abs(ji / jacobian_inversion(rp, st) - 1))))
    sched = default_schedule()
    margins = [smoothness_margin(s.surface).value for s in sched.stages()]
    try:
        precheck(StageParams.make(n=2, t=1.0, p=0.0, q=0.0))
        rejected = False
    except SmoothnessError:
        rejected = True
    ok = nerr < 1e-6 and jerr_d < 1e-6 and jerr_i < 1e-6 and min(margins) > 0 and rejected
    acceptance(4, ok, f"normal fd err {nerr:.1e}, damp det err {jerr_d:.1e}, inversion det err "
                      f"{jerr_i:.1e} (< 1e-6); min margin over {len(margins)} frames "
                      f"{min(margins):.3f} > 0; (p=0,q=0,t=1) rejected: {rejected}")


def test_criterion_5_sphere_endpoints(acceptance):
    sched = default_schedule()
    rad_err = 0.0
    for st in (lambda_stage(n=2, t=1.5, lam=0.0), lambda_stage(n=2, t=-1.5, lam=0.0),
               lambda_stage(n=3, t=1.6, lam=0.0, eta=1.3), sched.frame(0)[0]):
        m = tessellate(st, 128, 402)
        R = st.eta ** st.kappa * abs(st.t) ** (-1.0 / st.n)
        rad_err = max(rad_err, float(np.max(np.abs(np.linalg.norm(m.vertices, axis=1) - R))))
    first = tessellate(sched.frame(0)[0], 128, 402)
    last = tessellate(sched.frame(sched.frame_count - 1)[0], 128, 402)
    v0, v1 = signed_volume(first), signed_volume(last)
    rel = abs(abs(v0) - abs(v1)) / max(abs(v0), abs(v1))
    ok = rad_err < 1e-10 and v0 * v1 < 0 and rel < 0.01
    acceptance(5, ok, f"sphere radius err {rad_err:.1e} < 1e-10; volumes first {v0:+.5f}, "
                      f"last {v1:+.5f}, magnitude mismatch {rel:.1e} < 1%")


@pytest.mark.slow
def test_criterion_6_intersections(acceptance):
    import time
    t0 = time.perf_counter()
    H = 3.0
    half = StageParams.make(n=2, t=0.0, beta=1 / 25)
    m = tessellate(half, 200, 628, mode="raw", H=H)
    cloud = mesh_self_intersections(m)
    ana = branch_points(clip_to_domain(general_curve(half.surface, 500), H))
    d_half, tol_half = hausdorff(cloud.points, ana), 2 * m.max_edge()
    boy = StageParams.make(n=3, t=0.0, beta=1 / 4)
    mb = tessellate(boy, 200, 628, mode="raw", H=H)
    cb = mesh_self_intersections(mb)
    anab = branch_points(clip_to_domain([trifolium_curve(2000)], H))
    d_boy, tol_boy = hausdorff(cb.points, anab), 2 * mb.max_edge()
    sphere = tessellate(lambda_stage(n=2, t=1.5, lam=0.0), 128, 402)
    n_sphere = len(mesh_self_intersections(sphere))
    elapsed = time.perf_counter() - t0
    ok = d_half < tol_half and d_boy < tol_boy and n_sphere == 0 and elapsed < 300
    acceptance(6, ok, f"halfway Hausdorff {d_half:.4f} < {tol_half:.4f}, Boy {d_boy:.4f} < "
                      f"{tol_boy:.4f}, sphere segments {n_sphere} == 0, {elapsed:.0f} s < 300 s")


def test_criterion_7_monotonicity(acceptance):
    rng = np.random.default_rng(7)
    min_der, checked = float("inf"), 0
    for _ in range(200):
        t = rng.uniform(0.05, 1.9) * rng.choice([-1, 1])
        q = rng.uniform(0, 0.98 / abs(t))
        p = rng.uniform(0.05, 1.0)
        P = SurfaceParams(n=2, t=t, p=p, q=q)
        if smoothness_margin(P).value <= 0:
            continue
        min_der = min(min_der, monotonicity_witness(P).min_der)
        checked += 1
    slopes = [monotonicity_witness(SurfaceParams(n=2, t=t)).min_neg_slope
              for t in np.linspace(0.05, 1.0, 20)]
    radial = []
    for _ in range(12):
        n = int(rng.choice([2, 3, 4]))
        t = rng.uniform(1.05, 2.5) * rng.choice([-1, 1])
        st = lambda_stage(n=n, t=t, lam=rng.uniform(0, 1), omega=rng.uniform(0.5, 4))
        radial.append(radial_monotonicity_check(st))
    ok = min_der > 0 and min(slopes) > 0 and all(radial)
    acceptance(7, ok, f"(der) min {min_der:.2e} > 0 over {checked} stages; y/x slope margin "
                      f"{min(slopes):.2e} > 0 over 20 t; radius monotone {sum(radial)}/12")


def test_criterion_8_timeline(acceptance):
    expect = ["D0"] * 2 + ["Tplus"] * 2 + ["Q"] + ["D1"] * 4 + ["Tminus"] * 2 + ["D2"] * 2
    tl = event_timeline(default_schedule())
    ts = [e.t for e in tl]
    extra = event_timeline(default_schedule(), extra_d1_t=0.8)
    ok = (encoding(tl) == expect and ts == sorted(ts)
          and encoding(extra) == expect[:11] + ["D1"] + expect[11:])
    acceptance(8, ok, f"encoding {' '.join(encoding(tl))} ({len(tl)} events, time ordered); "
                      f"configurable extra D1 -> {len(extra)} events")


def test_criterion_9_determinism(acceptance, tmp_path):
    digests = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        subprocess.run([sys.executable, "-m", "everse.cli", "generate", "--frames", "1",
                        "--out", str(out)], check=True, capture_output=True)
        digests.append({p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                        for p in sorted(out.glob("frame_*.obj"))})
    # a threaded run writes the same bytes
    out = tmp_path / "threads"
    subprocess.run([sys.executable, "-m", "everse.cli", "generate", "--frames", "1",
                    "--threads", "4", "--out", str(out)], check=True, capture_output=True)
    digests.append({p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                    for p in sorted(out.glob("frame_*.obj"))})
    ok = len(digests[0]) == 8 and digests[0] == digests[1] == digests[2]
    acceptance(9, ok, f"{len(digests[0])} OBJ frames byte-identical across 2 runs and 4 threads")
