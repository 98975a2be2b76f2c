import math

import numpy as np
import pytest

from everse.errors import DegenerateError, DomainError
from everse.events import (
    T_EVENT, T_EVENT_X, d_events, derivative_discriminant, derivative_discriminant_closed,
    displayed_quartic, encoding, event_timeline, halfway_events, local_model,
    quartic_root_structure, t_of_T_events, T_events, triple_point_quartic, triple_points,
    w_zero_z,
)
from everse.intersections import find_preimages
from everse.surface import SurfaceParams, family_point

SQ2 = math.sqrt(2)


class TestLocalModels:
    def test_d0_loop(self):
        m = local_model("D0", 0.25)
        c = m.intersection_curve()
        assert np.allclose(np.hypot(c[:, 0], c[:, 1]), 0.5)
        assert np.abs(m.residuals(c)).max() < 1e-12
        assert len(local_model("D0", -0.25).intersection_curve()) == 0

    def test_d1_hyperbola_and_lines(self):
        c = local_model("D1", 0.5).intersection_curve()
        assert np.allclose(c[:, 0] * c[:, 1], 0.5)
        c0 = local_model("D1", 0.0).intersection_curve()
        assert np.all((c0[:, 0] == 0) | (c0[:, 1] == 0))

    def test_q_common_point(self):
        assert np.allclose(local_model("Q", 0.0).common_point(), 0)
        assert local_model("Q", 0.1).common_point() is None

    def test_t_triple_points(self):
        m = local_model("Tplus", 0.25)
        tp = m.triple_points()
        assert np.allclose(tp, [[0, 0, 0.5], [0, 0, -0.5]])
        assert np.abs(m.residuals(tp)).max() < 1e-12
        assert len(local_model("Tplus", -0.1).triple_points()) == 0

    def test_unknown(self):
        with pytest.raises(ValueError):
            local_model("X", 0)


class TestHalfway:
    def test_q_and_d1(self):
        ev = halfway_events(2)
        assert [e.kind for e in ev] == ["Q", "D1", "D1", "D1", "D1"]
        P = SurfaceParams(n=2)
        for e in ev:
            for pp in e.preimages:
                assert np.linalg.norm(family_point(P, pp.h, pp.phi) - e.location) < 1e-8
        locs = sorted(tuple(np.round(e.location, 12)) for e in ev[1:])
        assert np.allclose(locs, sorted([(SQ2, 0, 0), (-SQ2, 0, 0), (0, SQ2, 0), (0, -SQ2, 0)]))
        assert np.allclose(ev[0].location, 0)

    def test_boy_triple_point(self):
        ev = halfway_events(3)
        assert ev[0].kind == "triple" and np.allclose(ev[0].location, 0)
        with pytest.raises(DomainError):
            halfway_events(4)


class TestQuartic:
    def test_t_zero(self):
        c = displayed_quartic(0.0)
        assert c[4] == -4 and np.all(c[:4] == 0)
        with pytest.raises(DegenerateError):
            quartic_root_structure(0.0)

    @pytest.mark.parametrize("t", np.linspace(-0.95, 0.95, 9))
    def test_factorisation_at_s_pm1(self, t):
        P = np.polynomial.polynomial.polyval
        c = displayed_quartic(t)
        assert P(1.0, c) == pytest.approx((t - 2) * (t - 1) ** 3 * (t * t - 3 * t - 2), abs=1e-12)
        assert P(-1.0, c) == pytest.approx((t + 2) * (t + 1) ** 3 * (t * t + 3 * t - 2), abs=1e-12)

    def test_T_event_time_is_a_root(self):
        for t in t_of_T_events():
            # s = +-1 becomes a root exactly at the T events
            v = [np.polynomial.polynomial.polyval(s, displayed_quartic(t)) for s in (1, -1)]
            assert min(abs(x) for x in v) < 1e-12
        assert T_EVENT == pytest.approx((math.sqrt(17) - 3) / 2, abs=1e-15)

    @pytest.mark.parametrize("t", np.linspace(0.05, 1.9, 20))
    def test_discriminant_negative(self, t):
        d = derivative_discriminant(t)
        assert d < 0
        assert d == pytest.approx(derivative_discriminant_closed(t), rel=1e-9)

    def test_degrees_by_interpolation(self):
        ts = np.linspace(-1, 1, 9)
        vals = np.array([displayed_quartic(t) for t in ts])
        for k in range(5):
            c = np.polynomial.polynomial.polyfit(ts, vals[:, k], 8)
            assert np.all(np.abs(c[7:]) < 1e-9)
        assert np.abs(np.polynomial.polynomial.polyfit(ts, vals[:, 0], 8)[6]) > 0.5

    def test_roots_continuous(self):
        ts = np.linspace(0.05, 0.95, 100)
        sp = np.array([quartic_root_structure(t) for t in ts])
        assert np.all(sp[:, 0] > 0) and np.all(sp[:, 1] < 0)
        assert np.max(np.abs(np.diff(sp, axis=0))) < 0.1

    def test_system_determinant(self):
        t = 0.4
        c = triple_point_quartic(t)
        assert np.polynomial.polynomial.polyval(t * (t * t + 4) / (5 * t * t - 4), c) == pytest.approx(0, abs=1e-14)


class TestTriplePoints:
    @pytest.mark.parametrize("t", [0.2, 0.4, 0.55, -0.4])
    def test_four_points_three_preimages(self, t):
        tps = triple_points(t)
        assert len(tps) == 4
        P = SurfaceParams(n=2, t=t)
        for tp in tps:
            assert tp.system_residual < 1e-10
            assert len(tp.preimages) == 3
            for pp in tp.preimages:
                assert np.linalg.norm(family_point(P, pp.h, pp.phi) - tp.point) < 1e-8

    def test_none_outside(self):
        assert triple_points(0.0) == [] and triple_points(0.7) == [] and triple_points(1.2) == []

    def test_merge_at_T_event(self):
        ev = T_events()
        tp = triple_points(-(T_EVENT - 1e-6))
        ends = np.array([e.point for e in tp])
        for e in ev[:2]:
            assert np.min(np.linalg.norm(ends - e.location, axis=1)) < 1e-2

    def test_T_locations(self):
        ev = T_events()
        assert [e.kind for e in ev] == ["Tplus", "Tplus", "Tminus", "Tminus"]
        for e in ev:
            x, y, _ = e.location
            assert abs(abs(x) - T_EVENT_X) < 1e-8 and abs(abs(y) - T_EVENT_X) < 1e-8
            assert (x * y > 0) == (e.kind == "Tplus")
            assert len(e.preimages) == 3

    @pytest.mark.parametrize("t", [0.2, 0.5, 0.8])
    def test_z_axis_values_differ(self, t):
        h = math.sqrt(1 - t * t)
        assert abs(w_zero_z(t, h) - w_zero_z(t, -h)) > 1e-3


class TestDEvents:
    def test_records(self):
        ev = d_events(2)
        kinds = [e.kind for e in ev]
        assert kinds == ["D0", "D0", "D2", "D2", "D01", "D21"]
        for e in ev[:4]:
            P = SurfaceParams(n=2, t=e.t)
            assert np.allclose(e.location, 0)
            for pp in e.preimages:
                assert np.linalg.norm(family_point(P, pp.h, pp.phi)) < 1e-12
        assert ev[4].at_infinity and ev[4].t == pytest.approx(-1.5)
        with pytest.raises(DomainError):
            d_events(3)


class TestTimeline:
    def test_default(self):
        tl = event_timeline()
        assert encoding(tl) == ["D0"] * 2 + ["Tplus"] * 2 + ["Q"] + ["D1"] * 4 + ["Tminus"] * 2 + ["D2"] * 2
        ts = [e.t for e in tl]
        assert ts == sorted(ts)

    def test_extra_d1(self):
        tl = event_timeline(extra_d1_t=-0.8)
        assert len(tl) == 14 and encoding(tl)[2] == "D1"

    def test_reverse(self):
        from everse.meshio import default_schedule
        tl = event_timeline(default_schedule(frames_per_leg=4, direction="reverse"))
        assert encoding(tl) == ["D0"] * 2 + ["Tplus"] * 2 + ["Q"] + ["D1"] * 4 + ["Tminus"] * 2 + ["D2"] * 2
        assert tl[0].t == 1.0

    def test_partial_warns(self):
        class Half:
            def sweep_range(self):
                return (-1.5, -0.2)
        with pytest.warns(UserWarning):
            tl = event_timeline(Half())
        assert encoding(tl) == ["D0", "D0", "Tplus", "Tplus"]


@pytest.mark.slow
def test_dense_scan_multiplicity():
    # a 2000 x 2000 scan finds no preimage beyond the declared ones
    for e in T_events()[:1] + halfway_events(2)[:2]:
        P = SurfaceParams(n=2, t=e.t)
        pre = find_preimages(e.location, P, grid=(2000, 2000))
        assert len(pre) == len(e.preimages)
