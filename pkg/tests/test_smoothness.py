import math

import numpy as np
import pytest

from everse.errors import SmoothnessError
from everse.smoothness import (
    fd_jacobian, fd_normal, h0_regularity_value, jacobian_damp, jacobian_inversion,
    lambda_stage, normal_vector, pipeline_normal_rank,
    pole_regularity_check, precheck, radial_monotonicity_check, smoothness_margin,
    stage_report,
)
from everse.surface import (
    StageParams, SurfaceParams, damp_map, family_point, inversion_map,
)


def test_normal_examples():
    P = SurfaceParams(n=2)
    assert normal_vector(P, 0.0, 0.0)[2] == pytest.approx(-1.0)
    phi = np.linspace(-3, 3, 50)
    h = 1 * np.cos(2 * phi)
    assert np.max(np.abs(normal_vector(P, h, phi)[..., 2])) < 1e-15


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("t", [-1.5, -1.0, 0.0, 1.0, 1.5])
def test_normal_matches_finite_differences(n, t, rng):
    P = SurfaceParams(n=n, t=t, p=0.8, q=0.2)
    h = rng.uniform(-3, 3, 1000)
    phi = rng.uniform(-np.pi, np.pi, 1000)
    a = normal_vector(P, h, phi)
    b = fd_normal(P, h, phi)
    rel = np.linalg.norm(a - b, axis=-1) / np.linalg.norm(a, axis=-1)
    assert rel.max() < 1e-6


def test_margin_examples():
    assert smoothness_margin(SurfaceParams(n=2)).value == 1
    assert smoothness_margin(SurfaceParams(n=2, t=1.5, p=0, q=2 / 3)).value == pytest.approx(1.5)
    m = smoothness_margin(SurfaceParams(n=2, t=1, p=0, q=0))
    assert m.value == 0 and not m.passed


@pytest.mark.parametrize("n,t,q", [(2, 0.6, 0.4), (2, -0.9, 0.5), (3, 0.7, 0.6), (2, 1.4, 0.7)])
def test_margin_witness_and_positivity(n, t, q):
    P = SurfaceParams(n=n, t=t, p=1 - q * abs(t), q=q)
    m = smoothness_margin(P)
    assert m.value > 0
    assert np.linalg.norm(normal_vector(P, m.h, m.phi)) == pytest.approx(m.value, rel=1e-12)
    h, phi = np.meshgrid(np.linspace(-3, 3, 200), np.linspace(-np.pi, np.pi, 200))
    nn = np.linalg.norm(normal_vector(P, h, phi), axis=-1)
    assert nn.min() > 0


def test_jacobian_damp_examples():
    s = StageParams.make(xi=1, eta=1)
    assert jacobian_damp([0, 0, 0], s) == pytest.approx(1)
    assert jacobian_damp([1, 0, 0], s) == pytest.approx(3 / 2 ** 3.5)


def test_jacobian_inversion_examples():
    s = StageParams.make(alpha=1, beta=1 / 25)
    assert jacobian_inversion([0, 0, 0], s) == pytest.approx(1)
    # all three components of the map carry exp(gamma z'), hence exp(3 gamma z')
    assert jacobian_inversion([0, 0, 1], s) == pytest.approx(math.exp(6 / 5))


def test_jacobians_match_finite_differences(rng):
    s = StageParams.make(n=2, t=0.5, xi=0.7, eta=1.3, alpha=1, beta=1 / 25)
    r = rng.uniform(-2, 2, (1000, 3))
    jd = np.linalg.det(fd_jacobian(lambda x: damp_map(x, s), r))
    assert np.max(np.abs(jd / jacobian_damp(r, s) - 1)) < 1e-6
    rp = damp_map(r, s)
    ji = np.linalg.det(fd_jacobian(lambda x: inversion_map(x, s), rp))
    assert np.max(np.abs(ji / jacobian_inversion(rp, s) - 1)) < 1e-6


def test_inversion_determinant_symbolically():
    sp = pytest.importorskip("sympy")
    x, y, z, a, b = sp.symbols("x y z a b", positive=True)
    g = 2 * sp.sqrt(a * b)
    rho = x ** 2 + y ** 2
    den = a + b * rho
    e = sp.exp(g * z)
    zz = (a - b * rho) / den * (e - 1) / g + g * (1 - rho) / (2 * den * (a + b))
    F = sp.Matrix([x * e / den, y * e / den, zz])
    J = F.jacobian([x, y, z]).det()
    assert sp.simplify(J - sp.exp(3 * g * z) / den ** 2) == 0


@pytest.mark.parametrize("lam,t,n", [(0.0, 1.5, 2), (1.0, 1.5, 2), (0.5, 1.6, 3)])
def test_radial_monotonicity(lam, t, n):
    assert radial_monotonicity_check(lambda_stage(n=n, t=t, lam=lam), samples=1000)


def test_pole_regularity_even_and_boy():
    assert pole_regularity_check(StageParams.make(n=2, t=0.0)).passed
    assert pole_regularity_check(StageParams.make(n=3, t=0.0, beta=1 / 4)).passed


def test_pole_regularity_odd_n():
    # without smoothing the odd-n closure is still C^1 at the poles: the defect
    # shows up only in higher derivatives, and smoothing shrinks it
    bare = pole_regularity_check(StageParams.make(n=3, t=0.5, epsilon=0.0))
    smooth = pole_regularity_check(StageParams.make(n=3, t=0.5, epsilon=1e-4))
    assert bare.passed and smooth.passed
    assert bare.derivative_jumps[4] > 1.0
    assert smooth.derivative_jumps[4] < 1e-2 * bare.derivative_jumps[4]


def test_precheck_rejects_degenerate_stage():
    s = StageParams.make(n=2, t=1.0, p=0.0, q=0.0)
    with pytest.raises(SmoothnessError) as e:
        precheck(s)
    assert e.value.report.margin == 0


def test_stage_report_passes_on_wormhole():
    rep = stage_report(StageParams.make(n=2, t=1.5))
    assert rep.passed and rep.min_normal_norm > 0 and rep.min_jacobian > 0


def test_nz_is_half_radius_derivative(rng):
    # for the p = 0 unfolding surface w = (a + i b) u with a, b independent of phi
    P = SurfaceParams(n=2, t=1.5, p=0.0, q=2 / 3)
    h = rng.uniform(-3, 3, 200)
    phi = rng.uniform(-np.pi, np.pi, 200)
    e = 1e-5
    rad = lambda hh: np.sum(family_point(P, hh, phi)[..., :2] ** 2, axis=-1)
    d = (rad(h + e) - rad(h - e)) / (2 * e)
    nz = normal_vector(P, h, phi)[..., 2]
    assert np.max(np.abs(nz - d / 2) / np.abs(nz)) < 1e-6


def test_h0_regularity_gives_rank_two():
    for lam in (0.0, 0.3, 1.0):
        s = lambda_stage(n=2, t=1.5, lam=lam)
        assert h0_regularity_value(s) > 1e-9
        rank = pipeline_normal_rank(s, 0.0, np.linspace(-3, 3, 31))
        assert rank.min() > 1e-6
