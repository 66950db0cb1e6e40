import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ballcurv.bubbles import (
    Bubble,
    bubble_boundary,
    bubble_function,
    bubble_interior,
    critical_secondary_check,
    default_rho0,
    height_at_scale,
    min_resolved_lambda,
    orthogonality_check,
    scale_for_height,
    sigma_boundary_samples,
    sigma_decompose,
    substituted_grid,
    t_phi,
)
from ballcurv.geometry import BallPoint
from ballcurv.spectral import AxisymmetricFunction, energy, j_functional, mass_center, residual_norm, zonal_mode

LAMS = (0.01, 0.05, 0.1, 0.3, 0.5, 0.9, 1.0)


def own_grid(lam, grid, pole="south"):
    b = Bubble(lam, pole, grid.n)
    return bubble_function(b, substituted_grid(b, grid) if lam < 1 else grid)


def smooth_positive(grid, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(6) * 0.1
    return AxisymmetricFunction.from_callable(lambda r: 1.0 + sum(c[k] * np.cos(k * r) for k in range(6)), grid)


# -- closed forms


def test_boundary_values():
    assert bubble_boundary(Bubble(0.5, n=3), math.pi / 2) == pytest.approx(math.sqrt(0.8), rel=1e-15)
    for n in (3, 4, 5):
        lam = 0.2
        assert bubble_boundary(Bubble(lam, n=n), 0.0) == pytest.approx(lam ** (-(n - 2) / 2), rel=1e-14)
        assert bubble_boundary(Bubble(lam, n=n), math.pi) == pytest.approx(lam ** ((n - 2) / 2), rel=1e-14)


def test_unit_scale_is_constant():
    r = np.linspace(0, math.pi, 50)
    assert_allclose(bubble_boundary(Bubble(1.0, n=4), r), 1.0, rtol=1e-15)


def test_north_pole_reflection():
    r = np.linspace(0, math.pi, 31)
    assert_allclose(bubble_boundary(Bubble(0.3, "north", 4), r), bubble_boundary(Bubble(0.3, "south", 4), math.pi - r))


def test_displayed_forms_agree():
    # (1 - lam^2) sin^2 + lam^2 = lam^2 cos^2 + sin^2
    lam, r = 0.37, np.linspace(0, math.pi, 41)
    other = (lam / ((1 - lam**2) * np.sin(r / 2) ** 2 + lam**2)) ** 0.5
    assert_allclose(bubble_boundary(Bubble(lam, n=3), r), other, rtol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1.0), st.sampled_from([3, 4, 5, 6]))
def test_boundary_strictly_positive(lam, n):
    r = np.linspace(0, math.pi, 101)
    assert np.all(bubble_boundary(Bubble(lam, n=n), r) > 0)


def test_bubble_validation():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            Bubble(bad)
    with pytest.raises(ValueError):
        Bubble(0.5, "east")
    with pytest.raises(ValueError):
        Bubble(0.5, n=2)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_interior_matches_boundary(n):
    b = Bubble(0.3, "south", n)
    theta = np.zeros(n - 1)
    theta[0] = 1.0
    for r in np.linspace(0.1, 3.0, 9):
        z = BallPoint(math.sin(r) * theta, -math.cos(r))
        assert bubble_interior(b, z) == pytest.approx(bubble_boundary(b, r), rel=1e-12)
    bn = Bubble(0.3, "north", n)
    z = BallPoint(math.sin(0.4) * theta, -math.cos(0.4))
    assert bubble_interior(bn, z) == pytest.approx(bubble_boundary(bn, 0.4), rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_interior_is_harmonic(n):
    b = Bubble(0.4, "south", n)
    z0 = np.array([0.2, -0.1, 0.15, 0.05][: n - 1] + [-0.3])
    h = 1e-3
    lap = 0.0
    f = lambda v: bubble_interior(b, BallPoint(v[:-1], v[-1]))  # noqa: E731
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        lap += f(z0 + e) - 2 * f(z0) + f(z0 - e)
    assert abs(lap / h**2) < 1e-4 * f(z0)


# -- substituted grid


def test_substituted_grid_unit_scale_is_identity(grids):
    g = grids(3)
    s = substituted_grid(Bubble(1.0, n=3), g)
    assert_allclose(s.nodes, g.nodes, atol=1e-15)
    assert_allclose(s.weights, g.weights, atol=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_substituted_grid_exact_integral(n, grids):
    g = grids(n)
    for lam in (0.01, 0.1, 0.5):
        s = substituted_grid(Bubble(lam, n=n), g)
        assert np.all((s.nodes > 0) & (s.nodes < math.pi))
        u = bubble_function(Bubble(lam, n=n), s)
        assert j_functional(u, 1.0, g.tau) == pytest.approx(g.sphere_volume, rel=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("lam", LAMS)
def test_bubble_energy(n, lam, grids):
    g = grids(n)
    assert energy(own_grid(lam, g)) == pytest.approx(g.gamma * g.sphere_volume, rel=1e-8)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("lam", LAMS)
def test_bubble_residual(n, lam, grids):
    assert residual_norm(own_grid(lam, grids(n)), 1.0, grids(n).tau) < 1e-8


def test_min_resolved_lambda(grids):
    g = grids(3)
    lam = min_resolved_lambda(g)
    assert 0 < lam < 0.2
    assert min_resolved_lambda(g.dilated(0.01)) == pytest.approx(0.01 * lam)


# -- conformal reparametrisation


def test_t_phi_identity(grids):
    u = smooth_positive(grids(4))
    assert_allclose(t_phi(u, 1.0).values, u.values)
    with pytest.raises(ValueError):
        t_phi(u, 0.0)


def test_t_phi_maps_constant_to_bubble(grids):
    g = grids(4)
    one = AxisymmetricFunction.constant(1.0, g)
    for lam in (0.3, 0.6):
        assert_allclose(t_phi(one, 1 / lam).values, bubble_function(Bubble(lam, n=4), g).values, rtol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_t_phi_preserves_energy_and_j(n, grids):
    g = grids(n)
    for seed in range(3):
        u = smooth_positive(g, seed)
        for beta in (0.7, 1.6):
            tu = t_phi(u, beta)
            assert energy(tu) == pytest.approx(energy(u), rel=1e-8)
            assert j_functional(tu, 1.0, g.tau) == pytest.approx(j_functional(u, 1.0, g.tau), rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.6, 1.7), st.integers(0, 100), st.sampled_from(["south", "north"]))
def test_t_phi_group_property(beta, seed, pole):
    from ballcurv.spectral import make_grid

    g = make_grid(4, 128)
    u = smooth_positive(g, seed)
    back = t_phi(t_phi(u, beta, pole), 1 / beta, pole)
    assert_allclose(back.values, u.values, atol=1e-8)


# -- decomposition


@pytest.mark.parametrize("n", [3, 4])
def test_decompose_exact_bubble(n, grids):
    g = grids(n)
    rep = sigma_decompose(bubble_function(Bubble(0.4, n=n), g))
    assert rep.t0 == pytest.approx(1.0, abs=1e-8)
    assert rep.lam == pytest.approx(0.4, rel=1e-6)
    assert rep.rho_v < 1e-6
    assert rep.inside_sigma is False or rep.q_n <= rep.rho0


def test_decompose_constant(grids):
    rep = sigma_decompose(AxisymmetricFunction.constant(1.0, grids(3)))
    assert rep.lam == pytest.approx(1.0)
    # the scale is located by a derivative-free search, so rho_v ~ sqrt(eps)
    assert rep.rho_v < 1e-6
    assert not rep.inside_sigma  # mass center at height 1


def test_decompose_concentrated_bubble_is_inside(grids):
    g = grids(4).dilated(0.01)
    rep = sigma_decompose(bubble_function(Bubble(0.01, n=4), g))
    assert rep.inside_sigma
    assert rep.lam == pytest.approx(0.01, rel=1e-5)
    rep_n = sigma_decompose(bubble_function(Bubble(0.01, n=4), g), pole="north")
    assert not rep_n.inside_sigma


def test_decompose_recovers_orthogonal_part(grids):
    g = grids(4)
    ub = bubble_function(Bubble(0.4, n=4), g)
    u = 0.9 * ub + 0.05 * zonal_mode(5, g)
    u = u * math.sqrt(g.gamma * g.sphere_volume / energy(u, check_aliasing=False))
    rep = sigma_decompose(u)
    ubest = bubble_function(Bubble(rep.lam, n=4), g)
    from ballcurv.spectral import inner_e

    assert abs(inner_e(rep.v, ubest)) < 1e-8
    assert rep.rho_v == pytest.approx(math.sqrt(energy(rep.v, check_aliasing=False)), rel=1e-10)
    assert abs(critical_secondary_check(rep.v, rep.lam)) < 1e-7
    oc = orthogonality_check(rep.v, rep.lam)
    assert abs(oc["constant"]) < 1e-6 and abs(oc["height"]) < 1e-6


def test_orthogonality_check_controls(grids):
    g = grids(3)
    zero = AxisymmetricFunction.constant(0.0, g)
    assert orthogonality_check(zero, 0.5) == {"constant": 0.0, "height": 0.0}
    assert critical_secondary_check(zero, 0.5) == 0.0
    # a constant perturbation is not orthogonal to constants
    oc = orthogonality_check(AxisymmetricFunction.constant(0.1, g), 1.0)
    assert abs(oc["constant"]) > 1e-2
    assert abs(critical_secondary_check(zonal_mode(1, g), 1.0)) < 1e-12


def test_default_rho0():
    assert default_rho0(3) == pytest.approx(0.1 * math.sqrt(2 * math.pi))


# -- mass center and the neighbourhood boundary


@pytest.mark.parametrize("n", [4, 5])
def test_mass_center_quadratic_law(n, grids):
    from ballcurv.verify import mass_center_slope

    slope, ratio = mass_center_slope(grids(n))
    assert abs(slope - 2) < 0.1
    assert ratio < 100


def test_height_scale_inverse(grids):
    g = grids(4)
    for q in (0.01, 0.1, 0.5):
        lam = scale_for_height(q, g)
        assert height_at_scale(lam, g) == pytest.approx(q, rel=1e-9)
        assert height_at_scale(lam, g, "north") == pytest.approx(q, rel=1e-9)
    with pytest.raises(ValueError):
        scale_for_height(1.2, g)


def test_boundary_samples_lie_on_the_boundary(grids):
    g = grids(4)
    rho0 = default_rho0(4)
    samples = sigma_boundary_samples(g, 40, "south", kv=12)
    assert len(samples) == 40
    c_est = 0.0
    for s in samples:
        assert np.all(s.u.values >= 0)
        assert energy(s.u, check_aliasing=False) == pytest.approx(g.gamma * g.sphere_volume, rel=1e-9)
        q = mass_center(s.u)
        if s.face == "energy":
            assert s.rho_v == pytest.approx(rho0)
        else:
            assert q == pytest.approx(rho0, rel=1e-8)
        assert s.rho_v <= rho0 * (1 + 1e-12)
        if rho0 > q:
            c_est = max(c_est, (rho0 - q) / s.rho_v)
    # rho0 <= q + C ||v|| with a finite constant over the family
    assert math.isfinite(c_est)
    for s in samples:
        assert rho0 <= mass_center(s.u) + c_est * s.rho_v + 1e-12


def test_boundary_samples_fit_is_stationary(grids):
    g = grids(4)
    for s in sigma_boundary_samples(g, 6, "south", kv=12, seed=3):
        rep = sigma_decompose(s.u, lam_min=1e-4)
        assert rep.lam == pytest.approx(s.lam, rel=1e-4)
        assert rep.rho_v == pytest.approx(s.rho_v, rel=1e-4, abs=1e-8)


def test_boundary_samples_north(grids):
    g = grids(4)
    rho0 = default_rho0(4)
    for s in sigma_boundary_samples(g, 6, "north", kv=12):
        assert 2 - mass_center(s.u) <= rho0 * (1 + 1e-8)
