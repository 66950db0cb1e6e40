import math
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ballcurv.bubbles import Bubble, bubble_function
from ballcurv.curvature import constant, monotone, two_bump
from ballcurv.solver import (
    PathState,
    SolverConfig,
    best_bubble,
    concentration_flag,
    constrained_gradient,
    continuation,
    default_endpoints,
    lagrange_multiplier,
    mountain_pass,
    newton_refine,
    project_to_S,
    rescale_to_solution,
)
from ballcurv.spectral import (
    AxisymmetricFunction,
    ZonalSpectrum,
    energy,
    inner_e,
    j_functional,
    residual_norm,
    synthesize,
)


def radius2(g):
    return g.gamma * g.sphere_volume


def random_smooth(g, rng, kmax=12):
    c = np.zeros(g.kmax + 1)
    c[: kmax + 1] = rng.standard_normal(kmax + 1) / (1 + np.arange(kmax + 1)) ** 2
    return synthesize(ZonalSpectrum(g.n, c), g)


@pytest.fixture(scope="module")
def two_bump_run():
    from ballcurv.spectral import make_grid

    g = make_grid(4, 128)
    p = 0.95 * g.tau
    h = two_bump(1.5, 0.5, n=4)
    t0 = time.perf_counter()
    res = mountain_pass(h, p, grid=g)
    return g, h, p, res, time.perf_counter() - t0


# -- projection onto the constraint set


def test_project_constant(grids):
    g = grids(3)
    u = project_to_S(AxisymmetricFunction.constant(3.7, g))
    assert_allclose(u.values, 1.0, rtol=1e-12)


def test_project_bubble_unchanged(grids):
    g = grids(4)
    ub = bubble_function(Bubble(0.5, n=4), g)
    assert_allclose(project_to_S(ub).values, ub.values, rtol=1e-10)


def test_project_clips_and_scales(grids):
    g = grids(4)
    u = project_to_S(AxisymmetricFunction(g, np.cos(g.nodes) + 0.3))
    assert np.all(u.values >= 0)
    assert energy(u, check_aliasing=False) == pytest.approx(radius2(g), rel=1e-12)
    with pytest.raises(ValueError):
        project_to_S(AxisymmetricFunction(g, -np.ones(g.M)))


# -- gradient


def test_gradient_vanishes_at_constant(grids):
    g = grids(4)
    one = AxisymmetricFunction.constant(1.0, g)
    for p in (1.5, 0.9 * g.tau, g.tau):
        assert np.max(np.abs(constrained_gradient(one, 1.0, p).values)) < 1e-12


def test_gradient_vanishes_at_bubble(grids):
    g = grids(4)
    ub = bubble_function(Bubble(0.3, n=4), g)
    assert np.max(np.abs(constrained_gradient(ub, 1.0, g.tau).values)) < 1e-7


def test_gradient_is_tangent(grids, rng):
    g = grids(4)
    u = project_to_S(random_smooth(g, rng) + 2.0)
    G = constrained_gradient(u, two_bump(), 0.9 * g.tau)
    assert abs(inner_e(G, u)) < 1e-10 * math.sqrt(energy(G)) * math.sqrt(energy(u))


@pytest.mark.parametrize("n", [3, 4])
def test_gradient_matches_finite_differences(n, grids, rng):
    g = grids(n, 128)
    h, p = two_bump(), 0.9 * g.tau
    u = project_to_S(random_smooth(g, rng) + 2.0)
    G = constrained_gradient(u, h, p)
    eps = 1e-5
    for _ in range(20):
        d = random_smooth(g, rng)
        d = d - (inner_e(d, u) / energy(u)) * u
        d = d * (1.0 / math.sqrt(energy(d)))
        fd = (j_functional(u + eps * d, h, p) - j_functional(u - eps * d, h, p)) / (2 * eps)
        assert inner_e(G, d) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_lagrange_multiplier(grids):
    g = grids(4)
    assert lagrange_multiplier(AxisymmetricFunction.constant(1.0, g), 1.0, 1.5) == pytest.approx(1.0)
    assert lagrange_multiplier(bubble_function(Bubble(0.4, n=4), g), 1.0, g.tau) == pytest.approx(1.0, rel=1e-10)


# -- Newton refinement and rescaling


def test_newton_constant(grids, rng):
    g = grids(4, 128)
    u0 = project_to_S(AxisymmetricFunction.constant(1.0, g) + 1e-3 * random_smooth(g, rng))
    nr = newton_refine(u0, 1.0, 1.5)
    assert nr.converged
    assert nr.mu == pytest.approx(1.0, abs=1e-9)
    assert_allclose(nr.u.values, 1.0, atol=1e-9)


def test_newton_bubble(grids):
    g = grids(4)
    nr = newton_refine(bubble_function(Bubble(0.5, n=4), g), 1.0, g.tau)
    assert nr.converged
    assert nr.iterations <= 3
    assert nr.mu == pytest.approx(1.0, abs=1e-9)


def test_newton_quadratic_convergence(two_bump_run):
    g, h, p, res, _ = two_bump_run
    bump = AxisymmetricFunction.from_callable(lambda r: np.cos(r) ** 2, res.u.grid)
    pert = project_to_S(res.u + 2e-3 * bump)
    nr = newton_refine(pert, h, p, tol=1e-13)
    r = nr.history
    assert nr.converged
    assert len(r) >= 3
    # r_{k+1} / r_k^2 stays bounded once in the basin and above the roundoff floor
    ratios = [b / a**2 for a, b in zip(r, r[1:]) if a < 1e-2 and b > 1e-11]
    assert ratios and max(ratios) < 1e3


def test_rescale_examples(grids):
    g = grids(3)
    u = bubble_function(Bubble(0.5, n=3), g)
    assert_allclose(rescale_to_solution(u, 1.0, 2.5).values, u.values)
    p = 2.5
    assert_allclose(rescale_to_solution(u, 2 ** (p - 1), p).values, 2 * u.values, rtol=1e-14)
    with pytest.raises(ValueError):
        rescale_to_solution(u, 0.0, p)
    with pytest.raises(ValueError):
        rescale_to_solution(u, 1.0, 1.0)


# -- mountain pass


def test_mountain_pass_constant_curvature(grids):
    g = grids(4, 128)
    with pytest.warns(RuntimeWarning, match="Kazdan-Warner"):
        res = mountain_pass(constant(1.0), 0.95 * g.tau, grid=g)
    assert res.converged
    assert res.kind == "maximizer"
    assert res.mu == pytest.approx(1.0, abs=1e-9)
    assert_allclose(res.u.values, 1.0, atol=1e-8)
    assert residual_norm(res.u, 1.0, 0.95 * g.tau, res.mu) < 1e-8


def test_mountain_pass_identical_endpoints(grids):
    g = grids(4, 128)
    psi, _ = default_endpoints(g)
    h, p = two_bump(), 0.95 * g.tau
    res = mountain_pass(h, p, psi, psi)
    assert res.degenerate
    assert res.c_p == pytest.approx(j_functional(psi, h, p))


def test_mountain_pass_two_bump(two_bump_run):
    g, h, p, res, elapsed = two_bump_run
    assert res.converged and res.kind == "mountain_pass"
    assert res.residual < 1e-9
    assert np.all(res.u.values > 0)
    assert energy(res.u, check_aliasing=False) == pytest.approx(radius2(g), rel=1e-10)
    w = res.solution(p)
    assert residual_norm(w, h, p, 1.0) < 1e-6
    assert elapsed < 60


def test_mountain_pass_sandwich(two_bump_run):
    g, h, p, res, _ = two_bump_run
    assert res.c_p <= min(res.endpoint_values)
    delta = min(h.pole_values()) * g.sphere_volume - res.c_p
    assert delta > 0


def test_mountain_pass_path_min_nondecreasing(two_bump_run):
    hist = two_bump_run[3].path_min_history
    assert len(hist) > 1
    assert all(b >= a - 1e-12 * abs(a) for a, b in zip(hist, hist[1:]))


def test_path_invariants(two_bump_run):
    g, h, p, res, _ = two_bump_run
    path = res.path
    assert np.all(np.abs(path.energies() - radius2(g)) < 1e-8)
    for node in path.nodes():
        assert np.all(node.values >= -1e-12)
    psi1, psi2 = default_endpoints(g)
    assert_allclose(path.node(0).values, psi1.values, rtol=1e-12)
    assert_allclose(path.node(path.N - 1).values, psi2.values, rtol=1e-12)


def test_geodesic_path(grids):
    g = grids(4, 128)
    psi1, psi2 = default_endpoints(g)
    path = PathState.geodesic(psi1, psi2, 9)
    assert path.N == 9
    assert np.all(np.abs(path.energies() - radius2(g)) < 1e-8)


def test_kazdan_warner_warning(grids):
    g = grids(4, 64)
    with pytest.warns(RuntimeWarning, match="Kazdan-Warner"):
        mountain_pass(monotone(), 0.9 * g.tau, grid=g, config=SolverConfig(max_climb_iter=50, max_string_iter=50))


@pytest.mark.parametrize("p_frac", [0.999, 1.0])
def test_endpoint_values_near_critical_exponent(p_frac, grids):
    # near tau the best bubble at each pole nearly attains h(r_i)|S^{n-1}|
    g = grids(4)
    h = two_bump(1.5, 0.5, n=4)
    p = p_frac * g.tau
    for pole, hv in zip(("south", "north"), h.pole_values()):
        _, j = best_bubble(g, h, p, pole)
        assert j > hv * g.sphere_volume - 0.05 * hv * g.sphere_volume


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(n_path=2)
    with pytest.raises(ValueError):
        SolverConfig(tol_mp=0)
    with pytest.raises(ValueError):
        SolverConfig(lambda0=2.0)


def test_exponent_range(grids):
    g = grids(4, 64)
    with pytest.raises(ValueError):
        mountain_pass(two_bump(), g.tau + 0.1, grid=g)


# -- continuation


def test_continuation_constant(grids):
    g = grids(4, 64)
    sched = [0.9 * g.tau, 0.95 * g.tau, 0.99 * g.tau]
    rep = continuation(constant(1.0), sched, g)
    assert not rep.concentration
    assert rep.p_values == sched
    assert_allclose(rep.sups, 1.0, atol=1e-8)
    assert all(s.converged for s in rep.steps)


def test_continuation_schedule_validation(grids):
    g = grids(4, 64)
    with pytest.raises(ValueError):
        continuation(constant(1.0), [1.5, 1.4], g)
    with pytest.raises(ValueError):
        continuation(constant(1.0), [1.5, g.tau], g)
    with pytest.raises(ValueError):
        continuation(constant(1.0), [1.0, 1.5], g)


def test_concentration_flag_rule():
    assert concentration_flag([1, 5, 20], [0.5, 0.1, 0.01], 10)
    assert not concentration_flag([1, 5, 9], [0.5, 0.1, 0.01], 10)
    assert not concentration_flag([1, 50, 20], [0.5, 0.1, 0.01], 10)
    assert not concentration_flag([1, 5, 20], [0.5, 0.6, 0.01], 10)
    assert not concentration_flag([1, 20], [0.5, 0.01], 10)
    assert not concentration_flag([1, 5, float("nan")], [0.5, 0.1, 0.01], 10)
