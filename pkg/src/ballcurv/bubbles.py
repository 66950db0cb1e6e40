"""The explicit bubble family and the decomposition of a function near it.

For ``h = 1`` the boundary problem has the positive solutions

    u_lam(r) = (lam / (lam^2 cos^2(r/2) + sin^2(r/2)))^{(n-2)/2},

concentrating at the pole ``r = 0`` as ``lam -> 0``.  They are the conformal
images of the constant function: ``u_lam = T_{1/lam} 1``, where

    (T_beta u)(r) = u(R_beta(r)) * R_beta'(r)^{(n-2)/2},   tan(R_beta/2) = beta tan(r/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import BallPoint
from .spectral import (
    AxisymmetricFunction,
    RadialGrid,
    dilate_colatitude,
    dilation_jacobian,
    energy,
    evaluate,
    inner_e,
    mass_center,
)

POLES = ("south", "north")


@dataclass(frozen=True)
class Bubble:
    lam: float
    pole: str = "south"
    n: int = 3

    def __post_init__(self):
        if not 0 < self.lam <= 1:
            raise ValueError(f"bubble scale must lie in (0, 1], got {self.lam}")
        if self.pole not in POLES:
            raise ValueError(f"unknown pole {self.pole!r}")
        if self.n < 3:
            raise ValueError("dimension must be >= 3")

    @property
    def beta(self) -> float:
        return 1.0 / self.lam

    @property
    def gamma(self) -> float:
        return (self.n - 2) / 2


def _profile(lam: float, rho, gamma: float):
    # valid for any lam > 0; lam > 1 is the bubble of scale 1/lam at the antipode
    return (lam / (lam**2 * np.cos(rho / 2) ** 2 + np.sin(rho / 2) ** 2)) ** gamma


def bubble_boundary(b: Bubble, r):
    """Boundary values of the bubble at colatitude ``r`` (measured from the south pole)."""
    r = np.asarray(r, dtype=float)
    rho = np.pi - r if b.pole == "north" else r
    val = _profile(b.lam, rho, b.gamma)
    return float(val) if val.ndim == 0 else val


def bubble_interior(b: Bubble, z: BallPoint) -> float:
    """Harmonic extension of the bubble to the ball.

    With ``d`` the distance from ``z`` to the pole of concentration and ``s``
    the axial coordinate oriented so that this pole sits at ``s = -1``, this is
    ``(4 beta / ((beta-1)^2 d^2 + 4 s (beta-1) + 4 beta))^{(n-2)/2}``, a multiple
    of ``|z - P|^{2-n}`` for a point ``P`` outside the ball on the axis.
    """
    beta = b.beta
    s = z.s if b.pole == "south" else -z.s
    d2 = float(z.y @ z.y) + (s + 1.0) ** 2
    denom = (beta - 1.0) ** 2 * d2 + 4.0 * s * (beta - 1.0) + 4.0 * beta
    return (4.0 * beta / denom) ** b.gamma


def bubble_function(b: Bubble, grid: RadialGrid) -> AxisymmetricFunction:
    """Bubble sampled on ``grid``.

    On a grid dilated about the bubble's pole the pull-back is again a bubble,
    ``T_mu u_lam = u_{lam/mu}``, and is evaluated in closed form there.
    """
    if b.n != grid.n:
        raise ValueError("dimension mismatch between bubble and grid")
    if not grid.is_reference and grid.pole == b.pole:
        rho = grid.ref_nodes if b.pole == "south" else np.pi - grid.ref_nodes
        ref = _profile(b.lam / grid.dilation, rho, b.gamma)
        return AxisymmetricFunction(grid, grid.from_reference(ref))
    return AxisymmetricFunction(grid, bubble_boundary(b, grid.nodes))


def substituted_grid(b: Bubble, grid: RadialGrid) -> RadialGrid:
    """Grid whose nodes follow the substitution ``r = 2 arctan(lam tan(u/2))``.

    The transformed weights make ``int u_lam^{tau+1} dsigma`` exact for any
    node count, since the pulled-back bubble is the constant 1.
    """
    return grid.dilated(b.lam, b.pole)


def t_phi(u: AxisymmetricFunction, beta: float, pole: str = "south") -> AxisymmetricFunction:
    """Conformal reparametrisation ``(T_beta u)(r) = u(R_beta(r)) R_beta'(r)^gamma``."""
    if not beta > 0:
        raise ValueError(f"dilation factor must be positive, got {beta}")
    g = u.grid
    if beta == 1.0:
        return AxisymmetricFunction(g, u.values.copy())
    target = dilate_colatitude(g.nodes, beta, pole)
    jac = dilation_jacobian(g.nodes, beta, pole)
    return AxisymmetricFunction(g, evaluate(u, target) * jac**g.gamma)


def coordinate_height(grid: RadialGrid) -> AxisymmetricFunction:
    """The coordinate function ``x_n = 1 - cos r`` restricted to the sphere."""
    return AxisymmetricFunction(grid, 1.0 - np.cos(grid.nodes))


def min_resolved_lambda(grid: RadialGrid, pole: str = "south", tol: float = 1e-10) -> float:
    """Smallest bubble scale whose zonal tail on ``grid`` stays below ``tol``.

    The harmonic extension of ``u_lam`` is ``|z - P|^{2-n}`` with ``|P| = (1+lam)/(1-lam)``,
    so its coefficients decay like ``((1-lam)/(1+lam))^k``.
    """
    q = tol ** (1.0 / max(grid.kmax, 1))
    lam_ref = (1.0 - q) / (1.0 + q)
    if not grid.is_reference and grid.pole == pole:
        return lam_ref * grid.dilation
    return lam_ref


@dataclass(frozen=True)
class SigmaReport:
    """Best bubble fit ``u = t0 u_lam + v`` and the neighbourhood test."""

    t0: float
    lam: float
    pole: str
    rho_v: float
    q_n: float
    pole_distance: float
    rho0: float
    inside_sigma: bool
    converged: bool
    v: AxisymmetricFunction | None = None

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "lambda": self.lam,
            "pole": self.pole,
            "rho_v": self.rho_v,
            "q_n": self.q_n,
            "pole_distance": self.pole_distance,
            "rho0": self.rho0,
            "inside_sigma": self.inside_sigma,
            "converged": self.converged,
        }


def default_rho0(n: int) -> float:
    from .spectral import sphere_volume

    return 0.1 * math.sqrt((n - 2) / 2 * sphere_volume(n - 1))


def sigma_decompose(
    u: AxisymmetricFunction,
    pole: str = "south",
    rho0: float | None = None,
    lam_min: float | None = None,
    n_scan: int = 64,
    require_t_near_one: bool = False,
    t_tol: float = 0.1,
) -> SigmaReport:
    """Minimise ``||u - t u_lam||_E`` over ``t`` and ``lam`` in (0, 1].

    For fixed ``lam`` the optimal ``t`` is the Rayleigh quotient
    ``<u, u_lam>_E / E(u_lam)``; the remaining 1-D problem in ``log lam`` is
    scanned coarsely and refined by golden-section search.
    """
    g = u.grid
    rho0 = default_rho0(g.n) if rho0 is None else rho0
    lam_lo = max(min_resolved_lambda(g, pole), 1e-8) if lam_min is None else lam_min
    e_u = energy(u, check_aliasing=False)

    def fit(log_lam):
        ub = bubble_function(Bubble(math.exp(log_lam), pole, g.n), g)
        ip = inner_e(u, ub)
        eb = energy(ub, check_aliasing=False)
        return ip, eb, ub

    def objective(log_lam):
        ip, eb, _ = fit(log_lam)
        return -(ip * abs(ip)) / eb

    # scan from lam = 1 downward so ties resolve toward the larger scale
    logs = np.linspace(0.0, math.log(lam_lo), n_scan)
    vals = np.array([objective(s) for s in logs])
    i = int(np.argmin(vals))
    converged = True
    if i == 0:
        lo, hi = logs[1], 0.0
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = res.x if res.fun < vals[0] else 0.0
    elif i == n_scan - 1:
        best, converged = logs[-1], False
    else:
        try:
            res = minimize_scalar(objective, bracket=(logs[i + 1], logs[i], logs[i - 1]), method="golden", tol=1e-12)
            best = res.x
            converged = bool(res.success)
        except ValueError:
            best = logs[i]
        best = min(max(best, logs[-1]), 0.0)
    ip, eb, ub = fit(best)
    t0 = ip / eb
    v = u - t0 * ub
    rho_v = math.sqrt(max(energy(v, check_aliasing=False), 0.0))
    if e_u > 0:
        rho_v = min(rho_v, math.sqrt(e_u))
    qn = mass_center(u) if np.any(u.values > 0) else float("nan")
    dist = qn if pole == "south" else 2.0 - qn
    inside = rho_v <= rho0 and abs(dist) <= rho0
    if require_t_near_one:
        inside = inside and abs(t0 - 1.0) <= t_tol
    return SigmaReport(t0, math.exp(best), pole, rho_v, qn, dist, rho0, bool(inside), converged, v)


def orthogonality_check(
    v: AxisymmetricFunction, lam: float, beta_fit: float | None = None, pole: str = "south"
) -> dict:
    """Pairings ``<T v, 1>_E`` and ``<T v, x_n>_E`` with ``T`` the dilation that
    carries ``u_lam`` to the constant function (``beta_fit = lam``)."""
    beta = lam if beta_fit is None else beta_fit
    tv = t_phi(v, beta, pole)
    one = AxisymmetricFunction.constant(1.0, v.grid)
    xn = coordinate_height(v.grid)
    if pole == "north":
        xn = 2.0 - xn
    return {"constant": inner_e(tv, one), "height": inner_e(tv, xn)}


def critical_secondary_check(v: AxisymmetricFunction, lam: float, pole: str = "south") -> float:
    """``int u_lam^tau v dsigma``, which vanishes when ``v`` is E-orthogonal to ``u_lam``."""
    g = v.grid
    ub = bubble_function(Bubble(lam, pole, g.n), g)
    return g.integrate(ub.values**g.tau * v.values)


def height_at_scale(lam: float, grid: RadialGrid, pole: str = "south") -> float:
    """Mass-center distance to ``pole`` of the bubble of scale ``lam``."""
    g = grid.reference().dilated(lam, pole) if lam < 1 else grid.reference()
    q = mass_center(bubble_function(Bubble(lam, pole, grid.n), g))
    return q if pole == "south" else 2.0 - q


def scale_for_height(q: float, grid: RadialGrid, pole: str = "south") -> float:
    """Bubble scale whose mass center lies at distance ``q`` from ``pole`` (bisection in log scale)."""
    from scipy.optimize import brentq

    if not 0 < q < 1:
        raise ValueError(f"pole distance must lie in (0, 1), got {q}")
    f = lambda s: height_at_scale(math.exp(s), grid, pole) - q  # noqa: E731
    return math.exp(brentq(f, math.log(1e-8), 0.0, xtol=1e-13))


@dataclass(frozen=True)
class BoundarySample:
    u: AxisymmetricFunction
    lam: float
    t0: float
    rho_v: float
    face: str


def sigma_boundary_samples(
    grid: RadialGrid,
    count: int = 200,
    pole: str = "south",
    rho0: float | None = None,
    lam_min: float = 1e-3,
    kv: int = 16,
    seed: int = 0,
) -> list[BoundarySample]:
    """Functions on the boundary of the bubble neighbourhood of ``pole``.

    Each sample is ``t u_lam + v`` on a grid dilated about the pole by
    ``lam``, where the pull-back of ``v`` is a random zonal series of degrees
    ``2..kv``.  Those modes are energy-orthogonal to the constant and to the
    degree-1 mode, i.e. to ``u_lam`` and its scale derivative, so ``(t, lam)``
    is a stationary fit and ``||v||_E`` is the distance to the family.  Half
    of the samples have ``||v||_E = rho0`` with the mass center inside the
    ball of radius ``rho0``; the other half have a smaller ``v`` and the scale
    chosen by bisection so the mass center lies exactly at distance ``rho0``.
    """
    from .spectral import ZonalSpectrum, synthesize

    rho0 = default_rho0(grid.n) if rho0 is None else rho0
    ref = grid.reference()
    if kv > ref.kmax:
        raise ValueError("perturbation degree exceeds the grid")
    r2 = ref.gamma * ref.sphere_volume
    rng = np.random.default_rng(seed)
    lam_face = scale_for_height(rho0, ref, pole)
    out: list[BoundarySample] = []
    k = np.arange(2, kv + 1)
    sign = 1.0 if pole == "south" else -1.0
    while len(out) < count:
        face = "energy" if len(out) % 2 == 0 else "mass"
        c = np.zeros(ref.kmax + 1)
        # north-pole dilation reverses the parity of the pulled-back modes
        c[2 : kv + 1] = rng.standard_normal(k.size) / k**2 * sign**k
        e = float(((np.arange(ref.kmax + 1) + ref.gamma) * c**2).sum())
        rho = rho0 if face == "energy" else rho0 * rng.uniform(0.0, 1.0)
        c *= rho / math.sqrt(e)
        t = math.sqrt(1.0 - rho**2 / r2)
        if face == "energy":
            lam = math.exp(rng.uniform(math.log(lam_min), math.log(lam_face)))
        else:
            lam = _scale_for_sample_height(ref, c, t, rho0, pole)
            if lam is None:
                continue
        g = ref.dilated(lam, pole)
        vref = synthesize(ZonalSpectrum(ref.n, c), ref).values
        vals = g.from_reference(t + vref)
        if np.any(vals < 0):
            continue
        out.append(BoundarySample(AxisymmetricFunction(g, vals), lam, t, rho, face))
    return out


def _scale_for_sample_height(ref: RadialGrid, c, t, q, pole):
    from scipy.optimize import brentq

    from .spectral import ZonalSpectrum, synthesize

    vref = synthesize(ZonalSpectrum(ref.n, c), ref).values

    def dist(s):
        g = ref.dilated(math.exp(s), pole)
        qn = mass_center(AxisymmetricFunction(g, g.from_reference(np.maximum(t + vref, 0.0))))
        return (qn if pole == "south" else 2.0 - qn) - q

    lo, hi = math.log(1e-8), 0.0
    if dist(lo) * dist(hi) > 0:
        return None
    return math.exp(brentq(dist, lo, hi, xtol=1e-13))
