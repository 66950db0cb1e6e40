"""Variational solver on the constraint sphere ``S = {E(u) = gamma_n |S^{n-1}|, u >= 0}``.

The mountain-pass value is taken in the orientation ``c_p = sup_paths min_{u in path} J_p(u)``:
``J_p`` is large at bubbles concentrated at the maxima of ``h``, and a path
joining two of them is pushed upward at its lowest point.  The discrete scheme
is an elastic string: interior nodes ascend perpendicular to the path and are
re-spaced uniformly in the energy metric.  Once the string settles the lowest
node becomes a climbing image that ascends across the path and descends along
it, which converges to the saddle.  Newton's method on the Lagrange system
then polishes the critical point.

All work happens on the coefficients of the pulled-back function, so the same
code runs on plain and dilated grids.  With ``T`` the pull-back and
``R'`` the dilation Jacobian, ``J_p(u) = sum_j w_j h(r_j) R'_j^{gamma (tau - p)} (T u)_j^{p+1}``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .bubbles import Bubble, SigmaReport, bubble_function, sigma_decompose
from .curvature import CurvatureProfile, kazdan_warner_check
from .spectral import (
    AxisymmetricFunction,
    CurvatureLike,
    RadialGrid,
    ZonalSpectrum,
    curvature_values,
    energy,
    regrid,
    residual_norm,
    synthesize,
)

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when an iteration fails; ``diagnostics`` holds the state at failure."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class SolverConfig:
    n_path: int = 33
    lambda0: float = 0.05
    tol_mp: float = 1e-5
    tol_newton: float = 1e-9
    max_string_iter: int = 3000
    max_climb_iter: int = 20000
    max_newton_iter: int = 30
    string_tol: float = 1e-3
    step0: float = 0.5
    max_step: float = 4.0
    blowup_ratio: float = 10.0
    eps_final: float = 1e-3
    abort_on_failure: bool = False
    rho0: float | None = None
    regrid: bool = True

    def __post_init__(self):
        if self.n_path < 3:
            raise ValueError("a path needs at least 3 nodes")
        for name in ("tol_mp", "tol_newton", "string_tol", "step0", "blowup_ratio", "eps_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.lambda0 <= 1:
            raise ValueError("lambda0 must lie in (0, 1]")


class _Problem:
    """``E``, ``J_p`` and their derivatives in pulled-back coefficients."""

    def __init__(self, grid: RadialGrid, h: CurvatureLike, p: float):
        if not 1 < p <= grid.tau + 1e-12:
            raise ValueError(f"exponent p must lie in (1, {grid.tau}], got {p}")
        self.grid = grid
        self.p = float(p)
        self.B = grid.basis
        self.A = grid.analysis_matrix[: grid.kmax + 1]
        self.kg = grid.degrees + grid.gamma
        self.sw = grid.ref_sphere_weights
        ht = curvature_values(h, grid.nodes)
        if not grid.is_reference:
            ht = ht * grid.jacobian ** (grid.gamma * (grid.tau - p))
        self.ht = ht
        self.radius2 = grid.gamma * grid.sphere_volume

    # -- conversions
    def coeffs(self, u: AxisymmetricFunction) -> np.ndarray:
        if u.grid is not self.grid:
            u = regrid(u, self.grid)
        return self.A @ self.grid.to_reference(u.values)

    def function(self, a: np.ndarray) -> AxisymmetricFunction:
        return synthesize(ZonalSpectrum(self.grid.n, a), self.grid)

    # -- functionals (rows of ``a`` are independent states)
    def E(self, a):
        return (self.kg * a * a).sum(axis=-1)

    def inner(self, a, b):
        return (self.kg * a * b).sum(axis=-1)

    def J(self, a):
        v = np.maximum(a @ self.B.T, 0.0)
        return (v ** (self.p + 1) * (self.sw * self.ht)).sum(axis=-1)

    def dJ(self, a):
        """Euclidean gradient of ``J`` in the coefficients."""
        v = np.maximum(a @ self.B.T, 0.0)
        return (self.p + 1) * (v**self.p * (self.sw * self.ht)) @ self.B

    def tangent_gradient(self, a):
        """Riesz representative of ``dJ`` in the energy metric, projected onto the
        tangent space of the energy sphere at ``a``."""
        g = self.dJ(a)
        G = g / self.kg
        c = (g * a).sum(axis=-1) / self.E(a)
        return G - np.asarray(c)[..., None] * a

    def retract(self, a):
        v = np.maximum(a @ self.B.T, 0.0)
        b = v @ self.A.T
        e = self.E(b)
        if np.any(e <= 0):
            raise ValueError("cannot project the zero function onto S")
        return b * np.sqrt(self.radius2 / e)[..., None]

    def enorm(self, a):
        return np.sqrt(np.maximum(self.E(a), 0.0))


# ---------------------------------------------------------------------------
# single-function operations


def project_to_S(u: AxisymmetricFunction) -> AxisymmetricFunction:
    """Clip negative values, then scale so that ``E(u) = gamma_n |S^{n-1}|``."""
    g = u.grid
    v = AxisymmetricFunction(g, np.maximum(u.values, 0.0))
    e = energy(v, check_aliasing=False)
    if e <= 0:
        raise ValueError("cannot project the zero function onto S")
    return v * math.sqrt(g.gamma * g.sphere_volume / e)


def constrained_gradient(u: AxisymmetricFunction, h: CurvatureLike, p: float) -> AxisymmetricFunction:
    """Energy-metric gradient of ``J_p`` tangent to the energy sphere at ``u``."""
    prob = _Problem(u.grid, h, p)
    return prob.function(prob.tangent_gradient(prob.coeffs(u)))


def lagrange_multiplier(u: AxisymmetricFunction, h: CurvatureLike, p: float) -> float:
    """``mu = E(u) / (gamma_n J_p(u))``, exact at critical points."""
    prob = _Problem(u.grid, h, p)
    a = prob.coeffs(u)
    return float(prob.E(a) / (u.grid.gamma * prob.J(a)))


@dataclass
class NewtonResult:
    u: AxisymmetricFunction
    mu: float
    residual: float
    iterations: int
    converged: bool
    singular: bool
    history: list[float] = field(default_factory=list)
    damping: list[float] = field(default_factory=list)


def _lagrange_residual(prob: _Problem, a, mu):
    v = prob.B @ a
    vp = np.maximum(v, 0.0)
    F = prob.B @ (prob.kg * a) - mu * prob.grid.gamma * prob.ht * vp**prob.p
    return F, prob.E(a) - prob.radius2


def newton_refine(
    u0: AxisymmetricFunction,
    h: CurvatureLike,
    p: float,
    tol: float = 1e-9,
    max_iter: int = 30,
    mu0: float | None = None,
) -> NewtonResult:
    """Damped Newton on ``B u - mu gamma_n h u^p = 0``, ``E(u) = gamma_n |S^{n-1}|``.

    Unknowns are the zonal coefficients and ``mu``; the equations are
    collocated at the nodes (in the pulled-back frame on dilated grids).  A
    step that would make a node negative, or that fails to reduce the
    residual, is halved.  A numerically singular Jacobian (a degenerate
    critical point such as the bubble family at the critical exponent) is
    flagged and handled by least squares.
    """
    g = u0.grid
    prob = _Problem(g, h, p)
    a = prob.coeffs(u0)
    mu = float(prob.E(a) / (g.gamma * prob.J(a))) if mu0 is None else float(mu0)
    K = a.size
    F, c = _lagrange_residual(prob, a, mu)
    res = max(float(np.max(np.abs(F))), abs(c))
    history, damping = [res], []
    singular = False
    it = 0
    while res >= tol and it < max_iter:
        it += 1
        v = np.maximum(prob.B @ a, 0.0)
        Jm = np.empty((K + 1, K + 1))
        Jm[:K, :K] = prob.B * prob.kg - (mu * g.gamma * prob.p * prob.ht * v ** (prob.p - 1))[:, None] * prob.B
        Jm[:K, K] = -g.gamma * prob.ht * v**prob.p
        Jm[K, :K] = 2 * prob.kg * a
        Jm[K, K] = 0.0
        rhs = -np.append(F, c)
        sv = np.linalg.svd(Jm, compute_uv=False)
        if sv[-1] < 1e-11 * sv[0]:
            singular = True
            step = np.linalg.lstsq(Jm, rhs, rcond=1e-11)[0]
        else:
            step = np.linalg.solve(Jm, rhs)
        t = 1.0
        accepted = False
        for _ in range(40):
            a_new = a + t * step[:K]
            mu_new = mu + t * step[K]
            if np.all(prob.B @ a_new >= 0):
                F_new, c_new = _lagrange_residual(prob, a_new, mu_new)
                res_new = max(float(np.max(np.abs(F_new))), abs(c_new))
                if res_new < res or res_new < tol:
                    accepted = True
                    break
            t /= 2
        damping.append(t)
        if not accepted:
            break
        a, mu, F, c, res = a_new, mu_new, F_new, c_new, res_new
        history.append(res)
    u = prob.function(a)
    return NewtonResult(u, float(mu), float(res), it, bool(res < tol), singular, history, damping)


def rescale_to_solution(u: AxisymmetricFunction, mu: float, p: float) -> AxisymmetricFunction:
    """``w = mu^{1/(p-1)} u`` solves ``B w = gamma_n h w^p`` when ``(u, mu)`` solves the Lagrange system."""
    if not mu > 0:
        raise ValueError(f"multiplier must be positive for a solution, got mu={mu}")
    if not p > 1:
        raise ValueError(f"exponent must exceed 1, got p={p}")
    return u * mu ** (1.0 / (p - 1))


# ---------------------------------------------------------------------------
# paths


@dataclass
class PathState:
    """Discrete path of ``N`` coefficient vectors on a common grid with fixed endpoints."""

    grid: RadialGrid
    coeffs: np.ndarray

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    def node(self, i: int) -> AxisymmetricFunction:
        return synthesize(ZonalSpectrum(self.grid.n, self.coeffs[i]), self.grid)

    def nodes(self) -> list[AxisymmetricFunction]:
        return [self.node(i) for i in range(self.N)]

    def energies(self) -> np.ndarray:
        kg = self.grid.degrees + self.grid.gamma
        return (kg * self.coeffs**2).sum(axis=1)

    @classmethod
    def geodesic(cls, psi1: AxisymmetricFunction, psi2: AxisymmetricFunction, N: int) -> PathState:
        """Great-circle interpolation on the energy sphere, then projection onto ``S``."""
        g = psi1.grid
        prob = _Problem(g, 1.0, min(2.0, g.tau))
        a1, a2 = prob.coeffs(psi1), prob.coeffs(psi2)
        r2 = prob.radius2
        cos_t = float(np.clip(prob.inner(a1, a2) / r2, -1.0, 1.0))
        theta = math.acos(cos_t)
        s = np.linspace(0.0, 1.0, N)[:, None]
        if theta < 1e-12:
            P = (1 - s) * a1 + s * a2
        else:
            P = (np.sin((1 - s) * theta) * a1 + np.sin(s * theta) * a2) / math.sin(theta)
        P[1:-1] = prob.retract(P[1:-1])
        P[0], P[-1] = a1, a2
        return cls(g, P)


def _tangents(prob: _Problem, P):
    T = P[2:] - P[:-2]
    nrm = prob.enorm(T)
    nrm[nrm == 0] = 1.0
    return T / nrm[:, None]


def _respace(prob: _Problem, P, lo: int, hi: int):
    """Re-space nodes ``lo..hi`` uniformly in energy arclength, keeping both ends."""
    seg = P[lo : hi + 1]
    if seg.shape[0] < 3:
        return P
    d = prob.enorm(np.diff(seg, axis=0))
    s = np.concatenate([[0.0], np.cumsum(d)])
    if s[-1] == 0:
        return P
    target = np.linspace(0.0, s[-1], seg.shape[0])
    idx = np.clip(np.searchsorted(s, target[1:-1], side="right") - 1, 0, seg.shape[0] - 2)
    w = ((target[1:-1] - s[idx]) / np.where(d[idx] > 0, d[idx], 1.0))[:, None]
    new = (1 - w) * seg[idx] + w * seg[idx + 1]
    out = P.copy()
    out[lo + 1 : hi] = prob.retract(new)
    return out


@dataclass
class MountainPassResult:
    c_p: float
    u: AxisymmetricFunction
    mu: float
    residual: float
    kind: str
    degenerate: bool
    converged: bool
    grad_norm: float
    iterations: dict
    endpoint_values: tuple[float, float]
    path_min_history: list[float]
    sigma: SigmaReport | None
    path: PathState | None
    newton: NewtonResult | None
    diagnostics: dict = field(default_factory=dict)

    def solution(self, p: float) -> AxisymmetricFunction:
        return rescale_to_solution(self.u, self.mu, p)

    def summary(self) -> dict:
        return {
            "c_p": self.c_p,
            "mu": self.mu,
            "residual": self.residual,
            "kind": self.kind,
            "degenerate": self.degenerate,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
            "iterations": dict(self.iterations),
            "endpoint_values": list(self.endpoint_values),
            "sup": self.u.sup(),
            "sigma": self.sigma.to_dict() if self.sigma is not None else None,
        }


def default_endpoints(grid: RadialGrid, lam: float = 0.05) -> tuple[AxisymmetricFunction, AxisymmetricFunction]:
    """Bubbles of scale ``lam`` at the south and north poles, projected onto ``S``
    so that truncation on a coarse grid does not leave them off the constraint."""
    return (
        project_to_S(bubble_function(Bubble(lam, "south", grid.n), grid)),
        project_to_S(bubble_function(Bubble(lam, "north", grid.n), grid)),
    )


def _string_phase(prob: _Problem, P, cfg: SolverConfig, history: list[float]):
    """Perpendicular ascent of the interior nodes with uniform re-spacing.

    A step is accepted only if the lowest value on the path does not drop.
    """
    step = cfg.step0
    Jv = prob.J(P)
    it = 0
    for it in range(1, cfg.max_string_iter + 1):
        G = prob.tangent_gradient(P[1:-1])
        T = _tangents(prob, P)
        G_perp = G - prob.inner(G, T)[:, None] * T
        gmax = float(prob.enorm(G_perp).max())
        if gmax < cfg.string_tol:
            break
        while step > 1e-12:
            Q = P.copy()
            Q[1:-1] = prob.retract(P[1:-1] + step * G_perp)
            Q = _respace(prob, Q, 0, P.shape[0] - 1)
            Jq = prob.J(Q)
            if Jq.min() >= Jv.min():
                P, Jv = Q, Jq
                history.append(float(Jv.min()))
                step = min(step * 1.2, cfg.max_step)
                break
            step /= 2
        else:
            break
    return P, it


def _climb_phase(prob: _Problem, P, cfg: SolverConfig):
    """Climbing image at the lowest interior node.

    The node follows ``G - 2 <G, t> t``: up across the path, down along it.
    Each half of the path is re-spaced separately around it.
    """
    N = P.shape[0]
    c = int(np.argmin(prob.J(P[1:-1]))) + 1
    step = cfg.step0
    gnorm = float(prob.enorm(prob.tangent_gradient(P[c])))
    it = 0
    for it in range(1, cfg.max_climb_iter + 1):
        if gnorm < cfg.tol_mp:
            break
        G = prob.tangent_gradient(P[c])
        t = P[c + 1] - P[c - 1]
        t = t / prob.enorm(t)
        F = G - 2 * prob.inner(G, t) * t
        while step > 1e-14:
            a_new = prob.retract(P[c] + step * F)
            g_new = float(prob.enorm(prob.tangent_gradient(a_new)))
            if g_new < gnorm:
                break
            step /= 2
        else:
            break
        P = P.copy()
        P[c] = a_new
        gnorm = g_new
        step = min(step * 1.5, cfg.max_step)
        if it % 20 == 0:
            P = _respace(prob, P, 0, c)
            P = _respace(prob, P, c, N - 1)
            # the lowest node may have moved to a neighbour of the climber
            c2 = int(np.argmin(prob.J(P[1:-1]))) + 1
            if c2 != c and prob.J(P[c2]) < prob.J(P[c]) - 1e-12:
                c = c2
                gnorm = float(prob.enorm(prob.tangent_gradient(P[c])))
    return P, c, gnorm, it


def maximize(
    h: CurvatureLike,
    p: float,
    u0: AxisymmetricFunction,
    cfg: SolverConfig | None = None,
) -> tuple[AxisymmetricFunction, float, int]:
    """Projected gradient ascent of ``J_p`` on ``S`` from ``u0``; returns ``(u, grad_norm, iterations)``."""
    cfg = cfg or SolverConfig()
    prob = _Problem(u0.grid, h, p)
    a = prob.retract(prob.coeffs(u0))
    j = float(prob.J(a))
    step = cfg.step0
    G = prob.tangent_gradient(a)
    gnorm = float(prob.enorm(G))
    it = 0
    for it in range(1, cfg.max_climb_iter + 1):
        if gnorm < cfg.tol_mp:
            break
        while step > 1e-14:
            b = prob.retract(a + step * G)
            jb = float(prob.J(b))
            if jb >= j:
                break
            step /= 2
        else:
            break
        a, j = b, jb
        G = prob.tangent_gradient(a)
        gnorm = float(prob.enorm(G))
        step = min(step * 1.5, cfg.max_step)
    return prob.function(a), gnorm, it


def best_bubble(grid: RadialGrid, h: CurvatureLike, p: float, pole: str = "south", lam_min: float = 1e-4):
    """Scale maximising ``J_p`` over the bubbles at ``pole``; returns ``(lam, J_p)``.

    Each bubble is evaluated on a grid dilated about its pole, where it is the
    constant function, so the values are exact up to the quadrature of ``h``.
    """
    ref = grid.reference()

    def value(log_lam):
        lam = math.exp(min(log_lam, 0.0))
        g = ref.dilated(lam, pole) if lam < 1 else ref
        prob = _Problem(g, h, p)
        return float(prob.J(prob.coeffs(bubble_function(Bubble(lam, pole, ref.n), g))))

    logs = np.linspace(math.log(lam_min), 0.0, 57)
    vals = [value(s) for s in logs]
    i = int(np.argmax(vals))
    lo, hi = logs[max(i - 1, 0)], logs[min(i + 1, len(logs) - 1)]
    res = minimize_scalar(lambda s: -value(s), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    if -res.fun > vals[i]:
        return math.exp(res.x), float(-res.fun)
    return math.exp(logs[i]), float(vals[i])


def _maximizer_on_adapted_grid(h, p, grid: RadialGrid, cfg: SolverConfig, pole_hint: str | None = None):
    """Global maximiser of ``J_p`` on ``S``, searched from the best bubble at each pole.

    When the best bubble is concentrated the search runs on a grid dilated
    about its pole so the result stays resolved.
    """
    ref = grid.reference()
    best = None
    poles = [pole_hint] if pole_hint else ["south", "north"]
    for pole in poles:
        lam, _ = best_bubble(ref, h, p, pole)
        g = ref.dilated(lam, pole) if (cfg.regrid and lam < 0.2) else ref
        u0 = bubble_function(Bubble(lam, pole, ref.n), g)
        u, gnorm, it = maximize(h, p, u0, cfg)
        prob = _Problem(g, h, p)
        j = float(prob.J(prob.coeffs(u)))
        if best is None or j > best[1]:
            best = (u, j, gnorm, it)
    return best


def mountain_pass(
    h: CurvatureLike,
    p: float,
    psi1: AxisymmetricFunction | None = None,
    psi2: AxisymmetricFunction | None = None,
    config: SolverConfig | None = None,
    grid: RadialGrid | None = None,
    path: PathState | None = None,
) -> MountainPassResult:
    """Maximin critical point of ``J_p`` on ``S`` over paths from ``psi1`` to ``psi2``.

    If the lowest point of every discrete path sits at an endpoint (no
    mountain-pass geometry, e.g. ``h`` constant or monotone) the result is
    flagged ``degenerate`` and the returned critical point is the maximiser
    of ``J_p`` reached by ascent from the top of the path, with
    ``kind = "maximizer"``.
    """
    cfg = config or SolverConfig()
    if psi1 is None or psi2 is None:
        if grid is None:
            raise ValueError("need endpoints or a grid to build default endpoints")
        d1, d2 = default_endpoints(grid, cfg.lambda0)
        psi1 = d1 if psi1 is None else psi1
        psi2 = d2 if psi2 is None else psi2
    g = psi1.grid
    if psi2.grid is not g:
        raise ValueError("endpoints live on different grids")
    if isinstance(h, CurvatureProfile) and not kazdan_warner_check(h).satisfied:
        warnings.warn("h fails the Kazdan-Warner sign condition; a mountain pass may not exist", RuntimeWarning)
    prob = _Problem(g, h, p)
    if path is None:
        path = PathState.geodesic(psi1, psi2, cfg.n_path)
    else:
        path = PathState(g, np.array(path.coeffs, copy=True))
        path.coeffs[0], path.coeffs[-1] = prob.coeffs(psi1), prob.coeffs(psi2)
        path.coeffs[1:-1] = prob.retract(path.coeffs[1:-1])
    P = path.coeffs
    ends = (float(prob.J(P[0])), float(prob.J(P[-1])))
    history = [float(prob.J(P).min())]
    same = bool(prob.enorm(P[0] - P[-1]) < 1e-12)
    iterations = {"string": 0, "climb": 0, "ascent": 0, "newton": 0}
    diagnostics: dict = {}

    if not same:
        P, iterations["string"] = _string_phase(prob, P, cfg, history)
    Jv = prob.J(P)
    interior_min = float(Jv[1:-1].min()) if not same else math.inf
    degenerate = same or interior_min >= min(ends) - 1e-12 * abs(min(ends))
    diagnostics["path_values"] = Jv.tolist()

    if degenerate:
        c_p = min(ends)
        top = int(np.argmax(Jv))
        u_start = PathState(g, P).node(top)
        u, gnorm, iterations["ascent"] = maximize(h, p, u_start, cfg)
        kind = "maximizer"
    else:
        P, c, gnorm, iterations["climb"] = _climb_phase(prob, P, cfg)
        u = PathState(g, P).node(c)
        c_p = float(prob.J(P[c]))
        kind = "mountain_pass"
        diagnostics["climb_index"] = c
    nr = newton_refine(u, h, p, tol=cfg.tol_newton, max_iter=cfg.max_newton_iter)
    iterations["newton"] = nr.iterations
    u_star = nr.u
    if nr.converged:
        c_p_refined = float(_Problem(g, h, p).J(_Problem(g, h, p).coeffs(u_star)))
        if kind == "mountain_pass":
            c_p = c_p_refined
        diagnostics["critical_value"] = c_p_refined
    converged = nr.converged and (gnorm < cfg.tol_mp or nr.residual < cfg.tol_newton)
    if not converged:
        msg = (
            f"solver did not converge: grad_norm={gnorm:.3e}, newton residual={nr.residual:.3e}, "
            f"iterations={iterations}"
        )
        diagnostics["message"] = msg
        diagnostics["path_energies"] = PathState(g, P).energies().tolist()
        log.warning(msg)
    try:
        pole = "south" if float(np.max(u_star.values[: g.M // 2])) >= float(np.max(u_star.values[g.M // 2 :])) else "north"
        sig = sigma_decompose(u_star, pole, rho0=cfg.rho0)
    except (ValueError, ZeroDivisionError):
        sig = None
    return MountainPassResult(
        c_p=float(c_p),
        u=u_star,
        mu=nr.mu,
        residual=residual_norm(u_star, h, p, nr.mu),
        kind=kind,
        degenerate=bool(degenerate),
        converged=bool(converged),
        grad_norm=float(gnorm),
        iterations=iterations,
        endpoint_values=ends,
        path_min_history=history,
        sigma=sig,
        path=PathState(g, P),
        newton=nr,
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# continuation


@dataclass
class ContinuationStep:
    p: float
    c_p: float
    sup: float
    lam_conc: float
    lam_star: float
    q_n: float
    residual: float
    mu: float
    kind: str
    converged: bool
    dilation: float
    error: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ContinuationReport:
    steps: list[ContinuationStep]
    concentration: bool
    flag_step: int | None
    solutions: list[AxisymmetricFunction | None] = field(default_factory=list)

    @property
    def p_values(self) -> list[float]:
        return [s.p for s in self.steps]

    @property
    def sups(self) -> list[float]:
        return [s.sup for s in self.steps]


def concentration_flag(sups, lam_stars, ratio: float) -> bool:
    """Sup-norms grow monotonically by more than ``ratio`` over the last three
    steps while the fitted bubble scale shrinks monotonically."""
    if len(sups) < 3:
        return False
    s = np.asarray(sups[-3:], dtype=float)
    lam = np.asarray(lam_stars[-3:], dtype=float)
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(lam))):
        return False
    grows = bool(np.all(np.diff(s) > 0) and s[-1] / s[0] > ratio)
    shrinks = bool(np.all(np.diff(lam) < 0))
    return grows and shrinks


def continuation(
    h: CurvatureLike,
    p_schedule,
    grid: RadialGrid,
    config: SolverConfig | None = None,
) -> ContinuationReport:
    """Follow the critical point as ``p`` increases toward ``tau``.

    Each step warm-starts from the previous path.  When the critical point is
    a maximiser concentrating at a pole, later steps run on a grid dilated
    about that pole so the profile stays resolved.
    """
    cfg = config or SolverConfig()
    ps = [float(p) for p in p_schedule]
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise ValueError("p schedule must be strictly increasing")
    if ps and not (ps[0] > 1 and ps[-1] <= grid.tau - cfg.eps_final + 1e-12):
        raise ValueError(f"p schedule must lie in (1, tau - {cfg.eps_final}] with tau = {grid.tau}")
    steps: list[ContinuationStep] = []
    sols: list[AxisymmetricFunction | None] = []
    path = None
    flag, flag_step = False, None
    maximizer_mode = False
    sups, lams = [], []
    for i, p in enumerate(ps):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                if not maximizer_mode:
                    psi1, psi2 = default_endpoints(grid, cfg.lambda0)
                    res = mountain_pass(h, p, psi1, psi2, cfg, path=path)
                    path = res.path
                    u, mu, kind, c_p, ok = res.u, res.mu, res.kind, res.c_p, res.converged
                    if res.degenerate:
                        maximizer_mode = True
                if maximizer_mode:
                    u, c_p, gnorm, _ = _maximizer_on_adapted_grid(h, p, grid, cfg)
                    nr = newton_refine(u, h, p, tol=cfg.tol_newton, max_iter=cfg.max_newton_iter)
                    u, mu, kind, ok = nr.u, nr.mu, "maximizer", nr.converged
            w = rescale_to_solution(u, mu, p)
            sup = w.sup()
            pole = "south" if evaluate_pole(u, "south") >= evaluate_pole(u, "north") else "north"
            sig = sigma_decompose(u, pole, rho0=cfg.rho0)
            step = ContinuationStep(
                p=p,
                c_p=float(c_p),
                sup=float(sup),
                lam_conc=float(sup ** (-(p - 1) / 2)),
                lam_star=sig.lam,
                q_n=sig.q_n,
                residual=residual_norm(u, h, p, mu),
                mu=float(mu),
                kind=kind,
                converged=bool(ok),
                dilation=u.grid.dilation,
            )
            sols.append(w)
        except (SolverError, ValueError, np.linalg.LinAlgError) as exc:
            step = ContinuationStep(p, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, "failed", False, 1.0, str(exc))
            sols.append(None)
            if cfg.abort_on_failure:
                steps.append(step)
                break
        steps.append(step)
        sups.append(step.sup)
        lams.append(step.lam_star)
        if not flag and concentration_flag(sups, lams, cfg.blowup_ratio):
            flag, flag_step = True, i
    return ContinuationReport(steps, flag, flag_step, sols)


def evaluate_pole(u: AxisymmetricFunction, pole: str) -> float:
    """Value of ``u`` at a pole, from its zonal interpolant."""
    from .spectral import evaluate

    return float(evaluate(u, [0.0 if pole == "south" else math.pi])[0])
