"""Zonal spectral representation of axisymmetric boundary data on S^{n-1}.

Functions are stored by their values at the nodes of a Gauss-Jacobi grid in
``x = cos r`` and expanded in zonal harmonics (Gegenbauer polynomials
``C_k^{(n-2)/2}(cos r)``) orthonormal in L^2(S^{n-1}).  With ``kmax = M - 1``
the transform between node values and coefficients is square and, because
the Gauss rule integrates degree ``2M - 1`` exactly, orthogonal in the
quadrature-weighted inner product.

The harmonic extension of a degree-k zonal harmonic is ``|z|^k Y_k``, so the
Dirichlet-to-Neumann map is the diagonal ``a_k -> k a_k`` and the Robin
operator ``B = d/deta + gamma_n`` is ``a_k -> (k + gamma_n) a_k``.  The energy
is ``E(u) = sum (k + gamma_n) a_k^2``.

A grid may be *dilated* toward a pole.  Its physical nodes are
``r_j = R(u_j)`` with ``tan(R(u)/2) = lam * tan(u/2)`` and the Gauss nodes
``u_j``.  A function on such a grid is handled through its conformal
pull-back ``(T u)(u_j) = u(r_j) R'(u_j)^gamma_n``.  Since ``E``, ``int u^{tau+1}``
and the operator ``B`` are conformally covariant, every functional is
computed exactly in the pulled-back frame.  This is how concentrated bubbles
are integrated to near machine precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy.special import roots_jacobi

ALIAS_TOL = 1e-8

CurvatureLike = Union[Callable[[np.ndarray], np.ndarray], float]


def sphere_volume(d: int) -> float:
    """Surface measure |S^d| of the unit sphere in R^{d+1}."""
    return 2.0 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


def sin_power_integral(d: int) -> float:
    """Closed form of ``int_0^pi sin^d r dr``."""
    return math.sqrt(math.pi) * math.exp(math.lgamma((d + 1) / 2) - math.lgamma(d / 2 + 1))


def _recurrence(a: float, k: int) -> float:
    # squared off-diagonal Jacobi-matrix entry for the symmetric weight (1-x^2)^a
    return k * (k + 2 * a) / ((2 * k + 2 * a - 1) * (2 * k + 2 * a + 1))


def zonal_basis(n: int, kmax: int, r) -> np.ndarray:
    """Orthonormal zonal harmonics ``Y_0 .. Y_kmax`` of S^{n-1} at colatitudes ``r``.

    Returns an array of shape ``(len(r), kmax + 1)``.  Built by the three-term
    recurrence of the orthonormal Jacobi ``(a, a)`` polynomials, ``a = (n-3)/2``,
    which stays bounded at the endpoints for large degrees.
    """
    a = (n - 3) / 2
    x = np.cos(np.atleast_1d(np.asarray(r, dtype=float)))
    P = np.empty((x.size, kmax + 1))
    P[:, 0] = 1.0 / math.sqrt(sin_power_integral(n - 2))
    if kmax >= 1:
        P[:, 1] = x * P[:, 0] / math.sqrt(_recurrence(a, 1))
    for k in range(1, kmax):
        P[:, k + 1] = (x * P[:, k] - math.sqrt(_recurrence(a, k)) * P[:, k - 1]) / math.sqrt(
            _recurrence(a, k + 1)
        )
    return P / math.sqrt(sphere_volume(n - 2))


def dilate_colatitude(r, lam: float, pole: str = "south"):
    """Colatitude map ``R_lam`` with ``tan(R/2) = lam tan(r/2)`` about ``pole``."""
    r = np.asarray(r, dtype=float)
    if pole == "north":
        return np.pi - dilate_colatitude(np.pi - r, lam)
    return 2.0 * np.arctan2(lam * np.sin(r / 2), np.cos(r / 2))


def dilation_jacobian(r, lam: float, pole: str = "south"):
    """Derivative ``R_lam'(r) = lam / (cos^2(r/2) + lam^2 sin^2(r/2))``.

    Because the map is conformal on the sphere, this is also its conformal factor.
    """
    r = np.asarray(r, dtype=float)
    if pole == "north":
        r = np.pi - r
    return lam / (np.cos(r / 2) ** 2 + lam**2 * np.sin(r / 2) ** 2)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Gauss-Jacobi grid on [0, pi] for the measure ``sin^{n-2} r dr``.

    ``dilation`` and ``pole`` describe an optional conformal substitution of the
    nodes toward one pole; ``dilation == 1`` is the plain Gauss grid.
    """

    n: int
    ref_nodes: np.ndarray
    ref_weights: np.ndarray
    basis: np.ndarray
    dilation: float = 1.0
    pole: str = "south"

    @property
    def M(self) -> int:
        return self.ref_nodes.size

    @property
    def kmax(self) -> int:
        return self.basis.shape[1] - 1

    @property
    def gamma(self) -> float:
        return (self.n - 2) / 2

    @property
    def tau(self) -> float:
        return self.n / (self.n - 2)

    @property
    def prefactor(self) -> float:
        """|S^{n-2}|, the volume of the equatorial sphere."""
        return sphere_volume(self.n - 2)

    @property
    def sphere_volume(self) -> float:
        """|S^{n-1}|."""
        return sphere_volume(self.n - 1)

    @property
    def is_reference(self) -> bool:
        return self.dilation == 1.0

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.is_reference:
            return self.ref_nodes
        return dilate_colatitude(self.ref_nodes, self.dilation, self.pole)

    @cached_property
    def jacobian(self) -> np.ndarray:
        if self.is_reference:
            return np.ones(self.M)
        return dilation_jacobian(self.ref_nodes, self.dilation, self.pole)

    @cached_property
    def weights(self) -> np.ndarray:
        """Weights for ``int_0^pi f(r) sin^{n-2} r dr`` at the physical nodes."""
        return self.ref_weights * self.jacobian ** (self.n - 1)

    @cached_property
    def sphere_weights(self) -> np.ndarray:
        """Weights for the surface integral ``int_{S^{n-1}} f dsigma``."""
        return self.prefactor * self.weights

    @cached_property
    def ref_sphere_weights(self) -> np.ndarray:
        return self.prefactor * self.ref_weights

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.arange(self.kmax + 1, dtype=float)

    @cached_property
    def analysis_matrix(self) -> np.ndarray:
        """Maps pulled-back node values to coefficients (Gauss projection)."""
        return (self.basis * self.ref_sphere_weights[:, None]).T

    def to_reference(self, values: np.ndarray) -> np.ndarray:
        """Node values of the conformal pull-back of a physical function."""
        if self.is_reference:
            return np.asarray(values, dtype=float)
        return values * self.jacobian**self.gamma

    def from_reference(self, ref_values: np.ndarray) -> np.ndarray:
        if self.is_reference:
            return np.asarray(ref_values, dtype=float)
        return ref_values / self.jacobian**self.gamma

    def reference(self) -> RadialGrid:
        return replace(self, dilation=1.0, pole="south")

    def dilated(self, lam: float, pole: str = "south") -> RadialGrid:
        """Grid whose nodes are substituted toward ``pole`` with scale ``lam``."""
        if not 0 < lam <= 1:
            raise ValueError(f"dilation scale must lie in (0, 1], got {lam}")
        if pole not in ("south", "north"):
            raise ValueError(f"unknown pole {pole!r}")
        if self.is_reference:
            return replace(self, dilation=float(lam), pole=pole)
        if pole != self.pole:
            raise ValueError("cannot compose dilations about different poles")
        return replace(self, dilation=float(self.dilation * lam), pole=pole)

    def integrate(self, values) -> float:
        """``int_{S^{n-1}} f dsigma`` for node values ``f``."""
        return float(self.sphere_weights @ values)


def _top_polynomial(n: int, M: int, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal ``p_M(cos r)`` and its derivative in ``r``."""
    a = (n - 3) / 2
    x = np.cos(r)
    p_prev, p = np.zeros_like(x), np.full_like(x, 1.0 / math.sqrt(sin_power_integral(n - 2)))
    d_prev, d = np.zeros_like(x), np.zeros_like(x)
    b_prev = 0.0
    for k in range(M):
        b = math.sqrt(_recurrence(a, k + 1))
        p_prev, p = p, (x * p - b_prev * p_prev) / b
        d_prev, d = d, (p_prev + x * d - b_prev * d_prev) / b
        b_prev = b
    return p, -np.sin(r) * d


def make_grid(n: int, M: int = 256, kmax: int | None = None) -> RadialGrid:
    """Gauss grid with ``M`` nodes for zonal functions on S^{n-1}.

    The rule is exact for polynomials in ``cos r`` of degree ``<= 2M - 1``.
    ``kmax`` defaults to ``M - 1`` (square, invertible transform).
    """
    if int(n) != n or n < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {n}")
    if M < 8:
        raise ValueError(f"need at least 8 nodes, got M={M}")
    kmax = M - 1 if kmax is None else int(kmax)
    if not 0 <= kmax <= M - 1:
        raise ValueError(f"kmax must lie in [0, M-1] = [0, {M - 1}], got {kmax}")
    a = (n - 3) / 2
    x, _ = roots_jacobi(M, a, a)
    r = np.arccos(np.clip(np.sort(x)[::-1], -1.0, 1.0))
    # one Newton step in the angle: arccos loses digits next to the poles
    f, df = _top_polynomial(n, M, r)
    r = r - f / df
    full = zonal_basis(int(n), M - 1, r)
    # Christoffel weights 1 / sum_k Y_k(r_j)^2: the library weights lose ~1e-10
    # relative accuracy at M = 256, which the (k + gamma) multiplier amplifies
    w = 1.0 / (full**2).sum(axis=1) / sphere_volume(n - 2)
    return RadialGrid(int(n), r, w, full[:, : kmax + 1])


@dataclass(frozen=True)
class ZonalSpectrum:
    n: int
    coeffs: np.ndarray

    @property
    def kmax(self) -> int:
        return self.coeffs.size - 1

    def tail_fraction(self) -> float:
        """Share of the energy carried by the top quarter of the degrees."""
        k = np.arange(self.coeffs.size)
        e = (k + (self.n - 2) / 2) * self.coeffs**2
        total = e.sum()
        if total == 0:
            return 0.0
        return float(e[k > 0.75 * self.kmax].sum() / total)


@dataclass(frozen=True, eq=False)
class AxisymmetricFunction:
    """A zonal boundary function given by its values at the grid nodes."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} node values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, f, grid: RadialGrid) -> AxisymmetricFunction:
        return cls(grid, np.broadcast_to(f(grid.nodes), (grid.M,)).astype(float))

    @classmethod
    def constant(cls, c: float, grid: RadialGrid) -> AxisymmetricFunction:
        return cls(grid, np.full(grid.M, float(c)))

    @cached_property
    def spectrum(self) -> ZonalSpectrum:
        return analyze(self)

    @property
    def ref_values(self) -> np.ndarray:
        return self.grid.to_reference(self.values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _other(self, other):
        if isinstance(other, AxisymmetricFunction):
            if other.grid is not self.grid:
                raise ValueError("functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return AxisymmetricFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return AxisymmetricFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return AxisymmetricFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, c):
        return AxisymmetricFunction(self.grid, self.values * self._other(c))

    __rmul__ = __mul__

    def __neg__(self):
        return AxisymmetricFunction(self.grid, -self.values)

    def __truediv__(self, c: float):
        return AxisymmetricFunction(self.grid, self.values / c)


def analyze(u: AxisymmetricFunction) -> ZonalSpectrum:
    """Orthonormal zonal coefficients of ``u`` (of its pull-back on dilated grids)."""
    g = u.grid
    return ZonalSpectrum(g.n, g.analysis_matrix @ g.to_reference(u.values))


def synthesize(spec: ZonalSpectrum, grid: RadialGrid) -> AxisymmetricFunction:
    """Node values of the zonal series ``spec``; adjoint of :func:`analyze`."""
    if spec.n != grid.n:
        raise ValueError(f"spectrum is for n={spec.n}, grid for n={grid.n}")
    if spec.kmax > grid.kmax:
        raise ValueError(f"spectrum degree {spec.kmax} exceeds grid kmax {grid.kmax}")
    ref = grid.basis[:, : spec.kmax + 1] @ spec.coeffs
    return AxisymmetricFunction(grid, grid.from_reference(ref))


def zonal_mode(k: int, grid: RadialGrid, amplitude: float = 1.0) -> AxisymmetricFunction:
    """The degree-k orthonormal zonal harmonic on ``grid`` (in its reference frame)."""
    c = np.zeros(grid.kmax + 1)
    c[k] = amplitude
    return synthesize(ZonalSpectrum(grid.n, c), grid)


def dtn_apply(spec: ZonalSpectrum) -> ZonalSpectrum:
    """Dirichlet-to-Neumann map of the unit ball on a zonal spectrum: ``a_k -> k a_k``."""
    return ZonalSpectrum(spec.n, np.arange(spec.coeffs.size) * spec.coeffs)


def robin_apply(spec: ZonalSpectrum) -> ZonalSpectrum:
    """``a_k -> (k + gamma_n) a_k``, the operator ``d/deta + gamma_n``."""
    return ZonalSpectrum(spec.n, (np.arange(spec.coeffs.size) + (spec.n - 2) / 2) * spec.coeffs)


def boundary_operator(u: AxisymmetricFunction) -> AxisymmetricFunction:
    """``B u = du/deta + gamma_n u`` of the harmonic extension, at the physical nodes.

    On a dilated grid ``B`` is applied to the pull-back and mapped back with
    the covariance ``B(T u) = R'^{n/2} (B u) o R``.
    """
    g = u.grid
    ref = g.basis @ robin_apply(u.spectrum).coeffs
    if not g.is_reference:
        ref = ref / g.jacobian ** (g.n / 2)
    return AxisymmetricFunction(g, ref)


def dtn(u: AxisymmetricFunction) -> AxisymmetricFunction:
    """Normal derivative of the harmonic extension of ``u``."""
    return boundary_operator(u) - u.grid.gamma * u


def _check_alias(spec: ZonalSpectrum) -> None:
    tail = spec.tail_fraction()
    if tail > ALIAS_TOL:
        warnings.warn(
            f"zonal tail carries {tail:.2e} of the energy; function is under-resolved",
            RuntimeWarning,
            stacklevel=3,
        )


def energy(u: AxisymmetricFunction, check_aliasing: bool = True) -> float:
    """``E(u) = int_B |grad u|^2 + gamma_n int_S u^2``, as ``sum (k + gamma_n) a_k^2``."""
    spec = u.spectrum
    if check_aliasing:
        _check_alias(spec)
    k = np.arange(spec.coeffs.size)
    return float(((k + u.grid.gamma) * spec.coeffs**2).sum())


def inner_e(u: AxisymmetricFunction, v: AxisymmetricFunction) -> float:
    """Bilinear form associated with :func:`energy`."""
    if u.grid is not v.grid:
        raise ValueError("functions live on different grids")
    k = np.arange(u.spectrum.coeffs.size)
    return float(((k + u.grid.gamma) * u.spectrum.coeffs * v.spectrum.coeffs).sum())


def gradient_energy(u: AxisymmetricFunction) -> float:
    """Dirichlet part ``int_B |grad u|^2 = sum k a_k^2`` of the energy."""
    spec = u.spectrum
    return float((np.arange(spec.coeffs.size) * spec.coeffs**2).sum())


def curvature_values(h: CurvatureLike, r: np.ndarray) -> np.ndarray:
    if callable(h):
        return np.broadcast_to(np.asarray(h(r), dtype=float), np.shape(r))
    return np.full(np.shape(r), float(h))


def _nonnegative(u: AxisymmetricFunction) -> np.ndarray:
    scale = max(1.0, u.sup())
    if np.any(u.values < -1e-12 * scale):
        raise ValueError(f"function takes negative values (min {u.values.min():.3e})")
    return np.maximum(u.values, 0.0)


def j_functional(u: AxisymmetricFunction, h: CurvatureLike, p: float) -> float:
    """``J_p(u) = int_{S^{n-1}} h u^{p+1} dsigma`` (no gamma_n prefactor)."""
    g = u.grid
    if not 1 < p <= g.tau + 1e-12:
        raise ValueError(f"exponent p must lie in (1, {g.tau}], got {p}")
    w = _nonnegative(u)
    return g.integrate(curvature_values(h, g.nodes) * w ** (p + 1))


def residual(u: AxisymmetricFunction, h: CurvatureLike, p: float, mu: float = 1.0) -> AxisymmetricFunction:
    """Pointwise ``du/deta + gamma_n u - mu gamma_n h u^p`` at the nodes."""
    g = u.grid
    w = _nonnegative(u)
    return boundary_operator(u) - mu * g.gamma * curvature_values(h, g.nodes) * w**p


def reference_residual(u: AxisymmetricFunction, h: CurvatureLike, p: float, mu: float = 1.0) -> np.ndarray:
    """Residual of the pulled-back equation at the reference nodes.

    On a dilated grid this is ``R'^{n/2}`` times the physical residual, the
    natural weight of ``B u`` under the conformal covariance.  It is computed
    from the pull-back directly, ``B(T u) - mu gamma h o R R'^{gamma (tau - p)} (T u)^p``,
    so no large factor ``R'^{-n/2}`` multiplies roundoff.  On the plain grid it
    equals the physical residual.
    """
    g = u.grid
    ref = np.maximum(g.to_reference(_nonnegative(u)), 0.0)
    hv = curvature_values(h, g.nodes)
    if not g.is_reference:
        hv = hv * g.jacobian ** (g.gamma * (g.tau - p))
    return g.basis @ robin_apply(u.spectrum).coeffs - mu * g.gamma * hv * ref**p


def residual_norm(u: AxisymmetricFunction, h: CurvatureLike, p: float, mu: float = 1.0) -> float:
    """Max-norm of :func:`reference_residual`, the convergence certificate."""
    return float(np.max(np.abs(reference_residual(u, h, p, mu))))


def mass_center(u: AxisymmetricFunction) -> float:
    """Axial component (height above the south pole) of the ``u^{tau+1}``-weighted
    barycentre of the boundary sphere; tangential components vanish by symmetry."""
    g = u.grid
    dens = _nonnegative(u) ** (g.tau + 1)
    den = g.integrate(dens)
    if den <= 0:
        raise ZeroDivisionError("mass center of the zero function is undefined")
    return g.integrate((1.0 - np.cos(g.nodes)) * dens) / den


def evaluate(u: AxisymmetricFunction, r) -> np.ndarray:
    """Evaluate the zonal interpolant of ``u`` at arbitrary colatitudes ``r``."""
    g = u.grid
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if g.is_reference:
        ref_r, jac = r, None
    else:
        ref_r = dilate_colatitude(r, 1.0 / g.dilation, g.pole)
        jac = dilation_jacobian(ref_r, g.dilation, g.pole)
    vals = zonal_basis(g.n, u.spectrum.kmax, ref_r) @ u.spectrum.coeffs
    if jac is not None:
        vals = vals / jac**g.gamma
    return vals


def regrid(u: AxisymmetricFunction, grid: RadialGrid) -> AxisymmetricFunction:
    """Interpolate ``u`` onto another grid of the same dimension."""
    if grid.n != u.grid.n:
        raise ValueError("dimension mismatch")
    return AxisymmetricFunction(grid, evaluate(u, grid.nodes))
