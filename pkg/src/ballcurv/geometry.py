"""Coordinate machinery for the unit ball and its half-space model.

Chart conventions used throughout the package:

* The ball is the unit ball of R^n centred at the origin.  A point is
  written ``z = (y, s)`` with ``y`` the n-1 tangential coordinates and ``s``
  the axial coordinate, so the south pole is ``(0, -1)``.
* Boundary points are parametrised by the colatitude ``r`` measured from the
  south pole: ``y = sin(r) * theta``, ``s = -cos(r)``.  The chordal distance
  to the south pole is ``2 sin(r/2)`` and the height above the south pole is
  ``1 - cos(r)``.
* The half-space is ``{t <= -1}``.  The extended stereographic map sends the
  ball onto it and fixes the south pole; the boundary sphere lands on the
  plane ``t = -1``.

The extended stereographic map is the inversion in the sphere of radius 2
centred at the north pole ``(0, 1)``, hence it is its own inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TOL = 1e-12


@dataclass(frozen=True)
class BallPoint:
    y: np.ndarray
    s: float

    def __post_init__(self):
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        object.__setattr__(self, "s", float(self.s))

    @property
    def dim(self) -> int:
        return self.y.size + 1

    def as_array(self) -> np.ndarray:
        return np.append(self.y, self.s)

    def south_distance_sq(self) -> float:
        """Squared distance to the south pole, ``|y|^2 + (s+1)^2``."""
        return float(self.y @ self.y + (self.s + 1.0) ** 2)


@dataclass(frozen=True)
class HalfSpacePoint:
    x: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "t", float(self.t))

    @property
    def dim(self) -> int:
        return self.x.size + 1

    def as_array(self) -> np.ndarray:
        return np.append(self.x, self.t)

    def base_distance_sq(self) -> float:
        """Squared distance to the fixed boundary point ``(0, -1)``."""
        return float(self.x @ self.x + (self.t + 1.0) ** 2)


def _invert_about_north(v: np.ndarray, w: float) -> tuple[np.ndarray, float]:
    denom = float(v @ v + (w - 1.0) ** 2)
    if denom < _TOL**2:
        raise ZeroDivisionError("the north pole (0, 1) is the singular point of the chart")
    return 4.0 * v / denom, (float(v @ v) + (w + 1.0) ** 2 - 4.0) / denom


def stereo_to_halfspace(z: BallPoint) -> HalfSpacePoint:
    """Map a ball point into the half-space ``{t <= -1}``."""
    x, t = _invert_about_north(z.y, z.s)
    return HalfSpacePoint(x, t)


def stereo_to_ball(zp: HalfSpacePoint) -> BallPoint:
    """Inverse of :func:`stereo_to_halfspace` (the same inversion)."""
    if zp.t > -1.0 + _TOL:
        raise ValueError(f"half-space point must satisfy t <= -1, got t={zp.t}")
    y, s = _invert_about_north(zp.x, zp.t)
    return BallPoint(y, s)


def conformal_factor(zp: HalfSpacePoint) -> float:
    """Scalar of the pulled-back Euclidean metric, ``16 / (|x|^2 + (t-1)^2)^2``."""
    return 16.0 / (float(zp.x @ zp.x) + (zp.t - 1.0) ** 2) ** 2


def dilation(zp: HalfSpacePoint, beta: float) -> HalfSpacePoint:
    """Axis dilation ``(x, t) -> (beta x, beta (t+1) - 1)`` about ``(0, -1)``."""
    if not beta > 0:
        raise ValueError(f"dilation factor must be positive, got {beta}")
    return HalfSpacePoint(beta * zp.x, beta * (zp.t + 1.0) - 1.0)


def chordal_to_geodesic(chordal):
    """Colatitude ``r = 2 arcsin(d/2)`` of a boundary point at chordal distance ``d``
    from the south pole."""
    d = np.asarray(chordal, dtype=float)
    if np.any(d < -_TOL) or np.any(d > 2.0 + _TOL):
        raise ValueError("chordal distance on the unit sphere lies in [0, 2]")
    r = 2.0 * np.arcsin(np.clip(d, 0.0, 2.0) / 2.0)
    return float(r) if r.ndim == 0 else r


def boundary_point(r: float, direction=None, n: int = 3) -> BallPoint:
    """Boundary point at colatitude ``r`` along the unit tangential ``direction``."""
    if direction is None:
        direction = np.zeros(n - 1)
        direction[0] = 1.0
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    return BallPoint(np.sin(r) * direction, -np.cos(r))


def kelvin_point(x) -> tuple[np.ndarray, float]:
    """Inverted point ``x/|x|^2`` and the Kelvin weight ``|x|^(2-n)``.

    ``v(x) = factor * u(point)`` is the Kelvin transform of ``u``.
    """
    x = np.asarray(x, dtype=float)
    rho2 = float(x @ x)
    if rho2 == 0.0:
        raise ZeroDivisionError("Kelvin inversion is singular at the origin")
    n = x.size
    return x / rho2, rho2 ** ((2 - n) / 2)


def kelvin_transform(u, x):
    """Evaluate the Kelvin transform of the callable ``u`` at ``x``."""
    point, factor = kelvin_point(x)
    return factor * u(point)
