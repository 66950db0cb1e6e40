"""Prescribed boundary curvature profiles ``h(r)`` and the checks run on them.

A profile carries its value and derivative in the colatitude ``r`` together
with declared critical points ``(r0, a, alpha)`` meaning
``h(r) = h(r0) + a |r - r0|^alpha + o(|r - r0|^alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

CRIT_TOL = 1e-8
FIT_WINDOW = (1e-4, 1e-1)
FIT_SAMPLES = 32
ROUNDOFF_FLOOR = 1e-10
MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class CriticalPoint:
    r0: float
    a: float
    alpha: float

    @property
    def kind(self) -> str:
        return "max" if self.a < 0 else "min"


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    name: str
    h: callable
    dh: callable
    critical_points: tuple[CriticalPoint, ...] = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for cp in self.critical_points:
            if cp.a == 0:
                raise ValueError(f"critical point at r0={cp.r0} declares a = 0")
            if not 0 <= cp.r0 <= math.pi:
                raise ValueError(f"critical point r0={cp.r0} outside [0, pi]")
            if not self._sign_consistent(cp):
                raise ValueError(f"h' does not change sign as a local {cp.kind} at r0={cp.r0}")

    def _sign_consistent(self, cp: CriticalPoint, eps: float = 1e-3) -> bool:
        # a max has h' > 0 on its left and h' < 0 on its right
        left, right = (1.0, -1.0) if cp.a < 0 else (-1.0, 1.0)
        ok = True
        if cp.r0 + eps <= math.pi:
            ok &= float(np.sign(self.derivative(cp.r0 + eps))) == right
        if cp.r0 - eps >= 0:
            ok &= float(np.sign(self.derivative(cp.r0 - eps))) == left
        return bool(ok)

    def __call__(self, r):
        return np.asarray(self.h(np.asarray(r, dtype=float)), dtype=float)

    def derivative(self, r):
        return np.asarray(self.dh(np.asarray(r, dtype=float)), dtype=float)

    def scaled(self, c: float) -> CurvatureProfile:
        """The profile ``c h``."""
        cps = tuple(CriticalPoint(cp.r0, c * cp.a, cp.alpha) for cp in self.critical_points)
        return CurvatureProfile(
            f"{c:g}*{self.name}", lambda r: c * self.h(r), lambda r: c * self.dh(r), cps, dict(self.params)
        )

    def pole_values(self) -> tuple[float, float]:
        return float(self(0.0)), float(self(math.pi))


# ---------------------------------------------------------------------------
# builtin profiles


def two_bump(alpha: float = 1.5, a: float = 0.5, n: int | None = None) -> CurvatureProfile:
    """``h = 1 - a sin^alpha r``: equal maxima 1 at both poles and a dip at the equator."""
    if a <= 0 or alpha <= 0:
        raise ValueError("two_bump needs a > 0 and alpha > 0")

    def h(r):
        return 1.0 - a * np.abs(np.sin(r)) ** alpha

    def dh(r):
        s = np.abs(np.sin(r))
        with np.errstate(divide="ignore", invalid="ignore"):
            d = -a * alpha * np.where(s > 0, s ** (alpha - 1), 0.0 if alpha > 1 else np.inf) * np.cos(r)
        return d

    cps = (
        CriticalPoint(0.0, -a, alpha),
        CriticalPoint(math.pi, -a, alpha),
        CriticalPoint(math.pi / 2, a * alpha / 2, 2.0),
    )
    params = {"alpha": alpha, "a": a}
    if n is not None:
        if not n - 3 < alpha < n - 1:
            raise ValueError(f"flatness exponent {alpha} outside ({n - 3}, {n - 1}) for n={n}")
        params["n"] = n
    return CurvatureProfile("two_bump", h, dh, cps, params)


def monotone(c: float = 1.0, alpha: float = 1.0) -> CurvatureProfile:
    """``h = 1 - c sin^alpha(r/2)``, decreasing from its only maximum at the south pole."""
    if c <= 0 or alpha <= 0:
        raise ValueError("monotone needs c > 0 and alpha > 0")

    def h(r):
        return 1.0 - c * np.sin(r / 2) ** alpha

    def dh(r):
        s = np.sin(r / 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            base = np.where(s > 0, s ** (alpha - 1), 0.0 if alpha > 1 else (1.0 if alpha == 1 else np.inf))
        return -c * alpha / 2 * base * np.cos(r / 2)

    cps = (CriticalPoint(0.0, -c * 2.0**-alpha, alpha), CriticalPoint(math.pi, c * alpha / 8, 2.0))
    return CurvatureProfile("monotone", h, dh, cps, {"c": c, "alpha": alpha})


def constant(c: float = 1.0) -> CurvatureProfile:
    return CurvatureProfile(
        "constant", lambda r: np.full(np.shape(r), float(c)), lambda r: np.zeros(np.shape(r)), (), {"c": c}
    )


def power(a: float = 0.5, alpha: float = 1.5, h0: float = 1.0) -> CurvatureProfile:
    """``h = h0 - a r^alpha``, the model of a flat maximum at the south pole."""
    if a == 0 or alpha <= 0:
        raise ValueError("power needs a != 0 and alpha > 0")

    def dh(r):
        with np.errstate(divide="ignore", invalid="ignore"):
            return -a * alpha * np.where(r > 0, np.abs(r) ** (alpha - 1), 0.0 if alpha > 1 else np.inf)

    return CurvatureProfile(
        "power",
        lambda r: h0 - a * np.abs(r) ** alpha,
        dh,
        (CriticalPoint(0.0, -a, alpha),),
        {"a": a, "alpha": alpha, "h0": h0},
    )


def cosine() -> CurvatureProfile:
    """``h = cos r``."""
    return CurvatureProfile(
        "cosine",
        np.cos,
        lambda r: -np.sin(r),
        (CriticalPoint(0.0, -0.5, 2.0), CriticalPoint(math.pi, 0.5, 2.0)),
        {},
    )


def tabulated(r, h) -> CurvatureProfile:
    """Cubic-spline interpolant of samples ``(r_i, h_i)`` covering ``[0, pi]``."""
    r = np.asarray(r, dtype=float)
    h = np.asarray(h, dtype=float)
    if r.ndim != 1 or r.shape != h.shape or r.size < 4:
        raise ValueError("tabulated profile needs matching 1-D arrays with at least 4 samples")
    if np.any(np.diff(r) <= 0):
        raise ValueError("sample colatitudes must be strictly increasing")
    if r[0] > 1e-12 or r[-1] < math.pi - 1e-12:
        raise ValueError("samples must cover [0, pi]")
    spline = CubicSpline(r, h)
    d = spline.derivative()
    return CurvatureProfile("tabulated", spline, d, (), {"samples": int(r.size)})


BUILTINS = {
    "two_bump": two_bump,
    "monotone": monotone,
    "constant": constant,
    "power": power,
    "cosine": cosine,
}


def builtin_profiles(name: str, **params) -> CurvatureProfile:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**params)


def profile_from_spec(spec) -> CurvatureProfile:
    """Build a profile from ``{"name": ..., "params": {...}}`` or ``{"table": {"r": [...], "h": [...]}}``."""
    if isinstance(spec, CurvatureProfile):
        return spec
    if isinstance(spec, str):
        return builtin_profiles(spec)
    if "table" in spec:
        return tabulated(spec["table"]["r"], spec["table"]["h"])
    return builtin_profiles(spec["name"], **spec.get("params", {}))


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class KWReport:
    satisfied: bool
    increasing_witness: float | None
    decreasing_witness: float | None
    critical_points: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "increasing_witness": self.increasing_witness,
            "decreasing_witness": self.decreasing_witness,
            "critical_points": list(self.critical_points),
        }


def find_critical_points(h: CurvatureProfile, n_samples: int = 4097, tol: float = CRIT_TOL) -> list[float]:
    """Zeros of ``h'`` on ``[0, pi]``: sign changes refined by Brent's method,
    sampled exact zeros, and the poles whenever ``|h'|`` vanishes there."""
    r = np.linspace(0.0, math.pi, n_samples)
    d = h.derivative(r)
    if np.all(np.abs(d) < tol):
        # locally constant everywhere: no isolated critical points
        return []
    out = [float(x) for x in (0.0, math.pi) if abs(float(h.derivative(x))) < tol]
    sg = np.sign(d)
    for i in range(1, n_samples - 1):
        if sg[i] == 0:
            out.append(float(r[i]))
    for i in range(n_samples - 1):
        if sg[i] * sg[i + 1] < 0:
            root = brentq(lambda x: float(h.derivative(x)), r[i], r[i + 1], xtol=1e-15)
            # a jump of h' (a kink) also changes sign; keep genuine zeros only
            if abs(float(h.derivative(root))) < tol:
                out.append(float(root))
    out = sorted(out)
    merged = [x for i, x in enumerate(out) if i == 0 or x - out[i - 1] > 1e-9]
    return merged


def kazdan_warner_check(h: CurvatureProfile, n_samples: int = 4097) -> KWReport:
    """Does ``h'`` take both signs on ``{h > 0}``?

    Witnesses are the sampled points with ``h > 0`` where ``h'`` is largest
    and smallest.  Both must be nonzero beyond roundoff.
    """
    r = np.linspace(0.0, math.pi, n_samples)[1:-1]
    hv = h(r)
    d = h.derivative(r)
    scale = max(1.0, float(np.max(np.abs(d[np.isfinite(d)]), initial=0.0)))
    pos = (hv > 0) & np.isfinite(d)
    up = pos & (d > 1e-12 * scale)
    down = pos & (d < -1e-12 * scale)
    wa = float(r[up][np.argmax(d[up])]) if up.any() else None
    wb = float(r[down][np.argmin(d[down])]) if down.any() else None
    crit = tuple(find_critical_points(h, n_samples))
    return KWReport(bool(up.any() and down.any()), wa, wb, crit)


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class FlatnessFit:
    r0: float
    alpha: float
    a: float
    stderr: float
    admissible: bool

    def to_dict(self) -> dict:
        return {"r0": self.r0, "alpha": self.alpha, "a": self.a, "stderr": self.stderr, "admissible": self.admissible}


def flatness_fit(
    h: CurvatureProfile,
    r0: float,
    n: int,
    window: tuple[float, float] = FIT_WINDOW,
    n_samples: int = FIT_SAMPLES,
) -> FlatnessFit:
    """Least-squares slope of ``log|h(r) - h(r0)|`` against ``log|r - r0|``.

    Interior points are fitted on both sides.  Admissible means
    ``n - 3 < alpha < n - 1`` with both gaps exceeding twice the slope's
    standard error (plus a 1e-6 floor, so a planted boundary exponent is
    never accepted through roundoff).
    """
    if not 0 <= r0 <= math.pi:
        raise ValueError(f"r0={r0} outside [0, pi]")
    on_pole = r0 < 1e-12 or r0 > math.pi - 1e-12
    d0 = float(h.derivative(r0))
    if not on_pole and np.isfinite(d0) and abs(d0) > 1e-6:
        raise ValueError(f"r0={r0} is not a critical point (h'={d0:.3e})")
    s = np.geomspace(window[0], window[1], n_samples)
    pts = []
    if r0 + window[1] <= math.pi + 1e-12:
        pts.append(r0 + s)
    if r0 - window[1] >= -1e-12:
        pts.append(r0 - s)
    if not pts:
        raise ValueError("fit window does not fit inside [0, pi]")
    rr = np.concatenate(pts)
    ss = np.abs(rr - r0)
    dh = h(rr) - float(h(r0))
    scale = max(1.0, abs(float(h(r0))))
    # very flat points lose h - h(r0) to cancellation near the inner end of the window
    keep = np.abs(dh) > ROUNDOFF_FLOOR * scale
    if keep.sum() < MIN_FIT_POINTS:
        raise DegenerateFitError(f"h is locally constant near r0={r0}; no exponent to fit")
    rr, ss, dh = rr[keep], ss[keep], dh[keep]
    signs = np.sign(dh)
    if np.any(signs != signs[0]):
        raise DegenerateFitError(f"h - h(r0) changes sign near r0={r0}; not an extremum")
    X = np.column_stack([np.log(ss), np.ones_like(ss)])
    y = np.log(np.abs(dh))
    coef, res, *_ = np.linalg.lstsq(X, y, rcond=None)
    alpha, logc = coef
    dof = max(len(y) - 2, 1)
    sigma2 = float(res[0]) / dof if res.size else 0.0
    cov = sigma2 * np.linalg.inv(X.T @ X)
    stderr = math.sqrt(max(cov[0, 0], 0.0))
    margin = 2 * stderr + 1e-6
    admissible = (alpha - (n - 3) > margin) and ((n - 1) - alpha > margin)
    return FlatnessFit(float(r0), float(alpha), float(signs[0] * math.exp(logc)), stderr, bool(admissible))
