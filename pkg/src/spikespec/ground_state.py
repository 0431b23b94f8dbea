"""Radial ground state of -Δu + u = u^p in transverse dimension d = n + 1.

The profile solves w'' + (n/r) w' - w + w^p = 0 with w'(0) = 0 and w -> 0.
It is found by shooting on w(0): an orbit started too high crosses zero,
one started too low turns upward. Orbits are advanced with a fixed-step
second-order Runge-Kutta scheme (Heun), so the profile error is O(step²).

Once an orbit is small enough for the nonlinearity to be negligible, the
remaining tail is the decaying solution of w'' + (n/r) w' = w, namely
r^{-ν} K_ν(r) with ν = (n - 1)/2. It is used both to classify candidates
before they diverge and to continue the profile past the splice radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicHermiteSpline

from .errors import NoGroundState, TailTooShort, ToleranceNotMet

# Below this value the orbit is replaced by the linear decaying tail.
SPLICE_LEVEL = 1e-4


@dataclass(frozen=True)
class ProblemParams:
    """Exponent p and transverse dimension d of the ground-state problem."""

    p: float
    d: int

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"exponent p must exceed 1, got {self.p}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension d must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", float(self.p))

    @property
    def n(self) -> int:
        return self.d - 1

    @property
    def critical_exponent(self) -> float:
        """Sobolev exponent (d+2)/(d-2), infinite for d <= 2."""
        return math.inf if self.d <= 2 else (self.d + 2) / (self.d - 2)

    @property
    def subcritical(self) -> bool:
        return self.p < self.critical_exponent


def angular_factors(d: int) -> tuple[float, float]:
    """Return (area, first moment) of the angular measure of the half-space.

    ``area`` integrates 1 and ``moment`` integrates (ζ₁/r)² over the unit
    half-sphere of R^d. For d = 1 the whole line is used, so both are 2.
    """
    if d == 1:
        return 2.0, 2.0
    full = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
    return full / 2.0, full / (2.0 * d)


def tail_shape(r, n: int):
    """Decaying solution r^{-ν} K_ν(r) of the linearized radial equation.

    Returns ``(g, g')`` scaled by e^{r} to avoid underflow.
    """
    nu = 0.5 * (n - 1)
    r = np.asarray(r, dtype=float)
    scale = r ** (-nu)
    return scale * special.kve(nu, r), -scale * special.kve(nu + 1.0, r)


def tail_log_slope(r, n: int):
    """The ratio g'/g of the decaying tail, i.e. -K_{ν+1}(r)/K_ν(r)."""
    g, dg = tail_shape(r, n)
    return dg / g


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled ground state on the uniform grid r = 0, step, ..., r_max."""

    params: ProblemParams
    grid: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    r_max: float
    step: float
    splice_radius: float

    @property
    def w0(self) -> float:
        return float(self.w[0])

    def tail_amplitude(self) -> float:
        """Coefficient c of the tail c·r^{-ν}K_ν(r) matched at the last node."""
        g, _ = tail_shape(self.grid[-1], self.params.n)
        return float(self.w[-1] / (g * math.exp(-self.grid[-1])))

    def evaluate(self, r) -> tuple[np.ndarray, np.ndarray]:
        """Return w and w' at arbitrary radii.

        Inside the grid the samples are joined by cubic Hermite interpolation;
        beyond it the matched decaying tail is used.
        """
        r = np.asarray(r, dtype=float)
        w = np.empty_like(r)
        dw = np.empty_like(r)
        inside = r <= self.grid[-1]
        if np.any(inside):
            spline = CubicHermiteSpline(self.grid, self.w, self.dw)
            w[inside] = spline(r[inside])
            dw[inside] = spline(r[inside], 1)
        if np.any(~inside):
            ro = r[~inside]
            g, dg = tail_shape(ro, self.params.n)
            c = self.tail_amplitude() * np.exp(-ro)
            w[~inside] = c * g
            dw[~inside] = c * dg
        return w, dw

    def second_derivative(self) -> np.ndarray:
        """w'' on the grid, taken from the ODE itself."""
        p, n = self.params.p, self.params.n
        w, dw, r = self.w, self.dw, self.grid
        out = np.empty_like(w)
        out[0] = (w[0] - w[0] ** p) / self.params.d
        out[1:] = -(n / r[1:]) * dw[1:] + w[1:] - np.abs(w[1:]) ** (p - 1) * w[1:]
        return out


@dataclass(frozen=True)
class ProfileConstants:
    """Half-space integrals of the ground state."""

    p: float
    d: int
    r_max: float
    step: float
    C0: float
    C1: float
    l2_sq: float
    h1_sq: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("p", "d", "r_max", "step", "C0", "C1", "l2_sq", "h1_sq")}


@dataclass(frozen=True)
class DecayReport:
    radii: np.ndarray
    amplitude: np.ndarray  # e^r r^{n/2} w(r)
    log_slope: np.ndarray  # w'(r)/w(r)
    amplitude_limit: float
    slope_limit: float
    amplitude_variation: float
    converged: bool


def _shoot(w0: float, params: ProblemParams, step: float, nsteps: int, slope: np.ndarray) -> int:
    """Classify one candidate: +1 if w(0) is too large, -1 if too small.

    An orbit is too large once it crosses zero and too small once it turns
    upward. When it falls below SPLICE_LEVEL first, the sign of its
    component along the growing linear mode decides, which is the sign of
    w' - (g'/g) w for the decaying tail g.
    """
    p, n, d = params.p, params.n, params.d
    h, hh = step, 0.5 * step
    q = p - 1.0
    acc = (w0 - w0**p) / d
    w, v = w0 + 0.5 * acc * h * h, acc * h
    for i in range(1, nsteps):
        r = i * h
        a = w - abs(w) ** q * w - (n / r) * v
        wp = w + h * v
        vp = v + h * a
        b = wp - abs(wp) ** q * wp - (n / (r + h)) * vp
        w = w + hh * (v + vp)
        v = v + hh * (a + b)
        if w < 0:
            return 1
        if v > 0:
            return -1
        if w < SPLICE_LEVEL:
            return 1 if v - slope[i + 1] * w < 0 else -1
    return 1 if v - slope[nsteps] * w < 0 else -1


def _orbit(w0: float, params: ProblemParams, step: float, nsteps: int):
    """Integrate one orbit with the same scheme as :func:`_shoot`."""
    p, n, d = params.p, params.n, params.d
    h, hh = step, 0.5 * step
    w = np.empty(nsteps + 1)
    v = np.empty(nsteps + 1)
    w[0], v[0] = w0, 0.0
    acc = (w0 - w0**p) / d
    wi, vi = w0 + 0.5 * acc * h * h, acc * h
    w[1], v[1] = wi, vi
    for i in range(1, nsteps):
        r = i * h
        a = wi - abs(wi) ** (p - 1) * wi - (n / r) * vi
        wp = wi + h * vi
        vp = vi + h * a
        b = wp - abs(wp) ** (p - 1) * wp - (n / (r + h)) * vp
        wi = wi + hh * (vi + vp)
        vi = vi + hh * (a + b)
        w[i + 1], v[i + 1] = wi, vi
    return w, v


def _splice(grid, w, dw, n):
    """Replace the orbit beyond the first radius where w < SPLICE_LEVEL."""
    below = np.nonzero(w[1:] < SPLICE_LEVEL)[0]
    if below.size == 0:
        return w, dw, float(grid[-1])
    i = below[0] + 1
    bad = np.nonzero((w[1 : i + 1] <= 0) | (dw[1 : i + 1] >= 0))[0]
    if bad.size:
        raise ToleranceNotMet("shooting orbit left the positive decreasing branch before the splice radius")
    rs = grid[i]
    g, dg = tail_shape(grid[i:], n)
    gs, _ = tail_shape(rs, n)
    c = w[i] / gs
    decay = np.exp(-(grid[i:] - rs))
    w = w.copy()
    dw = dw.copy()
    w[i:] = c * g * decay
    dw[i:] = c * dg * decay
    return w, dw, float(rs)


def solve_profile(params: ProblemParams, r_max: float = 15.0, step: float = 1e-3, tol: float = 1e-10) -> RadialProfile:
    """Shoot for the positive decaying radial solution.

    The bracket on w(0) is narrowed until it reaches floating-point
    resolution, because the orbit error grows like e^r out to the splice
    radius; ``tol`` is the widest bracket that is accepted.
    """
    if r_max < 10:
        raise ValueError("r_max must be at least 10")
    if not 0 < step <= 1e-2:
        raise ValueError("step must lie in (0, 1e-2]")
    if not 0 < tol <= 1e-8:
        raise ValueError("tol must lie in (0, 1e-8]")
    nsteps = int(round(r_max / step))
    r_max = nsteps * step
    grid = step * np.arange(nsteps + 1)
    slope = np.empty(nsteps + 1)
    slope[0] = -np.inf
    slope[1:] = tail_log_slope(grid[1:], params.n)

    def classify(c):
        return _shoot(c, params, step, nsteps, slope)

    lo, hi = 1.0, 2.0
    while classify(hi) < 0:
        lo, hi = hi, 2.0 * hi
        # Beyond this the step no longer resolves the core of the orbit.
        if step * hi ** (0.5 * (params.p - 1)) > 0.05:
            raise NoGroundState(
                f"no crossing orbit found for p={params.p}, d={params.d}; "
                "the exponent may be critical or supercritical"
            )
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if classify(mid) > 0:
            hi = mid
        else:
            lo = mid
    if hi - lo > tol:
        raise ToleranceNotMet(f"bracket on w(0) stalled at width {hi - lo:.3e} > {tol:.1e}")

    w0 = 0.5 * (lo + hi)
    w, dw = _orbit(w0, params, step, nsteps)
    w, dw, rs = _splice(grid, w, dw, params.n)
    return RadialProfile(params, grid, w, dw, float(r_max), float(step), rs)


def profile_from_samples(params: ProblemParams, grid, w, dw) -> RadialProfile:
    """Rebuild a profile from exported samples."""
    grid = np.asarray(grid, dtype=float)
    w = np.asarray(w, dtype=float)
    dw = np.asarray(dw, dtype=float)
    step = float(grid[1] - grid[0])
    below = np.nonzero(w[1:] < SPLICE_LEVEL)[0]
    rs = float(grid[below[0] + 1]) if below.size else float(grid[-1])
    return RadialProfile(params, grid, w, dw, float(grid[-1]), step, rs)


def compute_constants(profile: RadialProfile) -> ProfileConstants:
    """Half-space integrals by radial reduction and composite Simpson quadrature."""
    p, n, d = profile.params.p, profile.params.n, profile.params.d
    area, moment = angular_factors(d)
    r, w, dw = profile.grid, profile.w, profile.dw
    rn = r**n
    grad = integrate.simpson(dw**2 * rn, x=r)
    C0 = moment * grad
    C1 = p * moment * integrate.simpson(np.abs(w) ** (p - 1) * dw**2 * rn, x=r)
    l2 = area * integrate.simpson(w**2 * rn, x=r)
    h1 = area * grad + l2
    return ProfileConstants(p, d, profile.r_max, profile.step, float(C0), float(C1), float(l2), float(h1))


def decay_diagnostics(profile: RadialProfile) -> DecayReport:
    """Fit the limits of e^r r^{n/2} w(r) and w'/w on the outer third."""
    r = profile.grid
    outer = r >= (2.0 / 3.0) * profile.r_max
    if np.count_nonzero(outer) < 100:
        raise TailTooShort(f"only {np.count_nonzero(outer)} samples in the outer third; need 100")
    n = profile.params.n
    ro = r[outer]
    amp = np.exp(ro) * ro ** (0.5 * n) * profile.w[outer]
    ratio = profile.dw[outer] / profile.w[outer]
    # Both sequences approach their limits like a + b/r + c/r^2.
    basis = np.vstack([np.ones_like(ro), 1.0 / ro, 1.0 / ro**2]).T
    amp_limit = float(np.linalg.lstsq(basis, amp, rcond=None)[0][0])
    slope_limit = float(np.linalg.lstsq(basis, ratio, rcond=None)[0][0])
    variation = float((amp.max() - amp.min()) / abs(amp_limit))
    converged = variation < 0.01 and abs(slope_limit + 1.0) < 1e-2
    return DecayReport(ro, amp, ratio, amp_limit, slope_limit, variation, converged)
