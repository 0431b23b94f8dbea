"""Spectral data of model submanifolds: Laplace-Beltrami, normal and Jacobi lists.

The normal bundle is modeled as trivial and flat, so the normal Laplacian
acts componentwise and its spectrum is n copies of the Laplace-Beltrami one.
The Jacobi operator is the scalar shift ω + κ of it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateJacobi, DegenerateModelWarning, InsufficientData

MIN_WEYL_ENTRIES = 1000
# |μ| at or below this (relative to the shift) counts as a zero mode.
ZERO_MU = 1e-12


@dataclass(frozen=True, eq=False)
class SubmanifoldSpectra:
    k: int
    n: int
    vol: float
    rho: np.ndarray
    omega: np.ndarray | None = None
    mu: np.ndarray | None = None
    label: str = ""
    kappa: float | None = None

    def __post_init__(self):
        if self.k < 1 or self.vol <= 0:
            raise ValueError("need k >= 1 and vol > 0")
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        for name in ("omega", "mu"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=float))

    @property
    def min_abs_mu(self) -> float | None:
        return None if self.mu is None or self.mu.size == 0 else float(np.min(np.abs(self.mu)))

    @property
    def nondegenerate(self) -> bool:
        m = self.min_abs_mu
        return m is not None and m > _zero_level(self.kappa)

    def truncated(self, count: int) -> SubmanifoldSpectra:
        """First `count` entries of ρ, with ω and μ cut to n·count."""
        cut = None if self.omega is None else self.omega[: self.n * count]
        return replace(self, rho=self.rho[:count], omega=cut,
                       mu=None if self.mu is None else self.mu[: self.n * count])

    def to_dict(self) -> dict:
        out = {"k": self.k, "n": self.n, "vol": self.vol, "label": self.label, "rho": self.rho.tolist()}
        out["omega"] = [] if self.omega is None else self.omega.tolist()
        out["mu"] = [] if self.mu is None else self.mu.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SubmanifoldSpectra:
        omega = data.get("omega") or None
        mu = data.get("mu") or None
        return cls(int(data["k"]), int(data.get("n", 1)), float(data["vol"]), data["rho"], omega, mu,
                   str(data.get("label", "")))


@dataclass(frozen=True)
class WeylReport:
    fitted_constant: float
    fitted_exponent: float
    target_exponent: float
    relative_errors: np.ndarray = field(repr=False)
    which: str = "rho"

    @property
    def exponent_error(self) -> float:
        return abs(self.fitted_exponent - self.target_exponent) / self.target_exponent

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "fitted_constant": self.fitted_constant,
            "fitted_exponent": self.fitted_exponent,
            "target_exponent": self.target_exponent,
            "max_relative_error": float(np.max(self.relative_errors)),
            "median_relative_error": float(np.median(self.relative_errors)),
        }


def _zero_level(kappa) -> float:
    return ZERO_MU * max(1.0, abs(kappa or 0.0))


def circle_spectrum(length: float, count: int) -> SubmanifoldSpectra:
    """Fourier spectrum (2πm/L)² of a circle, zero mode first, pairs after."""
    if length <= 0:
        raise ValueError("length must be positive")
    if count < 1:
        raise ValueError("count must be positive")
    j = np.arange(count)
    m = (j + 1) // 2
    rho = (2.0 * math.pi * m / length) ** 2
    return SubmanifoldSpectra(1, 1, float(length), rho, label=f"circle(L={length:g})")


def flat_torus_spectrum(lengths, count: int) -> SubmanifoldSpectra:
    """Lattice spectrum Σ(2πm_i/L_i)² of a flat rectangular torus."""
    lengths = [float(x) for x in lengths]
    if not lengths or min(lengths) <= 0:
        raise ValueError("lengths must be positive")
    if count < 1:
        raise ValueError("count must be positive")
    k = len(lengths)
    bound = math.ceil(count ** (1.0 / max(k, 2))) + 2
    while True:
        vals = np.zeros(1)
        for L in lengths:
            axis = (2.0 * math.pi * np.arange(-bound, bound + 1) / L) ** 2
            vals = np.add.outer(vals, axis).ravel()
        # Any vector outside the box has some |m_i| > bound.
        frontier = min((2.0 * math.pi * (bound + 1) / L) ** 2 for L in lengths)
        if vals.size >= count:
            vals = np.partition(vals, count - 1)[:count]
            if vals.max() < frontier:
                break
        bound = math.ceil(1.5 * bound) + 1
    vals.sort()
    vol = float(np.prod(lengths))
    label = "torus(" + ",".join(f"{L:g}" for L in lengths) + ")"
    return SubmanifoldSpectra(k, 1, vol, vals, label=label)


def build_spectra(base: SubmanifoldSpectra, n: int, kappa: float) -> SubmanifoldSpectra:
    """ω = n copies of each ρ_j, μ = ω + κ; warns if the model is degenerate."""
    if n < 1:
        raise ValueError("normal rank must be positive")
    omega = np.repeat(base.rho, n)
    mu = omega + kappa
    out = replace(base, n=n, omega=omega, mu=mu, kappa=float(kappa))
    if not out.nondegenerate:
        warnings.warn(f"Jacobi spectrum has a zero mode (min|mu| = {out.min_abs_mu:.3g})",
                      DegenerateModelWarning, stacklevel=2)
    return out


def _weyl_list(spectra: SubmanifoldSpectra, which: str) -> np.ndarray:
    if which not in ("rho", "omega", "mu"):
        raise ValueError(f"unknown list {which!r}")
    vals = getattr(spectra, which)
    if vals is None:
        raise InsufficientData(f"{which} list is not populated")
    if which != "rho":
        # The normal lists repeat each ρ n times; fold back to one copy.
        vals = vals[:: spectra.n]
    return vals


def weyl_check(spectra: SubmanifoldSpectra, which: str = "rho") -> WeylReport:
    """Fit λ_j ≈ C (j/Vol)^{2/k} over the top half of a list.

    The exponent is a free least-squares slope of log λ against log j; the
    constant is then fitted with the exponent held at 2/k.
    """
    vals = _weyl_list(spectra, which)
    if vals.size < MIN_WEYL_ENTRIES:
        raise InsufficientData(f"weyl_check needs >= {MIN_WEYL_ENTRIES} entries, got {vals.size}")
    j = np.arange(vals.size, dtype=float)
    top = slice(vals.size // 2, None)
    lam, jj = vals[top], j[top]
    keep = lam > 0
    if keep.sum() < 2:
        raise InsufficientData("no positive entries in the top half")
    lam, jj = lam[keep], jj[keep]
    x = np.log(jj / spectra.vol)
    y = np.log(lam)
    slope, _ = np.polyfit(x, y, 1)
    target = 2.0 / spectra.k
    log_c = float(np.mean(y - target * x))
    const = math.exp(log_c)
    rel = np.abs(lam / (const * np.exp(target * x)) - 1.0)
    return WeylReport(const, float(slope), target, rel, which)


def counting_function(values, lam) -> np.ndarray:
    """N(λ) = #{values ≤ λ} for sorted values."""
    return np.searchsorted(np.asarray(values), np.asarray(lam, dtype=float), side="right")


def jacobi_apply(spectra: SubmanifoldSpectra, phi, c0: float) -> np.ndarray:
    """Forward map Φ ↦ C₀𝔍Φ in the Jacobi eigenbasis."""
    phi = np.asarray(phi, dtype=float)
    return c0 * spectra.mu[: phi.size] * phi


def jacobi_invert(spectra: SubmanifoldSpectra, g_coeffs, c0: float) -> np.ndarray:
    """Solve C₀𝔍Φ = G mode by mode: φ_l = g_l / (C₀ μ_l)."""
    if spectra.mu is None:
        raise ValueError("spectra has no Jacobi list; call build_spectra first")
    g = np.asarray(g_coeffs, dtype=float)
    if g.size > spectra.mu.size:
        raise ValueError("more coefficients than Jacobi modes")
    mu = spectra.mu[: g.size]
    zero = np.abs(mu) <= _zero_level(spectra.kappa)
    hit = zero & (g != 0)
    if hit.any():
        raise DegenerateJacobi(f"G touches zero Jacobi modes {np.flatnonzero(hit).tolist()}")
    phi = np.zeros_like(g)
    ok = ~zero
    phi[ok] = g[ok] / (c0 * mu[ok])
    return phi
