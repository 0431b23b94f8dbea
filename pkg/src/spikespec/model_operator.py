"""Spectrum of the model linearized operator and its ε-asymptotics.

At scale ε the model operator has the eigenvalues η(ε²ρ_j) (one per
Laplace-Beltrami mode of K) and one σ-type value per Jacobi mode, either
σ(ε²ω_l) from the fiber branch or its refined form ε²C₀μ_l/C₁. Only values
below a validity threshold (default τ₀/4) are kept.
"""

from __future__ import annotations

import math
import warnings
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, optimize

from .errors import EmptyWindowWarning, NoAdmissibleEpsilon, NoCrossing, SpectraTooShort
from .fiber import FiberDomain, eta, eta_derivative, find_alpha_bar, sigma, tau, truncated_eigen
from .geometry import SubmanifoldSpectra, weyl_check
from .ground_state import ProfileConstants, RadialProfile

SIGMA_MODES = ("refined", "fiber")
CURVE_POINTS = 2000
CURVE_SPAN = 4.0  # grid covers [0, CURVE_SPAN·ᾱ]
# Smallest positive node of the log-spaced grid, relative to its top.
CURVE_FLOOR = 1e-6
BISECT_ITERS = 80


# ---------------------------------------------------------------------------
# Memoized branch curves


@dataclass(eq=False)
class BranchCurves:
    """η and σ sampled on a log-spaced α grid and interpolated monotonically."""

    profile: RadialProfile
    domain: FiberDomain
    alpha_bar: float
    eta_slope: float
    tau0: float
    alphas: np.ndarray = field(repr=False)
    eta_values: np.ndarray = field(repr=False)
    _sigma_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self._eta = interpolate.PchipInterpolator(self.alphas, self.eta_values, extrapolate=False)
        self._sigma = None

    @property
    def alpha_max(self) -> float:
        return float(self.alphas[-1])

    @property
    def sigma_values(self) -> np.ndarray:
        if self._sigma_values is None:
            self._sigma_values = np.array([sigma(self.profile, a, self.domain) for a in self.alphas])
        return self._sigma_values

    def _eval(self, curve, direct, alpha, clip):
        a = np.asarray(alpha, dtype=float)
        scalar = a.ndim == 0
        a = np.atleast_1d(a)
        if np.any(a < 0):
            raise ValueError("alpha must be nonnegative")
        out = np.empty_like(a)
        inside = a <= self.alpha_max
        out[inside] = curve(a[inside])
        if clip:
            # Beyond the grid the branch only grows; the top node is a lower bound.
            out[~inside] = curve(self.alpha_max)
        else:
            for i in np.flatnonzero(~inside):
                out[i] = direct(self.profile, float(a[i]), self.domain)
        return float(out[0]) if scalar else out

    def eta(self, alpha, clip: bool = False):
        return self._eval(self._eta, eta, alpha, clip)

    def sigma(self, alpha, clip: bool = False):
        if self._sigma is None:
            self._sigma = interpolate.PchipInterpolator(self.alphas, self.sigma_values, extrapolate=False)
        return self._eval(self._sigma, sigma, alpha, clip)

    def alpha_at(self, level: float, branch: str = "eta") -> float:
        """Smallest α with branch(α) = level (branches are nondecreasing)."""
        f = self.eta if branch == "eta" else self.sigma
        lo = 0.0
        if f(lo) >= level:
            return 0.0
        hi = self.alpha_max
        while f(hi) < level:
            lo, hi = hi, 2.0 * hi
            if hi > 1e6:
                return math.inf
        return float(optimize.brentq(lambda a: f(a) - level, lo, hi, xtol=1e-14))


_CURVES: "weakref.WeakKeyDictionary[RadialProfile, dict]" = weakref.WeakKeyDictionary()


def branch_curves(profile: RadialProfile, domain: FiberDomain | None = None, points: int = CURVE_POINTS) -> BranchCurves:
    """Build (or fetch) the memoized η curve; σ is added on first use."""
    domain = domain or FiberDomain()
    cache = _CURVES.setdefault(profile, {})
    key = (domain, points)
    if key in cache:
        return cache[key]
    root = find_alpha_bar(profile, domain=domain)
    top = CURVE_SPAN * root.alpha_bar
    alphas = np.concatenate([[0.0], np.geomspace(CURVE_FLOOR * top, top, points - 1)])
    # Put ᾱ on the grid so interpolated crossings sit exactly at ᾱ/ρ.
    alphas = np.unique(np.append(alphas, root.alpha_bar))
    values = np.array([eta(profile, a, domain) for a in alphas])
    values[alphas == root.alpha_bar] = 0.0
    curves = BranchCurves(profile, domain, root.alpha_bar, root.eta_slope, tau(profile, 0.0, domain), alphas, values)
    cache[key] = curves
    return curves


# ---------------------------------------------------------------------------
# Model spectrum


@dataclass(frozen=True)
class ModelSpectrum:
    epsilon: float
    values: np.ndarray
    branch: np.ndarray
    source_index: np.ndarray
    source_eigenvalue: np.ndarray
    threshold: float
    sigma_mode: str
    discarded: int

    def __len__(self) -> int:
        return int(self.values.size)

    def morse_index(self) -> int:
        return int(np.count_nonzero(self.values < 0))

    def select(self, branch: str) -> np.ndarray:
        return self.values[self.branch == branch]

    def rows(self):
        for v, b, i, s in zip(self.values, self.branch, self.source_index, self.source_eigenvalue):
            yield float(v), str(b), int(i), float(s)


def _sigma_entries(curves, constants, spectra, epsilon, sigma_mode, threshold, strict):
    if spectra.mu is None:
        raise ValueError("spectra has no Jacobi list; call build_spectra first")
    if sigma_mode == "refined":
        scale = epsilon**2 * constants.C0 / constants.C1
        vals = scale * spectra.mu
        src = spectra.mu
        if strict and vals.size and vals[-1] < threshold:
            raise SpectraTooShort(f"refined sigma list ends at {vals[-1]:.4g} below the threshold {threshold:.4g}")
    elif sigma_mode == "fiber":
        cut = curves.alpha_at(threshold, "sigma")
        alpha = epsilon**2 * spectra.omega
        if strict and alpha.size and alpha[-1] < cut:
            raise SpectraTooShort("omega list ends before sigma exceeds the threshold")
        keep = alpha < cut
        vals = np.full(alpha.shape, np.inf)
        vals[keep] = curves.sigma(alpha[keep])
        src = spectra.omega
    else:
        raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}")
    return vals, src


def assemble_model_spectrum(
    profile: RadialProfile,
    constants: ProfileConstants,
    spectra: SubmanifoldSpectra,
    epsilon: float,
    sigma_mode: str = "refined",
    threshold: float | None = None,
    *,
    curves: BranchCurves | None = None,
    strict: bool = True,
    truncated_gamma: float | None = None,
) -> ModelSpectrum:
    """Eigenvalues of the model operator below the threshold, sorted.

    With ``truncated_gamma`` set, η comes from direct solves of the
    truncated fiber problem on [0, ε^{-γ}] instead of the memoized curve.
    ``strict=False`` accepts lists that end below the threshold.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    curves = curves or branch_curves(profile)
    threshold = curves.tau0 / 4.0 if threshold is None else float(threshold)
    cut = curves.alpha_at(threshold)
    alpha = epsilon**2 * spectra.rho
    if strict and alpha.size and alpha[-1] < cut:
        raise SpectraTooShort(
            f"rho list ends at eps^2 rho = {alpha[-1]:.4g}, below {cut:.4g} where eta reaches the threshold")
    keep = alpha < cut
    idx = np.flatnonzero(keep)
    if truncated_gamma is None:
        eta_vals = curves.eta(alpha[keep])
    else:
        eta_vals = np.array([truncated_eigen(profile, a, epsilon, truncated_gamma, 0, 1)[0].lam for a in alpha[keep]])
    sig_all, sig_src = _sigma_entries(curves, constants, spectra, epsilon, sigma_mode, threshold, strict)
    sig_keep = np.flatnonzero(sig_all < threshold)
    eta_ok = eta_vals < threshold
    values = np.concatenate([eta_vals[eta_ok], sig_all[sig_keep]])
    branch = np.array(["eta"] * int(eta_ok.sum()) + ["sigma"] * sig_keep.size)
    source = np.concatenate([idx[eta_ok], sig_keep])
    source_val = np.concatenate([spectra.rho[idx[eta_ok]], sig_src[sig_keep]])
    order = np.argsort(values, kind="stable")
    discarded = spectra.rho.size + sig_all.size - values.size
    return ModelSpectrum(float(epsilon), values[order], branch[order], source[order].astype(int),
                         source_val[order], threshold, sigma_mode, int(discarded))


def morse_index(model: ModelSpectrum) -> int:
    return model.morse_index()


# ---------------------------------------------------------------------------
# Morse index asymptotics


@dataclass(frozen=True)
class MorseIndexReport:
    epsilons: np.ndarray
    counts: np.ndarray
    theta: float
    ratios: np.ndarray
    weyl_constant: float
    alpha_bar: float

    def to_dict(self) -> dict:
        return {
            "epsilons": self.epsilons.tolist(),
            "counts": self.counts.tolist(),
            "theta": self.theta,
            "ratios": self.ratios.tolist(),
            "weyl_constant": self.weyl_constant,
            "alpha_bar": self.alpha_bar,
        }


def theta_constant(alpha_bar: float, weyl_constant: float, k: int, vol: float) -> float:
    """Θ = (ᾱ/C_k)^{k/2} Vol(K)."""
    return (alpha_bar / weyl_constant) ** (k / 2.0) * vol


def morse_report(profile, constants, spectra, epsilon_list, *, sigma_mode: str = "refined",
                 curves: BranchCurves | None = None) -> MorseIndexReport:
    curves = curves or branch_curves(profile)
    weyl = weyl_check(spectra, "rho")
    theta = theta_constant(curves.alpha_bar, weyl.fitted_constant, spectra.k, spectra.vol)
    eps = np.asarray(epsilon_list, dtype=float)
    counts = np.array([
        assemble_model_spectrum(profile, constants, spectra, e, sigma_mode, curves=curves).morse_index() for e in eps
    ])
    ratios = counts * eps**spectra.k / theta
    return MorseIndexReport(eps, counts, theta, ratios, weyl.fitted_constant, curves.alpha_bar)


# ---------------------------------------------------------------------------
# Spectral gaps near zero


@dataclass(frozen=True)
class GapSample:
    epsilon: float
    window: float
    near_zero: np.ndarray
    eta_gaps: np.ndarray  # gaps between consecutive distinct eta values in the window
    median_gap: float
    mean_gap: float  # window span over the multiplicity-counted entries
    sigma_min_abs: float

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "window": self.window,
            "near_zero_count": int(self.near_zero.size),
            "median_gap": self.median_gap,
            "mean_gap": self.mean_gap,
            "sigma_min_abs": self.sigma_min_abs,
        }


@dataclass(frozen=True)
class GapReport:
    samples: list[GapSample]
    eta_slope: float
    sigma_slope: float
    degenerate: bool
    statistic: str

    def to_dict(self) -> dict:
        return {
            "samples": [s.to_dict() for s in self.samples],
            "eta_slope": self.eta_slope,
            "sigma_slope": self.sigma_slope,
            "degenerate": self.degenerate,
            "statistic": self.statistic,
        }


def default_window(epsilon: float, k: int) -> float:
    return 10.0 * epsilon ** min(2, k)


def gap_sample(model: ModelSpectrum, k: int, window: float | None = None) -> GapSample:
    window = default_window(model.epsilon, k) if window is None else float(window)
    near = model.values[np.abs(model.values) < window]
    etas = np.sort(model.values[(model.branch == "eta") & (np.abs(model.values) < window)])
    if near.size == 0:
        warnings.warn(f"no model eigenvalue within {window:.3g} of zero at eps={model.epsilon:g}",
                      EmptyWindowWarning, stacklevel=2)
    diffs = np.diff(etas)
    gaps = diffs[diffs > 1e-9 * window]
    median = float(np.median(gaps)) if gaps.size else math.nan
    mean = float((etas[-1] - etas[0]) / (etas.size - 1)) if etas.size > 1 else math.nan
    sig = model.select("sigma")
    smin = float(np.min(np.abs(sig))) if sig.size else math.nan
    return GapSample(model.epsilon, window, near, gaps, median, mean, smin)


def _loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = np.isfinite(y) & (y > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def gap_report(profile, constants, spectra, epsilons, window=None, *, sigma_mode: str = "refined",
               statistic: str = "median", curves: BranchCurves | None = None) -> GapReport:
    """Near-zero gap statistics across ε and their log-log slopes.

    ``statistic`` picks the eta-gap summary that is fitted: ``median`` of
    gaps between distinct values, or ``mean`` spacing counted with
    multiplicity.
    """
    if statistic not in ("median", "mean"):
        raise ValueError("statistic must be 'median' or 'mean'")
    curves = curves or branch_curves(profile)
    eps = np.atleast_1d(np.asarray(epsilons, dtype=float))
    samples = []
    for e in eps:
        model = assemble_model_spectrum(profile, constants, spectra, e, sigma_mode, curves=curves)
        samples.append(gap_sample(model, spectra.k, window))
    gap = [s.median_gap if statistic == "median" else s.mean_gap for s in samples]
    sig = [s.sigma_min_abs for s in samples]
    degenerate = any(s == 0 for s in sig)
    return GapReport(samples, _loglog_slope(eps, gap), _loglog_slope(eps, sig), degenerate, statistic)


# ---------------------------------------------------------------------------
# Invertibility sweep


@dataclass(frozen=True)
class AdmissibleInterval:
    lo: float
    hi: float
    midpoint: float
    best_epsilon: float
    best_score: float

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class BlockSummary:
    lo: float
    hi: float
    intervals: int  # admissible intervals meeting the block
    shortest: float  # shortest interval lying inside the block (nan if none)
    longest: float


@dataclass(frozen=True)
class SweepReport:
    c: float
    eps_lo: float
    eps_hi: float
    intervals: list[AdmissibleInterval]
    blocks: list[BlockSummary]
    length_slope: float
    trace: tuple[np.ndarray, np.ndarray]  # sampled (ε, score) pairs

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "eps_lo": self.eps_lo,
            "eps_hi": self.eps_hi,
            "length_slope": self.length_slope,
            "intervals": [
                {"lo": i.lo, "hi": i.hi, "midpoint": i.midpoint, "best_epsilon": i.best_epsilon,
                 "best_score": i.best_score}
                for i in self.intervals
            ],
            "blocks": [
                {"lo": b.lo, "hi": b.hi, "intervals": b.intervals, "shortest": b.shortest, "longest": b.longest}
                for b in self.blocks
            ],
        }


def _scale(eps, k):
    return np.minimum(eps**2, eps**k)


class _ScoreModel:
    """Distinct model branches λ_i(ε) as vectorized functions of ε.

    Every branch is nondecreasing in its source eigenvalue, so at fixed ε
    the smallest |λ| sits next to the source value where the branch
    crosses zero; the score only needs those neighbours.
    """

    def __init__(self, curves, constants, spectra, sigma_mode):
        self.curves = curves
        self.k = spectra.k
        self.rho = np.unique(spectra.rho)
        self.eta_cut = curves.alpha_at(curves.tau0 / 4.0)
        self.sigma_mode = sigma_mode
        if sigma_mode == "refined":
            self.sigma_coef = np.unique(constants.C0 * spectra.mu / constants.C1)
        elif sigma_mode == "fiber":
            self.omega = np.unique(spectra.omega)
            self.sigma_zero = curves.alpha_at(0.0, "sigma")
        else:
            raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}")

    @staticmethod
    def _nearest(values, crossing, branch):
        """min |branch(v)| over sorted values, given where branch changes sign."""
        if values.size == 1:
            return np.abs(branch(np.full(crossing.shape, values[0])))
        j = np.clip(np.searchsorted(values, crossing), 1, values.size - 1)
        return np.minimum(np.abs(branch(values[j - 1])), np.abs(branch(values[j])))

    def min_abs(self, eps) -> np.ndarray:
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        e2 = eps**2
        lam = self._nearest(self.rho, self.curves.alpha_bar / e2, lambda r: self.curves.eta(e2 * r, clip=True))
        if self.sigma_mode == "refined":
            sig = self._nearest(self.sigma_coef, np.zeros_like(eps), lambda c: e2 * c)
        else:
            sig = self._nearest(self.omega, self.sigma_zero / e2, lambda w: self.curves.sigma(e2 * w, clip=True))
        return np.minimum(lam, sig)

    def score(self, eps) -> np.ndarray:
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        return self.min_abs(eps) / _scale(eps, self.k)

    def bad_sets(self, lo, hi, c) -> list[tuple[float, float]]:
        """Sub-intervals of [lo, hi] where some branch has |λ| < c·min(ε², εᵏ)."""
        out = []
        curve = self.curves.eta
        # Modes above the cut at the smallest ε never come near zero.
        rho = self.rho[self.rho * lo**2 < self.eta_cut]
        out += _monotone_bad_sets(lambda e, r: curve(e * e * r, clip=True), rho, lo, hi, c, self.k)
        if self.sigma_mode == "refined":
            for s in self.sigma_coef:
                out += _quadratic_bad_set(abs(s), lo, hi, c, self.k)
        else:
            out += _monotone_bad_sets(lambda e, w: self.curves.sigma(e * e * w, clip=True),
                                      self.omega, lo, hi, c, self.k)
        return out


def _monotone_bad_sets(branch, params, lo, hi, c, k):
    """Bad sets of branches increasing in ε, one interval per parameter.

    ``branch(eps, params)`` evaluates elementwise. With λ ± c·m(ε) both
    increasing, {|λ| < c·m} is the open interval between the zero of
    λ + c·m and the zero of λ - c·m.
    """
    if params.size == 0:
        return []

    def root(sign):
        f = lambda e: branch(e, params) + sign * c * _scale(e, k)
        a = np.full(params.size, lo)
        b = np.full(params.size, hi)
        fa, fb = f(a), f(b)
        for _ in range(BISECT_ITERS):
            m = 0.5 * (a + b)
            up = f(m) > 0
            b = np.where(up, m, b)
            a = np.where(up, a, m)
        r = 0.5 * (a + b)
        r = np.where(fa > 0, lo, r)
        return np.where(fb <= 0, hi, r)

    start = root(+1.0)  # where λ + c·m turns positive
    end = root(-1.0)  # where λ - c·m turns positive
    return [(float(s), float(e)) for s, e in zip(start, end) if e > s]


def _quadratic_bad_set(s, lo, hi, c, k):
    """Refined σ = sε²: bad where s < c·min(1, ε^{k-2})."""
    if k <= 2:
        return [(lo, hi)] if s < c else []
    edge = (s / c) ** (1.0 / (k - 2))
    return [(max(lo, edge), hi)] if edge < hi else []


def _complement(bad, lo, hi):
    bad = sorted(bad)
    good, cur = [], lo
    for a, b in bad:
        if a > cur:
            good.append((cur, a))
        cur = max(cur, b)
    if cur < hi:
        good.append((cur, hi))
    return good


def dyadic_blocks(eps_lo: float, eps_hi: float) -> list[tuple[float, float]]:
    blocks, a = [], eps_lo
    while a < eps_hi * (1 - 1e-12):
        blocks.append((a, min(2 * a, eps_hi)))
        a *= 2
    return blocks


def invertibility_sweep(profile, constants, spectra, eps_lo: float, eps_hi: float, samples: int = 1000,
                        c: float = 0.1, *, sigma_mode: str = "refined",
                        curves: BranchCurves | None = None) -> SweepReport:
    """Maximal ε-intervals where min|λ| / min(ε², εᵏ) ≥ c.

    Bad sets are located per branch by bisection, so arbitrarily thin
    exclusions around zero crossings are resolved exactly; ``samples``
    controls the exported score trace and the search for each interval's
    best ε.
    """
    if not 0 < eps_lo < eps_hi:
        raise ValueError("need 0 < eps_lo < eps_hi")
    if samples < 100:
        raise ValueError("samples must be at least 100")
    curves = curves or branch_curves(profile)
    model = _ScoreModel(curves, constants, spectra, sigma_mode)
    # The list must reach past the cut at the smallest ε for the model to be complete.
    if spectra.rho[-1] * eps_lo**2 < model.eta_cut:
        raise SpectraTooShort("rho list too short for the smallest epsilon of the sweep")
    good = _complement(model.bad_sets(eps_lo, eps_hi, c), eps_lo, eps_hi)
    good = [(a, b) for a, b in good if b > a]
    if not good:
        raise NoAdmissibleEpsilon(f"no epsilon in [{eps_lo:g}, {eps_hi:g}] reaches score {c:g}")
    intervals = []
    probe = np.linspace(0.0, 1.0, 17)[1:-1]
    for a, b in good:
        e = a + (b - a) * probe
        s = model.score(e)
        i = int(np.argmax(s))
        intervals.append(AdmissibleInterval(a, b, 0.5 * (a + b), float(e[i]), float(s[i])))
    blocks = []
    for lo, hi in dyadic_blocks(eps_lo, eps_hi):
        meet = [iv for iv in intervals if iv.hi > lo and iv.lo < hi]
        # Pieces cut off by the ends of the sweep say nothing about spacing.
        inside = [iv.length for iv in meet if iv.lo >= lo and iv.hi <= hi and eps_lo < iv.lo and iv.hi < eps_hi]
        blocks.append(BlockSummary(lo, hi, len(meet), min(inside) if inside else math.nan,
                                   max(inside) if inside else math.nan))
    centers = [math.sqrt(b.lo * b.hi) for b in blocks]
    slope = _loglog_slope(centers, [b.shortest for b in blocks])
    grid = np.geomspace(eps_lo, eps_hi, samples)
    return SweepReport(c, eps_lo, eps_hi, intervals, blocks, slope, (grid, model.score(grid)))


def score_function(profile, constants, spectra, *, sigma_mode: str = "refined", curves=None):
    """ε ↦ min|λ| / min(ε², εᵏ), vectorized (for dense-sampling checks)."""
    curves = curves or branch_curves(profile)
    return _ScoreModel(curves, constants, spectra, sigma_mode).score


# ---------------------------------------------------------------------------
# Kato flow


@dataclass(frozen=True)
class KatoReport:
    branch_index: int
    rho: float
    epsilons: np.ndarray
    chain_rule: np.ndarray
    finite_difference: np.ndarray
    max_relative_difference: float
    epsilon_star: float
    F_bar_model: float
    F_bar_finite_difference: float

    def to_dict(self) -> dict:
        return {
            "branch_index": self.branch_index,
            "rho": self.rho,
            "epsilons": self.epsilons.tolist(),
            "chain_rule": self.chain_rule.tolist(),
            "finite_difference": self.finite_difference.tolist(),
            "max_relative_difference": self.max_relative_difference,
            "epsilon_star": self.epsilon_star,
            "F_bar_model": self.F_bar_model,
            "F_bar_finite_difference": self.F_bar_finite_difference,
        }


def kato_flow(profile, constants, spectra, branch_index: int, eps_lo: float, eps_hi: float, *,
              samples: int = 7, rel_step: float = 1e-4, curves: BranchCurves | None = None,
              domain: FiberDomain | None = None) -> KatoReport:
    """dλ/dε along λ_j(ε) = η(ε²ρ_j), by the chain rule and by central differences."""
    curves = curves or branch_curves(profile, domain)
    domain = domain or curves.domain
    rho = float(spectra.rho[branch_index])
    if rho <= 0:
        raise NoCrossing(f"rho_{branch_index} = 0: the branch is constant in epsilon")
    eps_star = math.sqrt(curves.alpha_bar / rho)
    if not eps_lo <= eps_star <= eps_hi:
        raise NoCrossing(f"crossing at eps = {eps_star:.6g} lies outside [{eps_lo:g}, {eps_hi:g}]")

    def chain(e):
        return 2.0 * e * rho * eta_derivative(profile, e * e * rho, domain)

    def central(e):
        h = rel_step * e
        return (eta(profile, (e + h) ** 2 * rho, domain) - eta(profile, (e - h) ** 2 * rho, domain)) / (2.0 * h)

    eps = np.unique(np.append(np.linspace(eps_lo, eps_hi, samples), eps_star))
    cr = np.array([chain(e) for e in eps])
    fd = np.array([central(e) for e in eps])
    rel = float(np.max(np.abs(cr - fd) / np.abs(fd)))
    return KatoReport(branch_index, rho, eps, cr, fd, rel, eps_star, eps_star * chain(eps_star),
                      eps_star * central(eps_star))


def sigma_refined_derivative(value: float, epsilon: float) -> float:
    """d/dε of ε²·const, written through the value itself."""
    return 2.0 * value / epsilon
