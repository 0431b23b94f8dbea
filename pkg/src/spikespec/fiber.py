"""Eigenvalue branches of the α-parametrized linearization around w₀.

For each angular degree ℓ the fiber problem reduces to the radial pencil

    (A - M) v = λ A v,   A = -Δ_r + 1 + α + ℓ(ℓ+n-1)/r²,   M = p w₀^{p-1},

with measure rⁿ dr. It is solved in θ-form, M v = θ A v with λ = 1 - θ,
because M is concentrated near the origin and its largest θ are isolated.

The radial operator is discretized by finite volumes on the nodes
r_i = i·h: node i owns the cell [r_{i-1/2}, r_{i+1/2}] (node 0 owns
[0, h/2]), fluxes carry the weight r_{i±1/2}^n / h and the potential terms
are lumped at nodes. Both matrices are symmetric, A is tridiagonal and M is
diagonal. ℓ = 0 keeps node 0, which is the Neumann condition at the origin;
ℓ ≥ 1 drops it, which imposes v(0) = 0. A homogeneous Dirichlet condition
sits one step past the last node, at r_max for the free tail or at
R = ε^{-γ} for the truncated problem.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .errors import BracketFailure, ConvergenceFailure, DomainTooSmall
from .ground_state import RadialProfile, angular_factors

MIN_NODES = 500
# Smallest admissible truncation radius for closeness statements.
MIN_RADIUS = 5.0


@dataclass(frozen=True)
class FiberDomain:
    """Radial computational domain for the fiber pencil.

    ``boundary`` is ``"decay"`` (Dirichlet at r_max, standing in for the
    free tail) or ``"dirichlet"`` (Dirichlet at R = epsilon^{-gamma}).
    """

    r_max: float = 15.0
    step: float = 0.01
    boundary: str = "decay"
    gamma: float = 0.5
    epsilon: float | None = None

    def __post_init__(self):
        if self.boundary not in ("decay", "dirichlet"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.boundary == "dirichlet" and not (self.epsilon and self.epsilon > 0):
            raise ValueError("a dirichlet domain needs epsilon > 0")
        if self.nodes < MIN_NODES:
            raise ValueError(f"domain has {self.nodes} nodes; at least {MIN_NODES} are required")

    @property
    def radius(self) -> float:
        if self.boundary == "decay":
            return self.r_max
        return self.epsilon ** (-self.gamma)

    @property
    def nodes(self) -> int:
        """Number of unknowns for ℓ = 0 (Dirichlet node excluded)."""
        return max(int(round(self.radius / self.step)), 1)


@dataclass(frozen=True)
class DiscretePencil:
    """Tridiagonal A (diagonal ``a``, off-diagonal ``b``) and diagonal M."""

    alpha: float
    ell: int
    radii: np.ndarray  # radii of the unknowns
    a: np.ndarray
    b: np.ndarray
    m: np.ndarray
    weights: np.ndarray  # lumped measure r^n dr at the unknowns
    area: float

    @property
    def A(self) -> sparse.csc_matrix:
        return sparse.diags([self.b, self.a, self.b], [-1, 0, 1], format="csc")

    @property
    def M(self) -> sparse.csc_matrix:
        return sparse.diags(self.m, 0, format="csc")


@dataclass(frozen=True)
class FiberEigenpair:
    alpha: float
    ell: int
    rank: int
    lam: float
    radii: np.ndarray
    v: np.ndarray
    normalized: bool = True


@dataclass(frozen=True)
class AlphaBarResult:
    alpha_bar: float
    eta_at_root: float
    bracket: tuple[float, float]
    eta_slope: float

    def to_dict(self) -> dict:
        return {
            "alpha_bar": self.alpha_bar,
            "eta_at_root": self.eta_at_root,
            "bracket": list(self.bracket),
            "eta_slope": self.eta_slope,
        }


# Resampled weights are shared between pencils on the same grid.
_SAMPLES: "weakref.WeakKeyDictionary[RadialProfile, dict]" = weakref.WeakKeyDictionary()


def _potential(profile: RadialProfile, step: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    key = (step, nodes)
    cache = _SAMPLES.setdefault(profile, {})
    if key not in cache:
        r = step * np.arange(nodes)
        w, _ = profile.evaluate(r)
        p = profile.params.p
        pot = np.where(w < np.finfo(float).eps, 0.0, p * np.abs(w) ** (p - 1.0))
        cache[key] = (r, pot)
    return cache[key]


def assemble_pencil(profile: RadialProfile, alpha: float, ell: int, domain: FiberDomain) -> DiscretePencil:
    """Finite-volume discretization of the θ-form pencil."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if ell < 0:
        raise ValueError("harmonic degree must be nonnegative")
    n = profile.params.n
    h = domain.step
    r, pot = _potential(profile, h, domain.nodes)
    rn = r**n
    weights = rn * h
    weights[0] = (0.5 * h) ** (n + 1) / (n + 1)
    flux = (r[:-1] + 0.5 * h) ** n / h  # between node i and i+1
    last = (r[-1] + 0.5 * h) ** n / h  # into the Dirichlet node
    a = np.empty_like(r)
    a[0] = flux[0]
    a[1:-1] = flux[:-1] + flux[1:]
    a[-1] = flux[-1] + last
    shift = np.zeros_like(r)
    if ell:
        shift[1:] = ell * (ell + n - 1) / r[1:] ** 2
    a = a + (1.0 + alpha + shift) * weights
    b = -flux
    m = pot * weights
    if ell:
        # v(0) = 0: drop node 0; its flux to node 1 stays on the diagonal.
        r, a, b, m, weights = r[1:], a[1:], b[1:], m[1:], weights[1:]
    area, _ = angular_factors(profile.params.d)
    return DiscretePencil(float(alpha), int(ell), r, a, b, m, weights, area)


def _largest_theta(pencil: DiscretePencil, count: int) -> tuple[np.ndarray, np.ndarray]:
    size = pencil.a.size
    if size <= max(60, 4 * count):
        A = pencil.A.toarray()
        theta, vecs = linalg.eigh(np.diag(pencil.m), A, subset_by_index=[size - count, size - 1])
        return theta[::-1], vecs[:, ::-1]
    A = pencil.A
    lu = splu(A)
    Ainv = LinearOperator(A.shape, matvec=lu.solve, dtype=float)
    try:
        theta, vecs = eigsh(pencil.M, k=count, M=A, Minv=Ainv, which="LA", v0=np.ones(size), tol=0)
    except ArpackNoConvergence as exc:  # pragma: no cover - depends on ARPACK internals
        raise ConvergenceFailure(f"eigensolver did not converge (alpha={pencil.alpha}, ell={pencil.ell})") from exc
    order = np.argsort(theta)[::-1]
    return theta[order], vecs[:, order]


def _normalize(pencil: DiscretePencil, v: np.ndarray) -> np.ndarray:
    energy = float(v @ (pencil.A @ v)) * pencil.area
    v = v / math.sqrt(energy)
    k = int(np.argmax(np.abs(v)))
    return v if v[k] > 0 else -v


def eigenpairs(pencil: DiscretePencil, count: int) -> list[FiberEigenpair]:
    """The ``count`` smallest λ of an assembled pencil, ascending."""
    if count < 1:
        raise ValueError("count must be at least 1")
    theta, vecs = _largest_theta(pencil, count)
    pairs = []
    for k in range(count):
        v = _normalize(pencil, vecs[:, k])
        if pencil.ell:
            radii = np.concatenate([[0.0], pencil.radii])
            v = np.concatenate([[0.0], v])
        else:
            radii = pencil.radii
        pairs.append(FiberEigenpair(pencil.alpha, pencil.ell, k + 1, float(1.0 - theta[k]), radii, v))
    return pairs


def fiber_eigen(profile, alpha, ell, count, domain: FiberDomain | None = None) -> list[FiberEigenpair]:
    domain = domain or FiberDomain()
    return eigenpairs(assemble_pencil(profile, alpha, ell, domain), count)


def eta(profile, alpha, domain: FiberDomain | None = None) -> float:
    """Smallest λ at ℓ = 0."""
    return fiber_eigen(profile, alpha, 0, 1, domain)[0].lam


def sigma(profile, alpha, domain: FiberDomain | None = None) -> float:
    """Smallest λ at ℓ = 1."""
    return fiber_eigen(profile, alpha, 1, 1, domain)[0].lam


def tau(profile, alpha, domain: FiberDomain | None = None) -> float:
    """Lowest λ not on the η or σ branches.

    This is the minimum of the second λ at ℓ = 0, the second at ℓ = 1 and
    the first at ℓ = 2. In d = 1 there is no ℓ = 2 harmonic.
    """
    vals = [fiber_eigen(profile, alpha, 0, 2, domain)[1].lam, fiber_eigen(profile, alpha, 1, 2, domain)[1].lam]
    if profile.params.n >= 1:
        vals.append(fiber_eigen(profile, alpha, 2, 1, domain)[0].lam)
    return min(vals)


def _eta_with_slope(profile, alpha, domain) -> tuple[float, float]:
    pencil = assemble_pencil(profile, alpha, 0, domain)
    pair = eigenpairs(pencil, 1)[0]
    v = pair.v
    # With A-normalized v, dθ/dα = -θ vᵀWv / vᵀAv exactly (∂A/∂α = W).
    slope = (1.0 - pair.lam) * float(v @ (pencil.weights * v)) * pencil.area
    return pair.lam, slope


def eta_derivative(profile, alpha, domain: FiberDomain | None = None) -> float:
    """dη/dα = (1 - η)∫u², u the first eigenfunction normalized in H_α."""
    return _eta_with_slope(profile, alpha, domain or FiberDomain())[1]


def find_alpha_bar(profile, bracket_hint=(0.0, 1.0), tol: float = 1e-12, domain: FiberDomain | None = None) -> AlphaBarResult:
    """Root of η by Newton steps safeguarded with bisection."""
    domain = domain or FiberDomain()
    lo, hi = float(bracket_hint[0]), float(bracket_hint[1])
    f_lo, _ = _eta_with_slope(profile, lo, domain)
    if f_lo >= 0:
        if lo > 0:
            lo, (f_lo, _) = 0.0, _eta_with_slope(profile, 0.0, domain)
        if f_lo >= 0:
            raise BracketFailure("η is not negative at the lower end of the bracket")
    f_hi, _ = _eta_with_slope(profile, hi, domain)
    while f_hi <= 0:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        if hi > 1e4:
            raise BracketFailure("η does not change sign on [0, 1e4]")
        f_hi, _ = _eta_with_slope(profile, hi, domain)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx, dfx = _eta_with_slope(profile, x, domain)
        if abs(fx) < tol:
            return AlphaBarResult(float(x), float(fx), (lo, hi), float(dfx))
        if fx < 0:
            lo = x
        else:
            hi = x
        nxt = x - fx / dfx
        x = nxt if lo < nxt < hi else 0.5 * (lo + hi)
        if hi - lo < 4 * np.finfo(float).eps * hi:
            break
    raise ConvergenceFailure(f"could not drive |η| below {tol:g}; final bracket ({lo!r}, {hi!r})")


def branch_sweep(profile, alphas, domain: FiberDomain | None = None) -> dict[str, np.ndarray]:
    """η, σ, τ and dη/dα on a grid of α."""
    domain = domain or FiberDomain()
    alphas = np.asarray(alphas, dtype=float)
    out = {k: np.empty_like(alphas) for k in ("eta", "sigma", "tau", "deta_dalpha")}
    for i, a in enumerate(alphas):
        out["eta"][i], out["deta_dalpha"][i] = _eta_with_slope(profile, a, domain)
        out["sigma"][i] = sigma(profile, a, domain)
        out["tau"][i] = tau(profile, a, domain)
    out["alpha"] = alphas
    return out


def track_branch(profile, alphas, ell: int, rank: int, domain: FiberDomain | None = None) -> np.ndarray:
    """Follow one eigenvalue in α by maximal eigenvector overlap.

    At each α the candidate with the largest weighted overlap with the
    previous eigenvector is taken, so the branch is continued through
    near-crossings rather than re-sorted by value.
    """
    domain = domain or FiberDomain()
    values = np.empty(len(alphas))
    prev = None
    for i, a in enumerate(alphas):
        pencil = assemble_pencil(profile, a, ell, domain)
        pairs = eigenpairs(pencil, rank + 1)
        if prev is None:
            pick = pairs[rank - 1]
        else:
            lead = 1 if ell else 0
            overlaps = [abs(float(q.v[lead:] @ (pencil.weights * prev))) for q in pairs]
            pick = pairs[int(np.argmax(overlaps))]
        values[i] = pick.lam
        prev = pick.v[1:] if ell else pick.v
    return values


def truncated_eigen(profile, alpha, epsilon, gamma, ell, count, step: float = 0.01) -> list[FiberEigenpair]:
    """Eigenpairs with a Dirichlet condition at R = ε^{-γ}.

    Radii beyond the sampled profile use its matched decaying tail.
    """
    radius = epsilon ** (-gamma)
    if radius < MIN_RADIUS:
        raise DomainTooSmall(f"truncation radius {radius:.3g} is below {MIN_RADIUS}")
    domain = FiberDomain(step=step, boundary="dirichlet", gamma=gamma, epsilon=epsilon)
    return fiber_eigen(profile, alpha, ell, count, domain)


def coercivity_check(profile, epsilon, gamma, alpha: float = 0.0, ell_max: int = 4) -> float:
    """Smallest truncated λ over the degrees ℓ = 2..ell_max.

    The coercivity bound is a statement about Dirichlet restrictions and
    holds on any ball, so small radii are admitted here; the grid step is
    reduced to keep MIN_NODES unknowns.
    """
    if profile.params.n < 1:
        raise ValueError("degrees ℓ >= 2 need transverse dimension d >= 2")
    radius = epsilon ** (-gamma)
    step = min(0.01, radius / (MIN_NODES + 100))
    domain = FiberDomain(step=step, boundary="dirichlet", gamma=gamma, epsilon=epsilon)
    return min(fiber_eigen(profile, alpha, ell, 1, domain)[0].lam for ell in range(2, ell_max + 1))


@dataclass(frozen=True)
class ClosenessReport:
    radii: np.ndarray
    differences: np.ndarray  # η_{α,R} - η_α
    reference_radius: float
    ratios: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ratios", self.differences[:-1] / self.differences[1:])


def _refine_theta(a, b, m, theta0: float, digits: int) -> mpmath.mpf:
    """Newton on det(M - θA) through the tridiagonal continuant.

    The double-precision matrix entries are taken as exact, so nested
    truncations are compared without rounding noise.
    """
    with mpmath.workdps(digits):
        a = [mpmath.mpf(x) for x in a]
        b = [mpmath.mpf(x) for x in b]
        m = [mpmath.mpf(x) for x in m]
        theta = mpmath.mpf(theta0)
        tol = mpmath.mpf(10) ** (-digits + 5)
        for _ in range(60):
            f_prev, f = mpmath.mpf(1), m[0] - theta * a[0]
            g_prev, g = mpmath.mpf(0), -a[0]
            for i in range(1, len(a)):
                d = m[i] - theta * a[i]
                e2 = theta * theta * b[i - 1] ** 2
                de2 = 2 * theta * b[i - 1] ** 2
                f_new = d * f - e2 * f_prev
                g_new = -a[i] * f + d * g - de2 * f_prev - e2 * g_prev
                f_prev, f, g_prev, g = f, f_new, g, g_new
            dtheta = f / g
            theta -= dtheta
            if abs(dtheta) <= tol * abs(theta):
                break
        return +theta


def truncation_closeness(profile, alpha=0.0, radii=(5.0, 10.0, 20.0, 40.0), step=0.01, margin=20.0) -> ClosenessReport:
    """η_{α,R} - η_α for growing Dirichlet radii R.

    Each truncated problem is a leading principal block of one reference
    problem on radius max(radii) + margin. The differences fall like e^{-2R}
    and soon drop below double precision, so the largest θ of every block is
    polished in extended precision.
    """
    radii = np.asarray(sorted(radii), dtype=float)
    if radii[0] < MIN_RADIUS:
        raise DomainTooSmall(f"truncation radius {radii[0]:.3g} is below {MIN_RADIUS}")
    ref_radius = float(radii[-1] + margin)
    domain = FiberDomain(r_max=ref_radius, step=step)
    pencil = assemble_pencil(profile, alpha, 0, domain)
    digits = int(2.0 * math.sqrt(1.0 + alpha) * ref_radius / math.log(10)) + 30
    sizes = [int(round(R / step)) for R in radii] + [pencil.a.size]
    thetas = []
    for size in sizes:
        # A leading block is the same pencil with the Dirichlet node at r_size.
        sub = DiscretePencil(alpha, 0, pencil.radii[:size], pencil.a[:size], pencil.b[: size - 1],
                             pencil.m[:size], pencil.weights[:size], pencil.area)
        theta0 = 1.0 - eigenpairs(sub, 1)[0].lam
        thetas.append(_refine_theta(sub.a, sub.b, sub.m, theta0, digits))
    ref = thetas[-1]
    with mpmath.workdps(digits):
        diffs = np.array([float(ref - t) for t in thetas[:-1]])
    return ClosenessReport(radii, diffs, ref_radius)
