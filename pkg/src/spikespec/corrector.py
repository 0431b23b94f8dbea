"""First-order corrector around the ground state in Fermi coordinates.

Coordinates are (ȳ, ζ', ζ_N) with ȳ along K (k of them, index a), ζ' the
normal directions of K inside the boundary (n of them, index i) and ζ_N
the inward normal of the boundary. Tangent indices of the boundary run
over (a, i) in that order, so H, Γ and R use tangential-first layout.

The grid solver is specialised to n = 1, i.e. the half-plane
{(ζ₁, ζ₂) : ζ₂ ≥ 0}, with geometry frozen at one base point so that all
ȳ-derivatives vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, sparse, special
from scipy.sparse.linalg import splu

from .errors import SingularSystem, SolvabilityViolation
from .ground_state import RadialProfile, angular_factors, compute_constants

SOLVABILITY_TOL = 1e-6
NEWTON_TOL = 1e-11


# ---------------------------------------------------------------------------
# Geometry and the metric expansion


@dataclass(frozen=True, eq=False)
class GeometryData:
    """Constant second fundamental form, connection and curvature at a point."""

    k: int
    n: int
    H: np.ndarray  # (k+n, k+n), symmetric
    Gamma: np.ndarray  # (k, k, n): Γ_a^b(E_i), symmetric in a, b
    Rcurv: np.ndarray  # (k+n,)*4

    def __post_init__(self):
        m = self.k + self.n
        H = np.asarray(self.H, dtype=float)
        G = np.asarray(self.Gamma, dtype=float)
        R = np.asarray(self.Rcurv, dtype=float)
        if H.shape != (m, m) or G.shape != (self.k, self.k, self.n) or R.shape != (m,) * 4:
            raise ValueError("geometry arrays do not match (k, n)")
        if not np.allclose(H, H.T, rtol=0, atol=1e-14 * max(1.0, np.abs(H).max())):
            raise ValueError("H must be symmetric")
        if not np.all(np.isfinite(H)) or not np.all(np.isfinite(G)) or not np.all(np.isfinite(R)):
            raise ValueError("geometry must be finite")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "Rcurv", R)

    @property
    def trace_H(self) -> float:
        return float(np.trace(self.H))

    @property
    def H_normal(self) -> np.ndarray:
        return self.H[self.k :, self.k :]

    @classmethod
    def flat(cls, k: int = 1, n: int = 1) -> GeometryData:
        m = k + n
        return cls(k, n, np.zeros((m, m)), np.zeros((k, k, n)), np.zeros((m,) * 4))

    @classmethod
    def diagonal(cls, diag, k: int = 1, n: int = 1) -> GeometryData:
        """Diagonal H with vanishing connection and curvature."""
        m = k + n
        return cls(k, n, np.diag(np.asarray(diag, dtype=float)), np.zeros((k, k, n)), np.zeros((m,) * 4))

    @classmethod
    def random(cls, rng: np.random.Generator, k: int = 1, n: int = 1, scale: float = 1.0) -> GeometryData:
        """Random data with the algebraic symmetries of the real objects.

        R is built as S_AC S_BD - S_AD S_BC from a symmetric S, which is an
        algebraic curvature tensor.
        """
        m = k + n
        A = rng.normal(size=(m, m))
        H = scale * (A + A.T) / 2
        G = rng.normal(size=(k, k, n))
        G = scale * (G + G.transpose(1, 0, 2)) / 2
        B = rng.normal(size=(m, m))
        S = (B + B.T) / 2
        R = scale * (np.einsum("ac,bd->abcd", S, S) - np.einsum("ad,bc->abcd", S, S))
        return cls(k, n, H, G, R)

    def scaled(self, factor: float) -> GeometryData:
        return GeometryData(self.k, self.n, factor * self.H, factor * self.Gamma, factor * self.Rcurv)


@dataclass(frozen=True)
class MetricExpansion:
    g_ij: np.ndarray
    g_aj: np.ndarray
    g_ab: np.ndarray
    g_alphaN: np.ndarray
    g_NN: float

    @property
    def full(self) -> np.ndarray:
        """Assembled metric in the order (a, i, N)."""
        k, n = self.g_aj.shape
        m = k + n
        g = np.zeros((m + 1, m + 1))
        g[:k, :k] = self.g_ab
        g[:k, k:m] = self.g_aj
        g[k:m, :k] = self.g_aj.T
        g[k:m, k:m] = self.g_ij
        g[:m, m] = g[m, :m] = self.g_alphaN
        g[m, m] = self.g_NN
        return g


def metric_expansion(geom: GeometryData, epsilon: float, zeta, gamma: float = 0.5) -> MetricExpansion:
    """Metric coefficients in Fermi coordinates, truncated after ε²."""
    zeta = np.asarray(zeta, dtype=float)
    k, n = geom.k, geom.n
    if zeta.shape != (n + 1,):
        raise ValueError(f"zeta must have {n + 1} components")
    if epsilon > 0 and np.linalg.norm(zeta) > epsilon ** (-gamma):
        raise ValueError("zeta lies outside the Fermi chart radius eps^-gamma")
    e = epsilon
    zp, zN = zeta[:n], zeta[n]
    H, G, R = geom.H, geom.Gamma, geom.Rcurv
    H2 = H @ H
    g_ij = (np.eye(n) + 2 * e * zN * H[k:, k:]
            + e**2 / 3 * np.einsum("istj,s,t->ij", R[k:, k:, k:, k:], zp, zp)
            + e**2 * zN**2 * H2[k:, k:])
    g_aj = 2 * e * zN * H[:k, k:]
    g_ab = (np.eye(k) - 2 * e * np.einsum("abi,i->ab", G, zp) + 2 * e * zN * H[:k, :k]
            + e**2 * np.einsum("sabl,s,l->ab", R[k:, :k, :k, k:], zp, zp)
            + e**2 * np.einsum("acs,cbl,s,l->ab", G, G, zp, zp)
            + e**2 * zN**2 * H2[:k, :k])
    return MetricExpansion(g_ij, g_aj, g_ab, np.zeros(k + n), 1.0)


# ---------------------------------------------------------------------------
# Half-plane grid


@dataclass(frozen=True, eq=False)
class HalfPlaneGrid:
    """Nodes ζ₁ = -R + i·h (i = 1..N₁-1), ζ₂ = j·h (j = 0..N₂-1).

    Dirichlet at |ζ₁| = R and ζ₂ = R; Neumann at ζ₂ = 0 through a mirrored
    ghost row. Fields are flattened with ζ₂ varying fastest.
    """

    R: float
    step: float
    z1: np.ndarray = field(init=False, repr=False)
    z2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = int(round(self.R / self.step))
        if m < 4 or abs(m * self.step - self.R) > 1e-9 * self.R:
            raise ValueError("R must be a multiple of step with at least 4 cells")
        object.__setattr__(self, "z1", self.step * np.arange(-m + 1, m))
        object.__setattr__(self, "z2", self.step * np.arange(m))

    @property
    def shape(self) -> tuple[int, int]:
        return self.z1.size, self.z2.size

    @property
    def size(self) -> int:
        return self.z1.size * self.z2.size

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        Z1, Z2 = np.meshgrid(self.z1, self.z2, indexing="ij")
        return Z1.ravel(), Z2.ravel()

    def weights(self) -> np.ndarray:
        """Trapezoid measure: half weight on the boundary row ζ₂ = 0."""
        w = np.full(self.shape, self.step**2)
        w[:, 0] *= 0.5
        return w.ravel()

    def outer_mask(self, fraction: float = 0.1) -> np.ndarray:
        Z1, Z2 = self.mesh()
        return np.hypot(Z1, Z2) >= (1.0 - fraction) * self.R

    # 1-D building blocks, Kronecker-lifted
    def _second(self, size, neumann):
        h2 = self.step**2
        main = np.full(size, -2.0 / h2)
        off = np.full(size - 1, 1.0 / h2)
        upper = off.copy()
        if neumann:
            upper[0] = 2.0 / h2
        return sparse.diags([off, main, upper], [-1, 0, 1], format="csr")

    def _first(self, size, neumann):
        c = 1.0 / (2 * self.step)
        lower = np.full(size - 1, -c)
        upper = np.full(size - 1, c)
        if neumann:
            upper[0] = 0.0  # ghost mirror cancels the centered difference
        return sparse.diags([lower, upper], [-1, 1], format="csr")

    def operators(self) -> dict[str, sparse.csr_matrix]:
        n1, n2 = self.shape
        I1, I2 = sparse.identity(n1, format="csr"), sparse.identity(n2, format="csr")
        return {
            "D11": sparse.kron(self._second(n1, False), I2, format="csr"),
            "D22": sparse.kron(I1, self._second(n2, True), format="csr"),
            "D1": sparse.kron(self._first(n1, False), I2, format="csr"),
            "D2": sparse.kron(I1, self._first(n2, True), format="csr"),
        }


_OPS: dict = {}


def _grid_ops(grid: HalfPlaneGrid):
    key = (grid.R, grid.step)
    if key not in _OPS:
        _OPS.clear()
        _OPS[key] = grid.operators()
    return _OPS[key]


# ---------------------------------------------------------------------------
# Expansion of the Laplacian and the corrector


def expansion_apply(geom: GeometryData, epsilon: float, u: np.ndarray, grid: HalfPlaneGrid, order: int = 1) -> np.ndarray:
    """Δ_{g_ε} u to order 0 or 1 for a field without ȳ-dependence (n = 1)."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if geom.n != 1:
        raise NotImplementedError("the grid expansion is implemented for n = 1")
    ops = _grid_ops(grid)
    out = ops["D11"] @ u + ops["D22"] @ u
    if order == 1 and epsilon:
        _, Z2 = grid.mesh()
        out = out + epsilon * (geom.trace_H * (ops["D2"] @ u) - 2 * Z2 * geom.H_normal[0, 0] * (ops["D11"] @ u))
    return out


def _power(u, p):
    return np.abs(u) ** (p - 1) * u


def grid_ground_state(profile: RadialProfile, grid: HalfPlaneGrid, polish: bool = True) -> np.ndarray:
    """Ground state sampled on the grid, optionally Newton-polished so the
    discrete order-0 residual vanishes (removing O(h²) noise from ε-fits)."""
    Z1, Z2 = grid.mesh()
    w, _ = profile.evaluate(np.hypot(Z1, Z2))
    if not polish:
        return w
    p = profile.params.p
    ops = _grid_ops(grid)
    lap = ops["D11"] + ops["D22"]
    weights = grid.weights()
    best = math.inf
    for _ in range(12):
        res = -(lap @ w) + w - _power(w, p)
        size = float(np.max(np.abs(res)))
        # Stop at the roundoff floor of the stencil or once progress stalls.
        if size < NEWTON_TOL * max(1.0, float(np.max(np.abs(w)))) or size > 0.5 * best:
            break
        best = size
        jac = -lap + sparse.identity(grid.size) - sparse.diags(p * np.abs(w) ** (p - 1))
        w = w - _bordered_solve(jac, weights, ops["D1"] @ w, res)[0]
    return w


def _bordered_solve(L, weights, kern, rhs):
    """Solve L u + c k = f, ⟨k, u⟩_W = 0.

    The W-weighted operator is symmetric; the bordered system is solved by
    block elimination on one sparse LU of it. Returns (u, c, residual)
    with the relative residual of the full bordered system.
    """
    Wk = weights * kern
    S = (sparse.diags(weights) @ L).tocsc()
    try:
        lu = splu(S, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SingularSystem(f"corrector operator is singular: {exc}") from exc
    b = weights * rhs
    y = lu.solve(b)
    z = lu.solve(Wk)
    denom = float(Wk @ z)
    if not np.isfinite(denom) or abs(denom) < np.finfo(float).eps * float(Wk @ Wk):
        raise SingularSystem("bordered system is rank-deficient")
    c = float(Wk @ y) / denom
    u = y - c * z
    if not np.all(np.isfinite(u)):
        raise SingularSystem("bordered solve produced non-finite values")
    top = S @ u + c * Wk - b
    scale = float(np.linalg.norm(b)) or 1.0
    resid = math.hypot(float(np.linalg.norm(top)), float(Wk @ u)) / scale
    return u, c, resid


def corrector_operator(profile: RadialProfile, w0: np.ndarray, grid: HalfPlaneGrid) -> sparse.csr_matrix:
    """𝓛₀ = -Δ + 1 - p w₀^{p-1} on the grid."""
    ops = _grid_ops(grid)
    p = profile.params.p
    return (-(ops["D11"] + ops["D22"]) + sparse.identity(grid.size)
            - sparse.diags(p * np.abs(w0) ** (p - 1))).tocsr()


def corrector_rhs(geom: GeometryData, w0: np.ndarray, grid: HalfPlaneGrid) -> np.ndarray:
    """H_α^α ∂_{ζ₂}w₀ - 2ζ₂ H₁₁ ∂²_{ζ₁ζ₁}w₀."""
    return expansion_apply(geom, 1.0, w0, grid, 1) - expansion_apply(geom, 0.0, w0, grid, 0)


@dataclass(frozen=True)
class CorrectorField:
    grid: HalfPlaneGrid
    w0: np.ndarray = field(repr=False)
    w1: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    kernel_coeff: float
    multiplier: float
    solver_residual: float
    outer_max: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.w1)))

    def to_dict(self) -> dict:
        return {
            "R": self.grid.R,
            "step": self.grid.step,
            "shape": list(self.grid.shape),
            "kernel_coeff": self.kernel_coeff,
            "multiplier": self.multiplier,
            "solver_residual": self.solver_residual,
            "max_abs_w1": self.max_abs,
            "outer_max_w1": self.outer_max,
        }


def w1_solve(profile: RadialProfile, geom: GeometryData, R: float = 12.0, step: float = 0.08, *,
             rhs: np.ndarray | None = None, polish: bool = True) -> CorrectorField:
    """Solve 𝓛₀ w₁ = f on the half-plane, orthogonal to ∂_{ζ₁}w₀."""
    if profile.params.d != 2:
        raise ValueError("the corrector grid solver needs transverse dimension 2")
    if geom.n != 1:
        raise ValueError("the corrector grid solver needs n = 1")
    grid = HalfPlaneGrid(R, step)
    w0 = grid_ground_state(profile, grid, polish)
    ops = _grid_ops(grid)
    weights = grid.weights()
    f = corrector_rhs(geom, w0, grid) if rhs is None else np.asarray(rhs, dtype=float)
    kern = ops["D1"] @ w0
    kk = float(kern @ (weights * kern))
    fk = float(f @ (weights * kern))
    f_norm = math.sqrt(float(f @ (weights * f)))
    coeff = fk / kk
    if abs(fk) > SOLVABILITY_TOL * f_norm * math.sqrt(kk):
        raise SolvabilityViolation(
            f"right-hand side has kernel component {coeff:.3g} (|<f,k>| = {abs(fk):.3g}, |f| = {f_norm:.3g})")
    outer = grid.outer_mask()
    if f_norm == 0.0:
        w1 = np.zeros_like(w0)
        return CorrectorField(grid, w0, w1, f, coeff, 0.0, 0.0, 0.0)
    L = corrector_operator(profile, w0, grid)
    w1, lam, resid = _bordered_solve(L, weights, kern, f)
    return CorrectorField(grid, w0, w1, f, coeff, float(lam), resid, float(np.max(np.abs(w1[outer]))))


# ---------------------------------------------------------------------------
# Residual order test


@dataclass(frozen=True)
class OrderReport:
    epsilons: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    slope0: float
    slope1: float

    def to_dict(self) -> dict:
        return {"epsilons": self.epsilons.tolist(), "r0": self.r0.tolist(), "r1": self.r1.tolist(),
                "slope0": self.slope0, "slope1": self.slope1}


def residual(profile: RadialProfile, geom: GeometryData, u: np.ndarray, grid: HalfPlaneGrid, epsilon: float) -> float:
    """Max-norm of -Δ^{(≤1)}_{g_ε} u + u - uᵖ on the grid."""
    r = -expansion_apply(geom, epsilon, u, grid, 1) + u - _power(u, profile.params.p)
    return float(np.max(np.abs(r)))


def residual_order_test(profile: RadialProfile, geom: GeometryData, field_: CorrectorField, eps_list) -> OrderReport:
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 4 or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_list must be decreasing with at least 4 entries")
    grid, w0, w1 = field_.grid, field_.w0, field_.w1
    r0 = np.array([residual(profile, geom, w0, grid, e) for e in eps])
    r1 = np.array([residual(profile, geom, w0 + e * w1, grid, e) for e in eps])

    def slope(r):
        if np.any(r <= 0):
            return math.nan
        return float(np.polyfit(np.log(eps), np.log(r), 1)[0])

    return OrderReport(eps, r0, r1, slope(r0), slope(r1))


# ---------------------------------------------------------------------------
# Projection identities


def half_sphere_moment(exponents) -> float:
    """∫ θ^a over {θ ∈ S^{d-1} : θ_d > 0}; the last axis is the inward normal."""
    a = [int(x) for x in exponents]
    if any(x % 2 for x in a[:-1]):
        return 0.0
    total = sum(a) + len(a)
    return math.exp(sum(special.gammaln((x + 1) / 2) for x in a) - special.gammaln(total / 2))


@dataclass(frozen=True)
class IdentityReport:
    C0: float
    I1: float
    I1_predicted: float
    exchange_lhs: float
    exchange_rhs: float
    odd_moment: float
    odd_scale: float

    @property
    def I1_relative_error(self) -> float:
        return abs(self.I1 - self.I1_predicted) / abs(self.I1_predicted)

    @property
    def exchange_relative_error(self) -> float:
        return abs(self.exchange_lhs - self.exchange_rhs) / abs(self.exchange_rhs)

    def to_dict(self) -> dict:
        return {
            "C0": self.C0,
            "I1": self.I1,
            "I1_predicted": self.I1_predicted,
            "I1_relative_error": self.I1_relative_error,
            "exchange_lhs": self.exchange_lhs,
            "exchange_rhs": self.exchange_rhs,
            "exchange_relative_error": self.exchange_relative_error,
            "odd_moment": self.odd_moment,
            "odd_scale": self.odd_scale,
        }


def _odd_moment(profile: RadialProfile, half_width: float = 10.0, h: float = 0.1):
    """∫ ∂_N w₀ ∂_s w₀ over the half-space by a symmetric tensor quadrature.

    Directions beyond (ζ_s, ζ_N) are folded into a radius q with weight
    |S^{d-3}| q^{d-3}. Returns the integral and the matching integral of
    the absolute integrand as its scale.
    """
    d = profile.params.d
    m = int(round(half_width / h))
    s = h * np.arange(-m, m + 1)
    t = h * np.arange(0, m + 1)
    ws = np.full(s.size, h)
    wt = np.full(t.size, h)
    wt[0] *= 0.5
    if d == 2:
        S, T = np.meshgrid(s, t, indexing="ij")
        Q2, wq = 0.0, None
    else:
        q = h * np.arange(0, m + 1)
        wq = np.full(q.size, h) * 2 * math.pi ** ((d - 2) / 2) / special.gamma((d - 2) / 2) * q ** (d - 3)
        wq[0] *= 0.5
        S, T, Q = np.meshgrid(s, t, q, indexing="ij")
        Q2 = Q**2
    r = np.sqrt(S**2 + T**2 + Q2)
    _, dw = profile.evaluate(np.maximum(r, 1e-300))
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(r > 0, dw**2 * S * T / r**2, 0.0)
    weight = np.multiply.outer(ws, wt)
    if wq is not None:
        weight = np.multiply.outer(weight, wq)
    return float(np.sum(g * weight)), float(np.sum(np.abs(g) * weight))


def projection_identities(profile: RadialProfile) -> IdentityReport:
    """Radial reductions of the Step-3 projection integrals.

    With s a direction of ζ' and i another transverse direction (the
    inward normal when d = 2),
      I₁ = ∫ ζ_i ∂_s w₀ ∂²_{si} w₀ = A ∫ w'(r w'' - w') rⁿ dr  ( = -C₀/2 ),
      ∫ ζ_s ∂_s w₀ ∂²_{ii} w₀ = I₁ + B ∫ w'² rⁿ dr  ( = -I₁ ),
    where A and B are half-sphere moments of θ_s²θ_i² and θ_s².
    """
    params = profile.params
    d, n = params.d, params.n
    if d < 2:
        raise ValueError("projection identities need transverse dimension >= 2")
    r = profile.grid
    dw = profile.dw
    d2w = profile.second_derivative()
    rn = r**n
    exps_si = [0] * d
    exps_s = [0] * d
    exps_si[0] = exps_si[-1] = 2 if d == 2 else 0
    if d > 2:
        exps_si[0] = exps_si[1] = 2
    exps_s[0] = 2
    A = half_sphere_moment(exps_si)
    B = half_sphere_moment(exps_s)
    J = integrate.simpson(dw * (r * d2w - dw) * rn, x=r)
    K = integrate.simpson(dw**2 * rn, x=r)
    C0 = compute_constants(profile).C0
    I1 = A * J
    lhs = I1 + B * K
    odd, scale = _odd_moment(profile)
    return IdentityReport(C0, I1, -0.5 * C0, lhs, -I1, odd, scale)
