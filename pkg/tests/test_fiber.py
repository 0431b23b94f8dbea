import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikespec.errors import DomainTooSmall
from spikespec.fiber import (FiberDomain, assemble_pencil, branch_sweep, coercivity_check, eta, eta_derivative,
                             fiber_eigen, find_alpha_bar, sigma, tau, track_branch, truncated_eigen,
                             truncation_closeness)


def overlap(u, v, weights):
    return abs(u @ (weights * v)) / np.sqrt((u @ (weights * u)) * (v @ (weights * v)))


@pytest.mark.parametrize("p,d", [(2, 2), (3, 2), (2, 3), (3, 3)])
def test_eta_at_zero(profile_cache, p, d):
    assert eta(profile_cache(p, d), 0.0) == pytest.approx(-(p - 1), abs=1e-3)


def test_sigma_and_tau_at_zero(profile):
    assert abs(sigma(profile, 0.0)) < 1e-3
    assert tau(profile, 0.0) > 0


def test_pencil_signs(profile):
    dom = FiberDomain()
    pen = assemble_pencil(profile, 0.0, 0, dom)
    assert fiber_eigen(profile, 0.0, 0, 1, dom)[0].lam < 0
    big = assemble_pencil(profile, 100.0, 0, dom)
    diff = (big.A - big.M).toarray()
    assert np.linalg.eigvalsh(diff).min() > 0
    # The weight vanishes where the ground state has underflowed.
    w, _ = profile.evaluate(pen.radii)
    assert np.all(pen.m[w < np.finfo(float).eps] == 0)


def test_ell1_kernel_is_derivative(profile):
    pair = fiber_eigen(profile, 0.0, 1, 1)[0]
    _, dw = profile.evaluate(pair.radii)
    weights = pair.radii ** profile.params.n
    assert abs(pair.lam) < 1e-3
    assert overlap(pair.v, dw, weights) > 0.999


def test_ell0_ground_mode_is_profile(profile):
    pair = fiber_eigen(profile, 0.0, 0, 1)[0]
    w, _ = profile.evaluate(pair.radii)
    weights = np.maximum(pair.radii, 1e-3) ** profile.params.n
    assert overlap(pair.v, w, weights) > 0.999
    assert np.all(np.diff(pair.v) <= 1e-12)  # radially decreasing


def test_eigenfunction_normalization_and_boundary(profile):
    dom = FiberDomain()
    for ell in (0, 1, 2):
        pen = assemble_pencil(profile, 0.3, ell, dom)
        pair = fiber_eigen(profile, 0.3, ell, 1, dom)[0]
        v = pair.v[1:] if ell else pair.v
        assert float(v @ (pen.A @ v)) * pen.area == pytest.approx(1.0, rel=1e-10)
        if ell:
            assert pair.v[0] == 0.0


def test_large_alpha_limit(profile):
    assert eta(profile, 1e3) == pytest.approx(1.0, abs=0.1)


def test_branches_monotone(profile):
    alphas = np.round(np.arange(0, 5.05, 0.1), 10)
    sweep = branch_sweep(profile, alphas)
    for name in ("eta", "sigma", "tau"):
        assert np.all(np.diff(sweep[name]) >= -1e-10), name
    assert sweep["sigma"][5] - sweep["sigma"][0] > 1e-3
    assert np.all(sweep["deta_dalpha"] > 0)


def test_derivative_against_finite_difference(profile):
    h = 1e-3
    fd = (eta(profile, 0.0 + h) - eta(profile, 0.0)) / h  # one-sided at the boundary α = 0
    fd2 = (eta(profile, 2 * h) - eta(profile, 0.0)) / (2 * h)
    richardson = 2 * fd - fd2
    assert eta_derivative(profile, 0.0) == pytest.approx(richardson, rel=1e-3)
    a = 1.0
    central = (eta(profile, a + h) - eta(profile, a - h)) / (2 * h)
    assert eta_derivative(profile, a) == pytest.approx(central, rel=1e-3)


def test_derivative_at_root_is_l2_mass(profile):
    res = find_alpha_bar(profile)
    dom = FiberDomain()
    pen = assemble_pencil(profile, res.alpha_bar, 0, dom)
    v = fiber_eigen(profile, res.alpha_bar, 0, 1, dom)[0].v
    mass = float(v @ (pen.weights * v)) * pen.area
    assert res.eta_slope == pytest.approx(mass, rel=1e-8)


def test_alpha_bar(profile, golden):
    res = find_alpha_bar(profile)
    assert abs(res.eta_at_root) < 1e-8
    assert res.alpha_bar == pytest.approx(golden["p=3,d=2"]["alpha_bar"], rel=1e-4)
    assert res.eta_slope == pytest.approx(golden["p=3,d=2"]["eta_slope"], rel=1e-3)
    assert eta(profile, res.alpha_bar / 2) < 0 < eta(profile, 2 * res.alpha_bar)


def test_alpha_bar_grid_stability(profile):
    a = find_alpha_bar(profile).alpha_bar
    b = find_alpha_bar(profile, domain=FiberDomain(step=0.005)).alpha_bar
    assert abs(a - b) / a < 1e-3


def test_track_branch_follows_sigma(profile):
    alphas = np.linspace(0, 2, 5)
    tracked = track_branch(profile, alphas, ell=1, rank=1)
    direct = np.array([sigma(profile, a) for a in alphas])
    assert np.allclose(tracked, direct, atol=1e-12)


def test_truncation_raises_eigenvalues(profile):
    for eps in (0.04, 0.01):
        assert truncated_eigen(profile, 0.0, eps, 0.5, 0, 1)[0].lam >= eta(profile, 0.0) - 1e-12
        assert min(truncated_eigen(profile, 0.0, eps, 0.5, 2, 1)[0].lam,
                   truncated_eigen(profile, 0.0, eps, 0.5, 0, 2)[1].lam) >= tau(profile, 0.0) - 1e-9


def test_truncation_radius_too_small(profile):
    with pytest.raises(DomainTooSmall):
        truncated_eigen(profile, 0.0, 0.5, 0.5, 0, 1)


def test_truncation_closeness(profile):
    rep = truncation_closeness(profile)
    assert np.all(rep.differences > 0)
    assert np.all(rep.ratios >= 5)
    slope = np.polyfit(rep.radii, np.log(rep.differences), 1)[0]
    assert slope < -0.5


def test_coercivity(profile):
    t0 = tau(profile, 0.0)
    for eps in (0.1, 0.05):
        assert coercivity_check(profile, eps, 0.5) >= t0 / 2
    assert fiber_eigen(profile, 0.0, 2, 1)[0].lam >= t0 - 1e-12
    assert coercivity_check(profile, 0.05, 0.5, alpha=1.0) >= coercivity_check(profile, 0.05, 0.5)


@settings(max_examples=15, deadline=None)
@given(alpha=st.floats(0, 50), ell=st.integers(0, 3))
def test_all_eigenvalues_below_one(profile, alpha, ell):
    pairs = fiber_eigen(profile, alpha, ell, 3)
    lams = [p.lam for p in pairs]
    assert max(lams) < 1
    assert np.all(np.diff(lams) >= 0)


@settings(max_examples=10, deadline=None)
@given(a=st.floats(0, 20), da=st.floats(1e-3, 5))
def test_eta_nondecreasing(profile, a, da):
    assert eta(profile, a + da) >= eta(profile, a) - 1e-12


def test_domain_validation():
    with pytest.raises(ValueError):
        FiberDomain(boundary="neumann")
    with pytest.raises(ValueError):
        FiberDomain(gamma=1.5)
    with pytest.raises(ValueError):
        FiberDomain(boundary="dirichlet")
