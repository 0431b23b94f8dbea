import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikespec.errors import DegenerateJacobi, DegenerateModelWarning, InsufficientData
from spikespec.geometry import (SubmanifoldSpectra, build_spectra, circle_spectrum, counting_function,
                                flat_torus_spectrum, jacobi_apply, jacobi_invert, weyl_check)


def brute_torus(lengths, count, bound):
    vals = [sum((2 * math.pi * m / L) ** 2 for m, L in zip(ms, lengths))
            for ms in itertools.product(range(-bound, bound + 1), repeat=len(lengths))]
    return np.sort(vals)[:count]


def test_circle_values():
    assert np.allclose(circle_spectrum(2 * math.pi, 7).rho, [0, 1, 1, 4, 4, 9, 9])
    assert np.allclose(circle_spectrum(math.pi, 5).rho, [0, 4, 4, 16, 16])
    assert circle_spectrum(1.0, 1).rho.tolist() == [0.0]


def test_square_torus_values():
    rho = flat_torus_spectrum([2 * math.pi] * 2, 10).rho
    assert np.allclose(rho, [0, 1, 1, 1, 1, 2, 2, 2, 2, 4])


def test_torus_against_enumeration():
    lengths = [2 * math.pi, 3.0]
    assert np.allclose(flat_torus_spectrum(lengths, 200).rho, brute_torus(lengths, 200, 30))
    lengths3 = [2 * math.pi, 5.0, 4.0]
    assert np.allclose(flat_torus_spectrum(lengths3, 200).rho, brute_torus(lengths3, 200, 8))


def test_torus_k1_is_circle():
    assert np.allclose(flat_torus_spectrum([3.0], 101).rho, circle_spectrum(3.0, 101).rho)


def test_torus_bound_expands():
    # A very elongated torus forces the initial enumeration box to grow.
    sp = flat_torus_spectrum([100.0, 1.0], 500)
    assert sp.rho.size == 500
    assert np.allclose(sp.rho, brute_torus([100.0, 1.0], 500, 400))


def test_build_spectra_shift_and_multiplicity():
    sp = build_spectra(circle_spectrum(2 * math.pi, 5), 1, 0.5)
    assert np.allclose(sp.mu, [0.5, 1.5, 1.5, 4.5, 4.5])
    sp2 = build_spectra(circle_spectrum(2 * math.pi, 5), 2, 0.5)
    assert sp2.omega.size == 10
    assert np.allclose(sp2.omega[:4], [0, 0, 1, 1])
    assert np.all(np.abs(sp2.mu - sp2.omega) <= 0.5)


def test_degenerate_model_warns():
    with pytest.warns(DegenerateModelWarning):
        sp = build_spectra(circle_spectrum(2 * math.pi, 5), 1, -1.0)
    assert np.allclose(sp.mu[:3], [-1, 0, 0])
    assert not sp.nondegenerate


def test_weyl_circle(circle):
    rep = weyl_check(circle, "rho")
    assert abs(rep.fitted_exponent - 2) / 2 < 0.05
    assert rep.fitted_constant == pytest.approx(math.pi**2, rel=0.03)
    # Independent check: counting oracle N(λ) ≈ (vol/π)√λ for a circle.
    lam = 1e6
    assert counting_function(circle.rho, lam) == pytest.approx(circle.vol / math.pi * math.sqrt(lam), rel=1e-3)


def test_weyl_square_torus():
    sp = build_spectra(flat_torus_spectrum([2 * math.pi] * 2, 10_000), 1, 0.5)
    for which in ("rho", "omega", "mu"):
        rep = weyl_check(sp, which)
        assert abs(rep.fitted_exponent - 1) < 0.05, which
    # Weyl constant for a 2-torus is 4π.
    assert weyl_check(sp).fitted_constant == pytest.approx(4 * math.pi, rel=0.03)


def test_weyl_mu_matches_omega(circle):
    a = weyl_check(circle, "omega").fitted_exponent
    b = weyl_check(circle, "mu").fitted_exponent
    assert abs(a - b) < 1e-3


def test_weyl_needs_data():
    with pytest.raises(InsufficientData):
        weyl_check(circle_spectrum(1.0, 10))
    with pytest.raises(InsufficientData):
        weyl_check(circle_spectrum(1.0, 2000), "mu")


def test_jacobi_eigenbasis(circle):
    e3 = np.zeros(10)
    e3[3] = 1.0
    g = 2.5 * circle.mu[3] * e3
    assert np.allclose(jacobi_invert(circle, g, 2.5), e3)


def test_jacobi_degenerate():
    with pytest.warns(DegenerateModelWarning):
        sp = build_spectra(circle_spectrum(2 * math.pi, 10), 1, -1.0)
    with pytest.raises(DegenerateJacobi):
        jacobi_invert(sp, np.ones(5), 1.0)
    g = np.array([1.0, 0.0, 0.0, 1.0])
    phi = jacobi_invert(sp, g, 1.0)
    assert phi[1] == 0.0 and phi[3] == pytest.approx(1 / 3)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c0=st.floats(0.1, 10))
def test_jacobi_round_trip(circle, seed, c0):
    g = np.random.default_rng(seed).normal(size=50)
    phi = jacobi_invert(circle, g, c0)
    assert np.allclose(jacobi_apply(circle, phi, c0), g, rtol=1e-12, atol=0)


@settings(max_examples=20, deadline=None)
@given(lengths=st.lists(st.floats(0.5, 10), min_size=1, max_size=3), count=st.integers(1, 300))
def test_torus_sorted_and_sized(lengths, count):
    sp = flat_torus_spectrum(lengths, count)
    assert sp.rho.size == count
    assert sp.rho[0] == 0.0
    assert np.all(np.diff(sp.rho) >= 0)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 4), kappa=st.floats(0.1, 5), count=st.integers(1, 200))
def test_build_spectra_lengths(n, kappa, count):
    sp = build_spectra(circle_spectrum(2 * math.pi, count), n, kappa)
    assert sp.omega.size == n * sp.rho.size
    assert np.all(sp.omega >= 0)
    assert np.allclose(sp.mu - sp.omega, kappa)


def test_dict_round_trip(circle):
    back = SubmanifoldSpectra.from_dict(circle.to_dict())
    assert np.array_equal(back.rho, circle.rho) and np.array_equal(back.mu, circle.mu)
    assert back.k == circle.k and back.vol == circle.vol


def test_truncated(circle):
    t = circle.truncated(10)
    assert t.rho.size == 10 and t.mu.size == 10


def test_invalid_inputs():
    with pytest.raises(ValueError):
        circle_spectrum(-1, 3)
    with pytest.raises(ValueError):
        flat_torus_spectrum([1.0, 0.0], 3)
    with pytest.raises(ValueError):
        build_spectra(circle_spectrum(1, 3), 0, 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_spectra(circle_spectrum(1, 3), 1, 0.5)
