import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikespec.errors import TailTooShort
from spikespec.ground_state import (ProblemParams, angular_factors, compute_constants, decay_diagnostics,
                                    profile_from_samples, solve_profile, tail_shape)


def soliton(x, p):
    """Closed-form whole-line soliton for -w'' + w = w^p."""
    amp = ((p + 1) / 2) ** (1 / (p - 1))
    return amp / np.cosh(0.5 * (p - 1) * x) ** (2 / (p - 1))


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_1d_matches_closed_form(profile_cache, p):
    prof = profile_cache(p, 1)
    err = np.max(np.abs(prof.w - soliton(prof.grid, p)))
    assert err < 1e-6
    assert prof.w0 == pytest.approx(((p + 1) / 2) ** (1 / (p - 1)), abs=1e-6)


def test_profile_shape(profile):
    assert profile.dw[0] == 0.0
    assert np.all(profile.w > 0)
    assert np.all(np.diff(profile.w) < 0)
    assert profile.w[-1] < 1e-5
    assert profile.splice_radius < profile.r_max


def test_w0_against_golden(profile, golden):
    assert profile.w0 == pytest.approx(golden["p=3,d=2"]["w0"], rel=1e-5)


@pytest.mark.parametrize("key", ["p=2,d=2", "p=3,d=3", "p=2,d=3"])
def test_w0_other_cases(profile_cache, golden, key):
    p, d = (float(s.split("=")[1]) for s in key.split(","))
    prof = profile_cache(p, int(d))
    assert prof.w0 == pytest.approx(golden[key]["w0"], rel=1e-5)
    consts = compute_constants(prof)
    assert consts.C0 == pytest.approx(golden[key]["C0"], rel=1e-5)
    assert consts.C1 == pytest.approx(golden[key]["C1"], rel=1e-5)


def test_second_order_in_step():
    params = ProblemParams(3, 2)
    w0 = [solve_profile(params, step=h).w0 for h in (4e-3, 2e-3, 1e-3, 5e-4)]
    diffs = np.abs(np.diff(w0))
    slopes = np.log2(diffs[:-1] / diffs[1:])
    assert np.all(np.abs(slopes - 2) < 0.3)


def test_discrete_residual_is_second_order(profile):
    r, w, h = profile.grid, profile.w, profile.step
    n, p = profile.params.n, profile.params.p
    core = (r > 0) & (r < profile.splice_radius - 2 * h)
    i = np.flatnonzero(core)[1:-1]
    d2 = (w[i + 1] - 2 * w[i] + w[i - 1]) / h**2
    d1 = (w[i + 1] - w[i - 1]) / (2 * h)
    res = -d2 - n / r[i] * d1 + w[i] - w[i] ** p
    assert np.max(np.abs(res)) < 10 * h**2 * np.max(np.abs(w)) ** p


def test_decay_1d_amplitude(profile_1d):
    rep = decay_diagnostics(profile_1d)
    assert rep.amplitude_limit == pytest.approx(2 * math.sqrt(2), rel=1e-4)
    assert rep.converged


def test_decay_log_slope(profile):
    rep = decay_diagnostics(profile)
    assert rep.slope_limit == pytest.approx(-1.0, abs=1e-2)


def test_short_tail_rejected(profile_1d):
    coarse = profile_1d.grid[::100]
    mask = coarse <= 10.0
    prof = profile_from_samples(profile_1d.params, coarse[mask], profile_1d.w[::100][mask],
                                profile_1d.dw[::100][mask])
    with pytest.raises(TailTooShort):
        decay_diagnostics(prof)


def test_constants_1d_closed_form(profile_1d):
    c = compute_constants(profile_1d)
    assert c.C0 == pytest.approx(4 / 3, rel=1e-5)
    # ∫ 3 w² w'² with w = √2 sech x gives 16/5.
    assert c.C1 == pytest.approx(16 / 5, rel=1e-5)
    assert c.l2_sq == pytest.approx(4.0, rel=1e-5)


def test_constants_refinement(profile):
    fine = compute_constants(solve_profile(profile.params, step=5e-4))
    base = compute_constants(profile)
    assert abs(fine.C0 / base.C0 - 1) < 1e-3
    assert abs(fine.C1 / base.C1 - 1) < 1e-3
    assert base.C0 > 0 and base.C1 > 0 and base.l2_sq > 0


def test_supercritical_fails():
    assert not ProblemParams(5.5, 3).subcritical
    assert ProblemParams(3, 2).subcritical


@pytest.mark.parametrize("bad", [(1.0, 2), (0.5, 2), (3.0, 0), (3.0, 1.5)])
def test_invalid_params(bad):
    with pytest.raises(ValueError):
        ProblemParams(*bad)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_angular_factors_positive(d):
    area, moment = angular_factors(d)
    assert area > 0 and moment > 0


@settings(max_examples=30, deadline=None)
@given(r=st.floats(20, 200), n=st.integers(0, 3))
def test_tail_log_slope_approaches_minus_one(r, n):
    g, dg = tail_shape(np.array([r]), n)
    assert dg[0] / g[0] == pytest.approx(-1 - n / (2 * r), abs=2 / r**2)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(2, 30), n=st.integers(0, 3))
def test_tail_solves_linear_equation(r, n):
    h = 1e-3
    x = np.array([r - h, r, r + h])
    g = tail_shape(x, n)[0] * np.exp(-(x - r))  # common e^r scale
    d2 = (g[2] - 2 * g[1] + g[0]) / h**2
    d1 = (g[2] - g[0]) / (2 * h)
    assert abs(d2 + n / r * d1 - g[1]) < 1e-5 * abs(g[1])


@settings(max_examples=8, deadline=None)
@given(p=st.floats(1.5, 4.0))
def test_profile_invariants_any_p(p):
    prof = solve_profile(ProblemParams(p, 2), step=4e-3)
    assert np.all(prof.w > 0)
    assert np.all(np.diff(prof.w) < 0)
    assert prof.dw[0] == 0.0
    assert compute_constants(prof).C1 / compute_constants(prof).C0 > 0
