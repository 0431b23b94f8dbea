import math
from pathlib import Path

import pytest

from spikespec.geometry import build_spectra, circle_spectrum, flat_torus_spectrum
from spikespec.golden import load_golden
from spikespec.ground_state import ProblemParams, compute_constants, solve_profile
from spikespec.model_operator import branch_curves

GOLDEN_PATH = Path(__file__).with_name("golden.json")


@pytest.fixture(scope="session")
def golden():
    return load_golden(GOLDEN_PATH)


@pytest.fixture(scope="session")
def profile_cache():
    cache = {}

    def get(p, d):
        if (p, d) not in cache:
            cache[p, d] = solve_profile(ProblemParams(p, d))
        return cache[p, d]

    return get


@pytest.fixture(scope="session")
def profile(profile_cache):
    """Default case p = 3, d = 2."""
    return profile_cache(3, 2)


@pytest.fixture(scope="session")
def profile_1d(profile_cache):
    return profile_cache(3, 1)


@pytest.fixture(scope="session")
def constants(profile):
    return compute_constants(profile)


@pytest.fixture(scope="session")
def curves(profile):
    return branch_curves(profile)


@pytest.fixture(scope="session")
def circle():
    return build_spectra(circle_spectrum(2 * math.pi, 10_000), 1, 0.5)


@pytest.fixture(scope="session")
def torus():
    return build_spectra(flat_torus_spectrum([2 * math.pi] * 2, 1_000_000), 1, 0.5)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
