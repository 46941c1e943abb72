import functools
import warnings

import pytest

from vortexwave.profile import ProfileGrid, ProfileParams, solve_profile


@functools.lru_cache(maxsize=None)
def cached_profile(s, gamma, n_cheb=128):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return solve_profile(ProfileParams(s, gamma), ProfileGrid(n_cheb=n_cheb))


@pytest.fixture(scope="session")
def prof_half():
    return cached_profile(0.5, 1.5)


@pytest.fixture(scope="session")
def prof_quarter():
    return cached_profile(0.25, 1.2)


@pytest.fixture(scope="session")
def prof_three_quarter():
    return cached_profile(0.75, 2.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
