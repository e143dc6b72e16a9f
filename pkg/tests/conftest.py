import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pinfield import make_box, volume_from_sites, gaussian_potential

_ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


@pytest.fixture(scope="session")
def unit_potential():
    return gaussian_potential(1.0)


@pytest.fixture(scope="session")
def single_site():
    return make_box(2, 0)


@pytest.fixture(scope="session")
def domino():
    return volume_from_sites(2, [(0, 0), (1, 0)])


@pytest.fixture(scope="session")
def box_3x3():
    return make_box(2, 1)


@pytest.fixture(scope="session")
def small_volumes():
    """Every shape with at most 3 sites, in d=2 and d=3."""
    return [
        volume_from_sites(2, [(0, 0)]),
        volume_from_sites(2, [(0, 0), (1, 0)]),
        volume_from_sites(2, [(0, 0), (1, 0), (2, 0)]),
        volume_from_sites(2, [(0, 0), (1, 0), (0, 1)]),
        volume_from_sites(3, [(0, 0, 0)]),
        volume_from_sites(3, [(0, 0, 0), (1, 0, 0)]),
        volume_from_sites(3, [(0, 0, 0), (1, 0, 0), (2, 0, 0)]),
        volume_from_sites(3, [(0, 0, 0), (1, 0, 0), (0, 1, 0)]),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_RESULTS.append((name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
