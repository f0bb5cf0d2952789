from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import cmpairs.bkp
import cmpairs.dynamics
import cmpairs.elliptic
import cmpairs.pair_manifold
from cmpairs._backend import available, load
from cmpairs.elliptic import Lattice

_KERNEL_USERS = (cmpairs.elliptic, cmpairs.dynamics, cmpairs.bkp, cmpairs.pair_manifold)


@pytest.fixture(scope="session")
def lat():
    """Default test lattice, periods (2, 2i)."""
    return Lattice.square()


@pytest.fixture(scope="session")
def skew():
    return Lattice(0.8 + 0.3j, 0.2 + 1.1j)


@pytest.fixture(params=available())
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    k = load(request.param)
    for mod in _KERNEL_USERS:
        monkeypatch.setattr(mod, "kernel", k)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def cell_points(lat, rng, n, lo=0.05, hi=0.95):
    """Random points of the fundamental cell, away from its corners."""
    a, b = rng.uniform(lo, hi, size=(2, n))
    return 2 * a * lat.omega1 + 2 * b * lat.omega2


def rel(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(np.abs(np.asarray(b)), 1.0)


# acceptance verdicts, filled by test_acceptance.py and echoed in the summary
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
