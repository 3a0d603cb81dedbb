import os
import sys

import numpy as np
import pytest
import scipy.constants as sc

sys.path.insert(0, os.path.dirname(__file__))

from surface_qbm import (  # noqa: E402
    DrudeMedium,
    LorentzPolarizability,
    ParticleModel,
    PerfectMirror,
    Scenario,
    ThermalEnvironment,
    Vacuum,
)

ALPHA0 = 4 * np.pi * sc.epsilon_0 * (1e-7) ** 3
MASS = 1e-17


def standard_particle(omega0=1e15, gamma=1e13, alpha0=ALPHA0, mass=MASS):
    return ParticleModel(mass, LorentzPolarizability(alpha0, omega0, gamma))


DRUDE = DrudeMedium(1.37e16, 5e13)
MIRROR = PerfectMirror()
VACUUM = Vacuum()


def scenario(medium=DRUDE, z=1e-6, T=300.0, particle=None, **kw):
    return Scenario(particle or standard_particle(), medium, z, ThermalEnvironment(T), **kw)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.fixture
def drude_scenario():
    return scenario()


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
