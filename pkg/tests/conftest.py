"""Shared fixtures: contexts and zero catalogues for the named problems.

Catalogues are cached per session because several test modules reuse them.
"""

import numpy as np
import pytest

from spectral_gauge.charmat import make_context
from spectral_gauge.presets import get_preset
from spectral_gauge.spectrum import locate_zeros


class Case:
    def __init__(self, preset, R):
        self.preset = preset
        self.problem = preset.problem
        self.ctx = preset.context()
        self.catalogue = locate_zeros(self.ctx, R)

    def with_direction(self, a):
        return make_context(self.problem.A, a)


@pytest.fixture(scope="session")
def dirichlet():
    return Case(get_preset("dirichlet2"), 70.0)


@pytest.fixture(scope="session")
def periodic():
    return Case(get_preset("periodic3"), 70.0)


@pytest.fixture(scope="session")
def uncoupled():
    return Case(get_preset("ex3", 0.0), 85.0)


@pytest.fixture(scope="session")
def coupled():
    return Case(get_preset("ex3", -0.5), 90.0)


@pytest.fixture(scope="session")
def pseudo():
    return Case(get_preset("ex4", 2.0), 60.0)


def imaginary_axis_zeros(catalogue, sign=+1):
    """Zeros on the positive (sign=+1) or negative imaginary axis, by modulus."""
    s = [z.sigma for z in catalogue.zeros
         if abs(z.sigma.real) <= 1e-9 * abs(z.sigma) and np.sign(z.sigma.imag) == sign]
    return sorted(s, key=abs)
