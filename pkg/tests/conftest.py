import numpy as np
import pytest

from mogibem.layers import PanelRule
from mogibem.mesh import icosphere, place_cavity
from mogibem.moduli import moduli_from_lame, moduli_from_poisson
from mogibem.solver import solve_trace

# a few materials: standard rock, a stiff compressible one and a near-incompressible one
MODULI = [moduli_from_poisson(0.25, 1.0), moduli_from_lame(0.3, 2.0), moduli_from_poisson(0.45, 0.7)]


@pytest.fixture(params=MODULI, ids=["nu025", "lame", "nu045"])
def moduli(request):
    return request.param


@pytest.fixture(scope="session")
def rock():
    return moduli_from_poisson(0.25, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cavity2(rock):
    """Level-2 sphere of radius 0.1 at depth 1 with its trace solution (p = 1)."""
    cav = place_cavity(icosphere(2), 0.1, (0.0, 0.0, -1.0))
    rule = PanelRule(cav)
    return cav, rule, solve_trace(cav, rock, 1.0, rule)
