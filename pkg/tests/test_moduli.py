import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mogibem.errors import ModuliOutOfRange
from mogibem.moduli import moduli_from_lame, moduli_from_poisson


@given(st.floats(-0.99, 0.499), st.floats(1e-3, 1e3))
def test_poisson_roundtrip(nu, mu):
    m = moduli_from_poisson(nu, mu)
    assert m.nu == pytest.approx(nu, rel=1e-10, abs=1e-12)
    assert m.mu == mu


def test_derived_constants():
    m = moduli_from_poisson(0.25, 1.0)
    assert m.lam == pytest.approx(1.0)
    assert m.cmn == pytest.approx(1 / (16 * math.pi * 0.75))
    assert m.cnu == pytest.approx(4 * 0.75 * 0.5)
    assert m.kmu == pytest.approx(1 / (4 * math.pi))
    assert m.bulk_like == pytest.approx(5.0)


@pytest.mark.parametrize("lam, mu", [(1.0, 0.0), (1.0, -1.0), (-1.0, 1.0), (np.nan, 1.0), (1.0, np.inf)])
def test_lame_rejected(lam, mu):
    with pytest.raises(ModuliOutOfRange):
        moduli_from_lame(lam, mu)


@pytest.mark.parametrize("nu", [0.5, 0.6, -1.0])
def test_poisson_rejected(nu):
    with pytest.raises(ModuliOutOfRange):
        moduli_from_poisson(nu, 1.0)


def test_stress_matches_stiffness(rng):
    m = moduli_from_lame(0.7, 1.3)
    g = rng.normal(size=(3, 3))
    assert np.allclose(m.stress(g), np.einsum("ijkl,kl->ij", m.stiffness(), g))


@pytest.mark.parametrize("lam, mu, nu", [(1.0, 1.0, 0.25), (0.0, 1.0, 0.0), (3.0, 2.0, 0.3)])
def test_hand_values(lam, mu, nu):
    m = moduli_from_lame(lam, mu)
    assert m.nu == pytest.approx(nu, abs=1e-15)
    back = moduli_from_poisson(m.nu, m.mu)
    assert back.lam == pytest.approx(lam, abs=1e-14)
    assert moduli_from_lame(back.lam, back.mu).nu == pytest.approx(m.nu, abs=1e-15)


def test_kernel_prefactor():
    assert moduli_from_lame(1.0, 1.0).cmn == pytest.approx(1 / (12 * math.pi), rel=1e-15)
