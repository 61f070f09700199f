"""Isotropic elastic constants and the derived kernel prefactors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModuliOutOfRange


@dataclass(frozen=True)
class ElasticModuli:
    """Lamé pair plus every constant the kernels need.

    Build instances with :func:`moduli_from_lame` or
    :func:`moduli_from_poisson`; the derived fields are filled in
    ``__post_init__`` and never stored independently of ``(lam, mu)``.
    """

    lam: float
    mu: float
    nu: float = field(init=False)
    cmn: float = field(init=False)   # 1 / (16 pi mu (1 - nu))
    cnu: float = field(init=False)   # 4 (1 - nu)(1 - 2 nu)
    cpnu: float = field(init=False)  # (1 - 2 nu) / (8 pi (1 - nu))
    kmu: float = field(init=False)   # 1 / (4 pi mu)

    def __post_init__(self):
        lam, mu = float(self.lam), float(self.mu)
        if not (math.isfinite(lam) and math.isfinite(mu)):
            raise ModuliOutOfRange(f"non-finite moduli lambda={lam}, mu={mu}")
        if mu <= 0.0 or 3.0 * lam + 2.0 * mu <= 0.0:
            raise ModuliOutOfRange(
                f"need mu > 0 and 3 lambda + 2 mu > 0, got lambda={lam}, mu={mu}")
        nu = lam / (2.0 * (lam + mu))
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "cmn", 1.0 / (16.0 * math.pi * mu * (1.0 - nu)))
        object.__setattr__(self, "cnu", 4.0 * (1.0 - nu) * (1.0 - 2.0 * nu))
        object.__setattr__(self, "cpnu", (1.0 - 2.0 * nu) / (8.0 * math.pi * (1.0 - nu)))
        object.__setattr__(self, "kmu", 1.0 / (4.0 * math.pi * mu))

    @property
    def bulk_like(self) -> float:
        """3 lambda + 2 mu, the normalisation of the cavity load."""
        return 3.0 * self.lam + 2.0 * self.mu

    def stiffness(self) -> np.ndarray:
        """Full 3x3x3x3 isotropic tensor; for tests and reporting only."""
        d = np.eye(3)
        return (self.lam * np.einsum("ij,kl->ijkl", d, d)
                + self.mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)))

    def stress(self, grad: np.ndarray) -> np.ndarray:
        """Apply C to a (..., 3, 3) displacement gradient."""
        grad = np.asarray(grad)
        tr = np.trace(grad, axis1=-2, axis2=-1)[..., None, None]
        return self.lam * tr * np.eye(3) + self.mu * (grad + np.swapaxes(grad, -1, -2))

    def as_params(self) -> tuple:
        return (self.lam, self.mu, self.nu, self.cmn, self.cnu)


def moduli_from_lame(lam: float, mu: float) -> ElasticModuli:
    return ElasticModuli(lam, mu)


def moduli_from_poisson(nu: float, mu: float) -> ElasticModuli:
    nu, mu = float(nu), float(mu)
    if not (-1.0 < nu < 0.5):
        raise ModuliOutOfRange(f"Poisson ratio must lie in (-1, 0.5), got {nu}")
    if mu <= 0.0:
        raise ModuliOutOfRange(f"shear modulus must be positive, got {mu}")
    return ElasticModuli(2.0 * mu * nu / (1.0 - 2.0 * nu), mu)
