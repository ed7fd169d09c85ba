"""Linear elastic closure used with the non-local deformation gradient."""

from dataclasses import dataclass

import numpy as np

# mild near-incompressibility is supported; beyond this locking needs treatment
MAX_POISSON = 0.495


def lame_from_engineering(E, nu):
    """Plane-strain Lame parameters ``(lambda, mu)`` from ``(E, nu)``."""
    if E <= 0:
        raise ValueError("Young's modulus must be positive")
    if not (-1.0 < nu < 0.5):
        raise ValueError("Poisson's ratio must lie in (-1, 0.5)")
    if nu > MAX_POISSON:
        raise ValueError(f"Poisson's ratio {nu} is in the locking regime")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class Material:
    E: float
    nu: float

    @property
    def lame(self):
        return lame_from_engineering(self.E, self.nu)

    @property
    def lam(self):
        return self.lame[0]

    @property
    def mu(self):
        return self.lame[1]

    def stiffness(self, d=2):
        """``C`` with ``P.ravel() = C @ (F - I).ravel()`` (row-major)."""
        lam, mu = self.lame
        I = np.eye(d)
        C = (lam * np.einsum("ab,pq->abpq", I, I)
             + mu * (np.einsum("ap,bq->abpq", I, I) + np.einsum("aq,bp->abpq", I, I)))
        return C.reshape(d * d, d * d)


def small_strain(F):
    """``(F + F^T)/2 - I``; works on stacks ``(..., d, d)``."""
    F = np.asarray(F, dtype=float)
    return 0.5 * (F + np.swapaxes(F, -1, -2)) - np.eye(F.shape[-1])


def first_pk_stress(eps, material):
    eps = np.asarray(eps, dtype=float)
    lam, mu = material.lame
    tr = np.trace(eps, axis1=-2, axis2=-1)
    return lam * tr[..., None, None] * np.eye(eps.shape[-1]) + 2.0 * mu * eps
