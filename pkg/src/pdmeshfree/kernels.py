"""Influence functions for the non-local operators.

The RK operators use a cubic B-spline of the normalized bond length, the
GMLS operators a singular ``1/|xi|^2`` weight folded into the operator.
"""

from dataclasses import dataclass

import numpy as np

KINDS = ("cubic_bspline", "inverse_square")


def cubic_bspline(xi_hat):
    """Cubic B-spline of the normalized distance ``|xi| / delta``.

    Returns 2/3 at the origin, 1/6 at 1/2 and vanishes for ``xi_hat >= 1``.
    Accepts scalars or arrays.
    """
    q = np.asarray(xi_hat, dtype=float)
    if np.any(q < 0):
        raise ValueError("normalized distance must be non-negative")
    inner = 2.0 / 3.0 - 4.0 * q**2 + 4.0 * q**3
    outer = 4.0 / 3.0 - 4.0 * q + 4.0 * q**2 - 4.0 / 3.0 * q**3
    w = np.where(q <= 0.5, inner, np.where(q <= 1.0, outer, 0.0))
    return float(w) if w.ndim == 0 else w


def inverse_square(xi):
    """``1/|xi|^2`` for a bond vector (or an ``(m, d)`` stack of them)."""
    xi = np.asarray(xi, dtype=float)
    r2 = np.sum(xi * xi, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("zero-length bond has no inverse-square weight")
    w = 1.0 / r2
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class InfluenceFunction:
    kind: str = "cubic_bspline"
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown influence function {self.kind!r}")
        if self.delta <= 0:
            raise ValueError("horizon must be positive")

    def __call__(self, xi):
        """Weight of bond vector(s) ``xi`` measured in the family metric."""
        if self.kind == "inverse_square":
            return inverse_square(xi)
        r = np.linalg.norm(np.asarray(xi, dtype=float), axis=-1)
        return cubic_bspline(r / self.delta)
