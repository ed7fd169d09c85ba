"""Bond-associated deformation gradient and stabilized divergence.

Every bond (I, J) gets its own deformation gradient

    F_JI = F_J + [x_J - x_I - (F_I + F_J)/2 xi] xi^T / |xi|^2,   xi = X_J - X_I

and stress ``P_JI = P(F_JI)``; the divergence at ``I`` then sums
``(P_JI - P_I) gamma_IJ`` instead of ``(P_J - P_I) gamma_IJ``. Bonds to
free-surface nodes are broken and carry ``P_JI = 0``.
"""

import numpy as np

from .material import first_pk_stress, small_strain


def nonhomogeneous_correction(F_I, F_J, x_I, x_J, X_I, X_J):
    """The bond term added to ``F_J``; vanishes for homogeneous deformation."""
    xi = np.asarray(X_J, dtype=float) - np.asarray(X_I, dtype=float)
    r2 = np.sum(xi * xi, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("coincident reference points have no bond")
    Fbar = 0.5 * (np.asarray(F_I) + np.asarray(F_J))
    mismatch = (np.asarray(x_J) - np.asarray(x_I)) - np.einsum("...ab,...b->...a", Fbar, xi)
    return mismatch[..., :, None] * (xi / r2[..., None])[..., None, :]


def bond_deformation_gradient(F_I, F_J, x_I, x_J, X_I, X_J):
    """``F_JI`` for one bond or for stacked bonds (leading axes broadcast)."""
    return np.asarray(F_J) + nonhomogeneous_correction(F_I, F_J, x_I, x_J, X_I, X_J)


def bond_stresses(F, x, X, w, material, free_surface=None, drop_correction=False):
    """``P_JI`` for every bond stored in ``w`` (shape ``(nnz, d, d)``).

    ``F`` and ``x`` are nodal fields; rows of ``w`` that were not built are
    simply absent from its CSR. ``drop_correction`` zeroes the
    non-homogeneous term so ``P_JI = P(F_J)``.
    """
    rows, cols = w.rows, w.indices
    if drop_correction:
        FJI = F[cols]
    else:
        FJI = bond_deformation_gradient(F[rows], F[cols], x[rows], x[cols], X[rows], X[cols])
    P = first_pk_stress(small_strain(FJI), material)
    if free_surface is not None:
        P[np.asarray(free_surface)[cols]] = 0.0
    return P


def ba_divergence(P_nodes, P_bonds, w, I=None):
    """``sum_J (P_JI - P_I) gamma_IJ``; every node, or node ``I`` only."""
    P_nodes = np.asarray(P_nodes, dtype=float)
    if I is not None:
        sl = w.slice(I)
        return np.einsum("mab,mb->a", P_bonds[sl] - P_nodes[I], w.gamma[sl])
    rows = w.rows
    out = np.zeros((w.N, P_nodes.shape[1]))
    np.add.at(out, rows, np.einsum("mab,mb->ma", P_bonds - P_nodes[rows], w.gamma))
    return out
