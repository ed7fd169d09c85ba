"""GMLS quadrature weights for the non-local gradient.

Each bond carries a diagonal weight ``omega_IJ`` (one entry per dimension).
The weights minimize ``sum_J omega_IJ : omega_IJ`` subject to the gradient

    grad_h(p)_I = sum_J (p_J - p_I) xi_IJ^T omega_IJ / |xi_IJ|^2

being exact for every monomial ``p`` of degree 1..n in a frame centered at
``I``. Because ``omega`` is diagonal the constraints split by column of the
gradient, giving ``d`` independent minimum-norm problems per node, each
solved through its KKT system.
"""

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateNeighborhoodError, UnisolvencyError
from .rk import basis_size, monomial_basis_eval
from .weights import BondWeights, apply_divergence, family_csr, restrict_csr, select_nodes

RESIDUAL_TOL = 1e-10
PIVOT_TOL = 1e-12


def unisolvency_bound(n, d):
    """Minimum number of bonds: ``(n+d)!/(n!d!) - 1``."""
    if n < 1:
        raise ValueError("order must be at least 1")
    return basis_size(n, d)


def solve_kkt(A, b):
    """Minimum-norm ``w`` with ``A w = b`` from the bordered system.

    ``[[I, A^T], [A, 0]] [w; lam] = [0; b]``. A rank-deficient but
    consistent ``A`` (e.g. symmetric stencils) makes the bordered matrix
    singular; the least-squares solve still returns the unique minimizer.
    Returns ``(w, lam, rank)``.
    """
    p, m = A.shape
    K = np.zeros((m + p, m + p))
    K[:m, :m] = np.eye(m)
    K[:m, m:] = A.T
    K[m:, :m] = A
    rhs = np.concatenate([np.zeros(m), b])
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > PIVOT_TOL * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank == p:
        sol = sla.solve(K, rhs, assume_a="sym")
    else:
        sol = sla.lstsq(K, rhs, cond=PIVOT_TOL)[0]
    return sol[:m], sol[m:], rank


def constraint_matrices(xi, n):
    """Per-dimension constraint matrices ``A_k`` (``(d, size, m)``).

    ``A_k[beta, J] = q_beta(xi_J) xi_Jk / |xi_J|^2``; the right-hand side for
    column ``k`` is the unit vector selecting the monomial ``x_k``.
    """
    Q = monomial_basis_eval(xi, n)
    r2 = np.sum(xi * xi, axis=1)
    return np.stack([(Q * (xi[:, k] / r2)[:, None]).T for k in range(xi.shape[1])])


def gmls_bond_weights(xi, n, node=None, return_info=False):
    """Diagonal weights ``omega`` (shape ``(m, d)``) for one family.

    Bond vectors are rescaled by the longest bond before building the
    constraints; the weights are dimensionless, so this changes nothing
    but the conditioning.
    """
    xi = np.asarray(xi, dtype=float)
    m, d = xi.shape
    need = unisolvency_bound(n, d)
    if m < need:
        raise UnisolvencyError(node, m, need)
    s = float(np.max(np.linalg.norm(xi, axis=1)))
    A = constraint_matrices(xi / s, n)
    omega = np.empty((m, d))
    residual = 0.0
    for k in range(d):
        b = np.zeros(A.shape[1])
        b[k] = 1.0
        w, _, rank = solve_kkt(A[k], b)
        res = float(np.linalg.norm(A[k] @ w - b))
        if not np.isfinite(res) or res > RESIDUAL_TOL:
            raise DegenerateNeighborhoodError(
                node, f"GMLS constraints unsatisfiable for component {k} "
                      f"(rank {rank} of {A.shape[1]}, residual {res:.3g})")
        omega[:, k] = w
        residual = max(residual, res)
    if return_info:
        return omega, {"residual": residual, "constraints": d * A.shape[1]}
    return omega


def gmls_weights(cloud, families, n, kind="kinematic", nodes=None):
    """Build GMLS weights over the kinematic or force families.

    Weights are always computed from physical bond vectors, even when the
    families were selected in parametric space.
    """
    indptr, indices = family_csr(families, kind)
    mask = select_nodes(families, nodes)
    indptr, indices = restrict_csr(indptr, indices, mask)
    d = cloud.d
    xi = np.empty((indices.size, d))
    raw = np.empty((indices.size, d))
    resid = np.full(cloud.N, np.nan)
    for i in np.flatnonzero(mask):
        sl = slice(indptr[i], indptr[i + 1])
        bonds = cloud.X[indices[sl]] - cloud.X[i]
        raw[sl], info = gmls_bond_weights(bonds, n, node=i, return_info=True)
        xi[sl] = bonds
        resid[i] = info["residual"]
    gamma = raw * xi / np.sum(xi * xi, axis=1)[:, None]
    return BondWeights("gmls", n, kind, indptr, indices, xi, raw, gamma, mask, resid)


def gmls_gradient(u, w, I=None):
    """``sum_J (u_J - u_I) xi^T omega / |xi|^2``; all nodes, or node ``I``."""
    u = np.asarray(u, dtype=float)
    if I is not None:
        sl = w.slice(I)
        xi = w.xi[sl]
        du = u[w.indices[sl]] - u[I]
        return du.T @ (xi * w.raw[sl] / np.sum(xi * xi, axis=1)[:, None])
    rows = w.rows
    du = u[w.indices] - u[rows]
    row = w.xi * w.raw / np.sum(w.xi * w.xi, axis=1)[:, None]
    H = np.zeros((w.N, u.shape[1], w.xi.shape[1]))
    np.add.at(H, rows, du[:, :, None] * row[:, None, :])
    return H


def gmls_divergence(P, w, I=None, zero_stress=None):
    """``sum_J (P_J - P_I) omega xi / |xi|^2``; free-surface ``J`` carry ``P = 0``."""
    P = np.asarray(P, dtype=float)
    if I is None:
        return apply_divergence(P, w, zero_stress)
    sl = w.slice(I)
    fam = w.indices[sl]
    PJ = P[fam].copy()
    if zero_stress is not None:
        PJ[np.asarray(zero_stress)[fam]] = 0.0
    xi = w.xi[sl]
    vec = w.raw[sl] * xi / np.sum(xi * xi, axis=1)[:, None]
    return np.einsum("mab,mb->a", PJ - P[I], vec)
