"""Reproducing-kernel non-local gradient and divergence.

The weight of bond (I, J) is

    Phi_IJ = alpha_IJ * S^T M_I^{-1} Q(xi_IJ),
    M_I    = sum_J alpha_IJ Q(xi_IJ) Q(xi_IJ)^T V_J,

where ``Q`` stacks the monomials of degree 1..n and ``S`` selects the
degree-one rows. This makes the discrete gradient exact for polynomials of
degree <= n.
"""

from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateNeighborhoodError
from .kernels import InfluenceFunction
from .weights import BondWeights, apply_divergence, family_csr, restrict_csr, select_nodes

MAX_CONDITION = 1e12


def basis_size(n, d):
    return comb(n + d, d) - 1


@lru_cache(maxsize=None)
def monomial_exponents(n, d):
    """Exponent tuples, degree-major; pure powers precede mixed terms.

    For d=3, n=2 this is x, y, z, x^2, y^2, z^2, xy, xz, yz.
    """
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported polynomial order {n}")
    if d < 1:
        raise ValueError("dimension must be positive")
    out = []
    for deg in range(1, n + 1):
        terms = []
        for combo in combinations_with_replacement(range(d), deg):
            e = [0] * d
            for k in combo:
                e[k] += 1
            terms.append(tuple(e))
        pure = [e for e in terms if max(e) == deg]
        mixed = sorted((e for e in terms if max(e) < deg), reverse=True)
        out.extend(pure + mixed)
    return tuple(out)


def monomial_basis_eval(xi, n, d=None):
    """Evaluate the monomial vector at ``xi`` (shape ``(d,)`` or ``(m, d)``)."""
    xi = np.asarray(xi, dtype=float)
    if d is None:
        d = xi.shape[-1]
    E = np.array(monomial_exponents(n, d))
    return np.prod(xi[..., None, :] ** E, axis=-1)


def gradient_selector(n, d):
    """Columns pick the degree-one monomials: ``(size, d)``."""
    S = np.zeros((basis_size(n, d), d))
    S[:d, :d] = np.eye(d)
    return S


def assemble_moment_matrix(xi, alpha, volumes, n):
    """``M = sum_J alpha_J Q_J Q_J^T V_J`` for the bonds ``xi`` of one node."""
    Q = monomial_basis_eval(xi, n)
    return (Q * (alpha * volumes)[:, None]).T @ Q


def rk_bond_weights(xi, alpha, volumes, n, node=None, return_condition=False):
    """RK weight vectors ``Phi_IJ`` (shape ``(m, d)``) for one family.

    Monomials are evaluated on ``xi / s`` with ``s`` the longest bond so that
    the moment matrix stays well scaled; the selector is rescaled by ``1/s``.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape[0] == 0:
        raise DegenerateNeighborhoodError(node, "empty family")
    s = float(np.max(np.linalg.norm(xi, axis=1)))
    d = xi.shape[1]
    Qs = monomial_basis_eval(xi / s, n)
    M = (Qs * (alpha * volumes)[:, None]).T @ Qs
    ev = np.linalg.eigvalsh(M)
    if ev[0] <= 0 or ev[-1] > MAX_CONDITION * ev[0]:
        cond = np.inf if ev[0] <= 0 else ev[-1] / ev[0]
        raise DegenerateNeighborhoodError(
            node, f"moment matrix singular (condition {cond:.3g}, order {n}, {xi.shape[0]} bonds)")
    C = sla.cho_solve(sla.cho_factor(M), Qs.T)  # (size, m)
    Phi = (alpha / s)[:, None] * C[:d].T
    if return_condition:
        return Phi, ev[-1] / ev[0]
    return Phi


def rk_weights(cloud, families, n, kind="kinematic", nodes=None, influence=None):
    """Build RK weights over the kinematic or force families.

    ``influence`` defaults to the cubic B-spline with the family horizon and
    is evaluated in the family metric (parametric distance when the
    families were built in parametric space); bond vectors and volumes are
    always physical.
    """
    if influence is None:
        influence = InfluenceFunction("cubic_bspline", families.delta)
    indptr, indices = family_csr(families, kind)
    mask = select_nodes(families, nodes)
    indptr, indices = restrict_csr(indptr, indices, mask)
    metric = cloud.P if families.space == "parametric" else cloud.X

    d = cloud.d
    nnz = indices.size
    xi = np.empty((nnz, d))
    raw = np.empty((nnz, d))
    cond = np.full(cloud.N, np.nan)
    for i in np.flatnonzero(mask):
        sl = slice(indptr[i], indptr[i + 1])
        fam = indices[sl]
        bonds = cloud.X[fam] - cloud.X[i]
        alpha = influence(metric[fam] - metric[i])
        raw[sl], cond[i] = rk_bond_weights(bonds, alpha, cloud.V[fam], n, node=i,
                                           return_condition=True)
        xi[sl] = bonds
    gamma = raw * cloud.V[indices][:, None]
    return BondWeights("rk", n, kind, indptr, indices, xi, raw, gamma, mask, cond)


def rk_gradient(u, w, volumes, I=None):
    """``sum_J (u_J - u_I) Phi_IJ^T V_J``; all nodes, or node ``I`` only."""
    u = np.asarray(u, dtype=float)
    if I is not None:
        sl = w.slice(I)
        fam = w.indices[sl]
        return ((u[fam] - u[I]) * volumes[fam][:, None]).T @ w.raw[sl]
    rows = w.rows
    du = (u[w.indices] - u[rows]) * volumes[w.indices][:, None]
    H = np.zeros((w.N, u.shape[1], w.raw.shape[1]))
    np.add.at(H, rows, du[:, :, None] * w.raw[:, None, :])
    return H


def rk_divergence(P, w, volumes, I=None, zero_stress=None):
    """``sum_J (P_J - P_I) Phi_IJ V_J``; free-surface ``J`` carry ``P = 0``."""
    P = np.asarray(P, dtype=float)
    if I is None:
        return apply_divergence(P, w, zero_stress)
    sl = w.slice(I)
    fam = w.indices[sl]
    PJ = P[fam].copy()
    if zero_stress is not None:
        PJ[np.asarray(zero_stress)[fam]] = 0.0
    return np.einsum("mab,mb->a", PJ - P[I], w.raw[sl] * volumes[fam][:, None])
