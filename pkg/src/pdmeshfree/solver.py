"""Assembly and direct solution of the static non-local equilibrium system.

The residual at a bulk node is ``div_h(P)_I + b_I``. Since the non-local
gradient, the bond-level gradient and the stress law are all linear in the
displacement, the force map is a sparse matrix ``K`` composed from

* ``G``  : nodal displacements -> nodal displacement gradients (kinematic weights)
* ``A_H``: nodal gradients -> nodal forces (stress law + force weights)
* ``A_u``: nodal displacements -> nodal forces (the bond-associated
  ``(u_J - u_I) xi^T / |xi|^2`` term; zero for the base models)

so that ``K = A_H @ G + A_u``. Dirichlet DOFs move to the right-hand side;
free-surface nodes never enter ``G`` and only remove stress from force sums.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .bond_associated import ba_divergence, bond_stresses
from .errors import AssemblyError, DegenerateNeighborhoodError, SolverError
from .gmls import gmls_divergence, gmls_gradient, gmls_weights
from .material import first_pk_stress, small_strain
from .pointcloud import BULK, DIRICHLET, FREE_SURFACE
from .rk import rk_divergence, rk_gradient, rk_weights
from .weights import apply_gradient

log = logging.getLogger(__name__)

FORMULATIONS = {
    "rk": ("rk", False),
    "gmls": ("gmls", False),
    "ba_rk": ("rk", True),
    "ba_gmls": ("gmls", True),
}

RESIDUAL_TOL = 1e-10


def parse_formulation(formulation):
    try:
        return FORMULATIONS[formulation]
    except KeyError:
        raise ValueError(f"unknown formulation {formulation!r}; "
                         f"expected one of {sorted(FORMULATIONS)}") from None


@dataclass
class OperatorWeights:
    formulation: str
    order: int
    kinematic: object
    force: object

    @property
    def bond_associated(self):
        return FORMULATIONS[self.formulation][1]


def kinematic_nodes(cloud, families):
    """Bulk nodes plus every non-free-surface node in a bulk force family."""
    bulk = cloud.role == BULK
    need = bulk.copy()
    rows = np.repeat(np.arange(cloud.N), np.diff(families.indptr))
    need[families.indices[bulk[rows]]] = True
    need &= cloud.role != FREE_SURFACE
    return np.flatnonzero(need)


def build_weights(cloud, families, formulation, order, influence=None):
    """Kinematic and force weights for ``formulation`` at polynomial ``order``.

    Kinematic weights are built for every node whose gradient enters a bulk
    force sum; force weights for bulk nodes only.
    """
    method, _ = parse_formulation(formulation)
    kin_nodes = kinematic_nodes(cloud, families)
    bulk = cloud.bulk
    if method == "rk":
        kin = rk_weights(cloud, families, order, "kinematic", kin_nodes, influence)
        frc = rk_weights(cloud, families, order, "force", bulk, influence)
    else:
        kin = gmls_weights(cloud, families, order, "kinematic", kin_nodes)
        frc = gmls_weights(cloud, families, order, "force", bulk)
    return OperatorWeights(formulation, order, kin, frc)


# ---------------------------------------------------------------------------
# sparse operators


def gradient_matrix(w, d):
    """``G`` with ``H.ravel() = G @ u.ravel()``; ``H`` is ``(N, d, d)`` row-major."""
    N = w.N
    rows = w.rows
    cols = w.indices
    nb = cols.size
    a = np.arange(d)
    c = np.arange(d)
    # entry (bond, a, c): row I*d*d + a*d + c, columns J*d + a (+) and I*d + a (-)
    r = (rows[:, None, None] * d * d + a[None, :, None] * d + c[None, None, :])
    vals = np.broadcast_to(w.gamma[:, None, :], (nb, d, d))
    colJ = np.broadcast_to(cols[:, None, None] * d + a[None, :, None], (nb, d, d))
    colI = np.broadcast_to(rows[:, None, None] * d + a[None, :, None], (nb, d, d))
    R = np.concatenate([r.ravel(), r.ravel()])
    Cc = np.concatenate([colJ.ravel(), colI.ravel()])
    V = np.concatenate([vals.ravel(), -vals.ravel()])
    return sps.csr_matrix((V, (R, Cc)), shape=(N * d * d, N * d))


def _block_coo(rows, cols, blocks, nrow_block, ncol_block):
    """COO triplets for a stack of dense blocks placed at (rows, cols)."""
    nb, p, q = blocks.shape
    R = rows[:, None, None] * nrow_block + np.arange(p)[None, :, None]
    C = cols[:, None, None] * ncol_block + np.arange(q)[None, None, :]
    R = np.broadcast_to(R, blocks.shape).ravel()
    C = np.broadcast_to(C, blocks.shape).ravel()
    return R, C, blocks.ravel()


def force_matrices(cloud, weights, material):
    """``(A_H, A_u)`` mapping nodal gradients / displacements to bulk forces."""
    d = cloud.d
    N = cloud.N
    w = weights.force
    rows, cols = w.rows, w.indices
    xi = w.xi
    fs = cloud.role[cols] == FREE_SURFACE
    C = material.stiffness(d).reshape(d, d, d * d)
    L = np.einsum("abk,mb->mak", C, w.gamma)  # (nb, d, d^2): H -> force via P gamma

    blocks_J = L.copy()
    blocks_I = -L.copy()
    A_u_J = np.zeros((cols.size, d, d))
    if weights.bond_associated:
        r2 = np.sum(xi * xi, axis=1)
        proj = xi[:, :, None] * xi[:, None, :] / r2[:, None, None]
        # right-multiplication by proj on a row-major d x d matrix
        Rproj = np.einsum("ap,mqb->mabpq", np.eye(d), proj).reshape(-1, d * d, d * d)
        LR = np.einsum("mak,mkl->mal", L, Rproj)
        blocks_J = L - 0.5 * LR
        blocks_I = -L - 0.5 * LR
        # (u_J - u_I) (xi / r2)^T, flattened -> columns p*d + q
        e = xi / r2[:, None]
        Eu = np.einsum("pr,mq->mpqr", np.eye(d), e).reshape(-1, d * d, d)
        A_u_J = np.einsum("mak,mkr->mar", L, Eu)
    # broken bonds: P_J (or P_JI) is zero, only the -P_I term survives
    blocks_J[fs] = 0.0
    if weights.bond_associated:
        blocks_I[fs] = -L[fs]
        A_u_J[fs] = 0.0

    R1, C1, V1 = _block_coo(rows, cols, blocks_J, d, d * d)
    R2, C2, V2 = _block_coo(rows, rows, blocks_I, d, d * d)
    A_H = sps.csr_matrix((np.concatenate([V1, V2]), (np.concatenate([R1, R2]), np.concatenate([C1, C2]))),
                         shape=(N * d, N * d * d))
    R3, C3, V3 = _block_coo(rows, cols, A_u_J, d, d)
    R4, C4, V4 = _block_coo(rows, rows, -A_u_J, d, d)
    A_u = sps.csr_matrix((np.concatenate([V3, V4]), (np.concatenate([R3, R4]), np.concatenate([C3, C4]))),
                         shape=(N * d, N * d))
    return A_H, A_u


def force_operator(cloud, weights, material):
    """Full ``K`` with ``div_h(P).ravel() = K @ u.ravel()`` (bulk rows)."""
    G = gradient_matrix(weights.kinematic, cloud.d)
    A_H, A_u = force_matrices(cloud, weights, material)
    return (A_H @ G + A_u).tocsr()


def internal_force(cloud, weights, material, u):
    """Matrix-free ``div_h(P)`` at bulk nodes (other rows are zero).

    Evaluates gradients, stresses and (bond-level) divergences explicitly;
    used to cross-check the assembled operator.
    """
    method, ba = parse_formulation(weights.formulation)
    u = np.asarray(u, dtype=float)
    kin, frc = weights.kinematic, weights.force
    if method == "rk":
        H = rk_gradient(u, kin, cloud.V)
    else:
        H = gmls_gradient(u, kin)
    d = cloud.d
    F = np.eye(d) + H
    P = first_pk_stress(small_strain(F), material)
    fs = cloud.role == FREE_SURFACE
    if ba:
        x = cloud.X + u
        P_b = bond_stresses(F, x, cloud.X, frc, material, free_surface=fs)
        out = ba_divergence(P, P_b, frc)
    elif method == "rk":
        out = rk_divergence(P, frc, cloud.V, zero_stress=fs)
    else:
        out = gmls_divergence(P, frc, zero_stress=fs)
    out[cloud.role != BULK] = 0.0
    return out


# ---------------------------------------------------------------------------
# system


@dataclass
class EquilibriumSystem:
    K: sps.csr_matrix
    rhs: np.ndarray
    K_full: sps.csr_matrix = field(repr=False)
    unknown_dofs: np.ndarray = field(repr=False)
    prescribed_dofs: np.ndarray = field(repr=False)
    u_prescribed: np.ndarray = field(repr=False)
    body: np.ndarray = field(repr=False)
    cloud: object = field(repr=False)
    weights: OperatorWeights = field(repr=False)
    material: object = field(repr=False)

    @property
    def formulation(self):
        return self.weights.formulation

    @property
    def order(self):
        return self.weights.order

    def residual(self, u):
        """``div_h(P) + b`` at bulk nodes for a full nodal field ``u``."""
        r = (self.K_full @ np.asarray(u, dtype=float).ravel()).reshape(self.cloud.N, -1)
        r += self.body
        r[self.cloud.role != BULK] = 0.0
        return r


@dataclass
class Solution:
    u: np.ndarray
    F: np.ndarray
    eps: np.ndarray
    P: np.ndarray
    residual_norm: float
    rhs_norm: float
    info: dict = field(default_factory=dict)


def assemble(cloud, families, weights, material, formulation=None,
             body_force=None, dirichlet_data=None):
    """Linear system over bulk DOFs (node-major, component-minor)."""
    if formulation is not None and formulation != weights.formulation:
        raise AssemblyError(f"weights were built for {weights.formulation}, not {formulation}")
    d = cloud.d
    N = cloud.N
    bulk = cloud.role == BULK
    missing = bulk & ~weights.force.computed
    if np.any(missing):
        raise AssemblyError(f"node {int(np.flatnonzero(missing)[0])} has no force weights")
    K_full = force_operator(cloud, weights, material)

    u_pres = np.zeros((N, d))
    dirichlet = cloud.role == DIRICHLET
    if dirichlet_data is not None and np.any(dirichlet):
        u_pres[dirichlet] = dirichlet_data(cloud.X[dirichlet])
    b = np.zeros((N, d))
    if body_force is not None:
        b[bulk] = body_force(cloud.X[bulk])

    dof = np.arange(N * d).reshape(N, d)
    unknown = dof[bulk].ravel()
    prescribed = dof[dirichlet].ravel()
    rows = K_full[unknown]
    K = rows[:, unknown].tocsr()
    rhs = -b[bulk].ravel() - rows[:, prescribed] @ u_pres[dirichlet].ravel()
    return EquilibriumSystem(K, rhs, K_full, unknown, prescribed, u_pres, b,
                             cloud, weights, material)


def solve(system):
    """Direct sparse solve with a residual check; recomputes nodal fields."""
    K = system.K.tocsc()
    rhs_norm = float(np.linalg.norm(system.rhs))
    try:
        lu = spla.splu(K)
        x = lu.solve(system.rhs)
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}") from None
    res = float(np.linalg.norm(K @ x - system.rhs))
    if not np.all(np.isfinite(x)) or res > RESIDUAL_TOL * max(rhs_norm, np.finfo(float).tiny):
        diag = np.abs(lu.U.diagonal())
        raise SolverError(f"residual {res:.3g} exceeds tolerance (rhs norm {rhs_norm:.3g}, "
                          f"pivot ratio {diag.min() / diag.max():.3g})")

    cloud = system.cloud
    d = cloud.d
    u = system.u_prescribed.copy().ravel()
    u[system.unknown_dofs] = x
    u = u.reshape(cloud.N, d)
    H = apply_gradient(u, system.weights.kinematic)
    F = np.eye(d) + H
    F[~system.weights.kinematic.computed] = np.nan
    eps = small_strain(F)
    P = first_pk_stress(eps, system.material)
    info = {
        "formulation": system.formulation,
        "order": system.order,
        "unknowns": int(x.size),
        "nnz": int(system.K.nnz),
        "fill_nnz": int(lu.L.nnz + lu.U.nnz),
    }
    log.debug("solved %s n=%d: %d unknowns, residual %.3g", system.formulation,
              system.order, x.size, res)
    return Solution(u, F, eps, P, res, rhs_norm, info)


def solve_problem(cloud, families, formulation, order, material,
                  body_force=None, dirichlet_data=None, influence=None):
    """Weights, assembly and solve in one call. Returns ``(solution, system)``."""
    weights = build_weights(cloud, families, formulation, order, influence)
    system = assemble(cloud, families, weights, material, formulation, body_force, dirichlet_data)
    return solve(system), system


__all__ = [
    "FORMULATIONS", "OperatorWeights", "EquilibriumSystem", "Solution",
    "build_weights", "assemble", "solve", "solve_problem", "force_operator",
    "internal_force", "gradient_matrix", "kinematic_nodes", "DegenerateNeighborhoodError",
]
