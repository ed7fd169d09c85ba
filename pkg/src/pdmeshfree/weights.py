"""Per-bond operator weights shared by the RK and GMLS builders.

Both methods reduce to the same discrete form once built: a vector weight
``gamma_IJ`` per bond such that

    grad_h(u)_I = sum_J (u_J - u_I) gamma_IJ^T
    div_h(P)_I  = sum_J (P_J - P_I) gamma_IJ

``gamma`` is ``Phi_IJ V_J`` for RK and ``omega_IJ xi / |xi|^2`` for GMLS;
``raw`` keeps the method's own weight (``Phi`` or the diagonal of
``omega``) for dumps and diagnostics.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .pointcloud import FREE_SURFACE


@dataclass
class BondWeights:
    method: str
    order: int
    kind: str
    indptr: np.ndarray
    indices: np.ndarray
    xi: np.ndarray
    raw: np.ndarray
    gamma: np.ndarray
    computed: np.ndarray
    diagnostic: np.ndarray = field(repr=False, default=None)

    @property
    def N(self):
        return self.indptr.size - 1

    @property
    def rows(self):
        return np.repeat(np.arange(self.N), np.diff(self.indptr))

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def slice(self, i):
        return slice(self.indptr[i], self.indptr[i + 1])


def family_csr(families, kind):
    if kind == "kinematic":
        return families.kin_indptr, families.kin_indices
    if kind == "force":
        return families.indptr, families.indices
    raise ValueError(f"unknown family kind {kind!r}")


def select_nodes(families, nodes):
    """Boolean mask of nodes to build weights for (default: non free-surface)."""
    mask = np.zeros(families.N, dtype=bool)
    if nodes is None:
        mask[:] = families.role != FREE_SURFACE
    else:
        mask[np.asarray(nodes, dtype=np.int64)] = True
    return mask


def restrict_csr(indptr, indices, mask):
    """Drop the rows of unselected nodes, keeping the CSR over all nodes."""
    counts = np.diff(indptr) * mask
    new_ptr = np.zeros_like(indptr)
    np.cumsum(counts, out=new_ptr[1:])
    take = np.repeat(mask, np.diff(indptr))
    return new_ptr, indices[take]


def apply_gradient(u, w):
    """``sum_J (u_J - u_I) gamma_IJ^T`` for every node; ``(N, d, d)``."""
    u = np.asarray(u, dtype=float)
    rows = w.rows
    du = u[w.indices] - u[rows]
    H = np.zeros((w.N, u.shape[1], w.gamma.shape[1]))
    np.add.at(H, rows, du[:, :, None] * w.gamma[:, None, :])
    return H


def apply_divergence(P, w, zero_stress=None):
    """``sum_J (P_J - P_I) gamma_IJ`` with ``P_J = 0`` where ``zero_stress``."""
    P = np.asarray(P, dtype=float)
    rows = w.rows
    PJ = P[w.indices].copy()
    if zero_stress is not None:
        PJ[np.asarray(zero_stress)[w.indices]] = 0.0
    dP = PJ - P[rows]
    out = np.zeros((w.N, P.shape[1]))
    np.add.at(out, rows, np.einsum("mab,mb->ma", dP, w.gamma))
    return out


def dump_weights(path, weights_by_kind):
    """Write ``node,neighbor,kind,method,order,w1..wd,g1..gd`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        first = next(iter(weights_by_kind.values()))
        d = first.raw.shape[1]
        out.writerow(["node", "neighbor", "kind", "method", "order"]
                     + [f"w{k + 1}" for k in range(d)] + [f"g{k + 1}" for k in range(d)])
        for kind, w in weights_by_kind.items():
            rows = w.rows
            for b in range(w.indices.size):
                out.writerow([int(rows[b]), int(w.indices[b]), kind, w.method, w.order]
                             + [repr(float(v)) for v in w.raw[b]]
                             + [repr(float(v)) for v in w.gamma[b]])
