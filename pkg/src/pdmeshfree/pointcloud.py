"""Nodal discretizations and neighbor families.

A :class:`PointCloud` stores nodes as parallel arrays (positions, volumes,
roles, optional parametric coordinates). Families are stored in CSR form in
a :class:`FamilyGraph`; each node has a *force* family (every neighbor) and
a *kinematic* family (free-surface neighbors removed).
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import PointCloudParseError, ValidationError

BULK, DIRICHLET, FREE_SURFACE = 0, 1, 2
ROLE_NAMES = ("bulk", "dirichlet", "free_surface")
_ROLE_CODES = {name: code for code, name in enumerate(ROLE_NAMES)}

# relative slack used for closed-ball and boundary classification
_TOL = 1e-9


@dataclass(frozen=True)
class Node:
    id: int
    X: np.ndarray
    V: float
    role: str
    P_coord: np.ndarray | None = None


@dataclass(frozen=True)
class Lattice:
    """Logical structure of a generated square grid, used for refinement."""

    lo: np.ndarray
    hi: np.ndarray
    h: float
    collar: float
    shape: tuple
    logical: np.ndarray  # (N, d) unperturbed positions, row-major over shape


@dataclass
class PointCloud:
    X: np.ndarray
    V: np.ndarray
    role: np.ndarray
    P: np.ndarray | None = None
    h_avg: float = float("nan")
    domain_tag: str = ""
    lattice: Lattice | None = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.V = np.asarray(self.V, dtype=float).reshape(-1)
        self.role = np.asarray(self.role, dtype=np.int8).reshape(-1)
        n = self.X.shape[0]
        if self.V.shape[0] != n or self.role.shape[0] != n:
            raise ValidationError("positions, volumes and roles differ in length")
        if np.any(self.V <= 0):
            bad = int(np.flatnonzero(self.V <= 0)[0])
            raise ValidationError(f"node {bad} has non-positive volume")
        if np.any((self.role < 0) | (self.role > FREE_SURFACE)):
            raise ValidationError("unknown node role code")
        if self.P is not None:
            self.P = np.asarray(self.P, dtype=float).reshape(n, -1)
        if math.isnan(self.h_avg):
            self.h_avg = average_spacing(self.V[self.role == BULK], self.d)

    @property
    def N(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def mask(self, role):
        return self.role == role

    @property
    def bulk(self):
        return np.flatnonzero(self.role == BULK)

    def node(self, i):
        p = None if self.P is None else self.P[i].copy()
        return Node(int(i), self.X[i].copy(), float(self.V[i]), ROLE_NAMES[self.role[i]], p)

    @property
    def nodes(self):
        return [self.node(i) for i in range(self.N)]

    def subset(self, keep):
        """Cloud restricted to the boolean/integer selection ``keep``."""
        keep = np.asarray(keep)
        P = None if self.P is None else self.P[keep]
        return PointCloud(self.X[keep], self.V[keep], self.role[keep], P,
                          domain_tag=self.domain_tag)


def average_spacing(volumes, d):
    """``(sum V / N)^(1/d)``, the element-area average spacing in 2D."""
    volumes = np.asarray(volumes, dtype=float)
    if volumes.size == 0:
        return float("nan")
    return float((volumes.sum() / volumes.size) ** (1.0 / d))


# ---------------------------------------------------------------------------
# generators


def generate_uniform_grid(lo, hi, h, collar=0.0):
    """Cell-centered grid on the box ``[lo, hi]`` with a Dirichlet collar.

    Collar nodes are the cell centers of the box extended by ``collar`` in
    every direction (the square collar keeps corner families complete).
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if h <= 0:
        raise ValueError("grid spacing must be positive")
    if collar < 0:
        raise ValueError("collar width must be non-negative")
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ValueError("need hi > lo componentwise")
    extent = (hi - lo) / h
    n = np.rint(extent).astype(int)
    if np.any(np.abs(extent - n) > 1e-8 * np.maximum(1.0, extent)):
        raise ValueError("box extent is not an integer multiple of h")
    m = int(math.floor(collar / h + 0.5 + _TOL))

    axes = [lo[k] + (np.arange(-m, n[k] + m) + 0.5) * h for k in range(lo.size)]
    idx = [np.arange(-m, n[k] + m) for k in range(lo.size)]
    X = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    I = np.stack([g.ravel() for g in np.meshgrid(*idx, indexing="ij")], axis=1)
    inside = np.all((I >= 0) & (I < n), axis=1)
    role = np.where(inside, BULK, DIRICHLET).astype(np.int8)
    V = np.full(X.shape[0], h ** lo.size)
    lattice = Lattice(lo, hi, float(h), float(collar), tuple(len(a) for a in axes), X.copy())
    return PointCloud(X, V, role, h_avg=float(h), domain_tag="uniform", lattice=lattice)


def _refine_axis(a, axis):
    """Insert midpoints between consecutive entries along ``axis``."""
    a = np.moveaxis(a, axis, 0)
    out = np.empty((2 * a.shape[0] - 1,) + a.shape[1:])
    out[0::2] = a
    out[1::2] = 0.5 * (a[:-1] + a[1:])
    return np.moveaxis(out, 0, axis)


def perturb_then_refine(cloud, sigma, levels, seed, collar_factor=None):
    """Perturbed base grid followed by ``levels`` midpoint refinements.

    Returns ``levels + 1`` clouds. Level 0 is ``cloud`` with every node moved
    by an i.i.d. normal offset of standard deviation ``sigma`` per
    coordinate. Each further level inserts midpoints of logical edges and
    cells of the previous level, so the node sets are nested. Roles follow
    the unperturbed logical positions: strictly inside the box is bulk, a
    collar of width ``collar_factor * h_k`` around it is Dirichlet, anything
    farther out is dropped.
    """
    if levels < 0:
        raise ValueError("levels must be non-negative")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    lat = cloud.lattice
    if lat is None:
        raise ValueError("perturb_then_refine needs a generated uniform grid")
    d = cloud.d
    if collar_factor is None:
        collar_factor = lat.collar / lat.h
    rng = np.random.default_rng(seed)
    logical = lat.logical.reshape(lat.shape + (d,))
    moved = logical + rng.normal(0.0, sigma, size=logical.shape)

    out = []
    for k in range(levels + 1):
        if k > 0:
            for ax in range(d):
                logical = _refine_axis(logical, ax)
                moved = _refine_axis(moved, ax)
        h = lat.h / 2**k
        L = logical.reshape(-1, d)
        Xk = moved.reshape(-1, d)
        tol = _TOL * h
        outside = np.max(np.maximum(np.maximum(lat.lo - L, L - lat.hi), 0.0), axis=1)
        interior = np.all((L > lat.lo + tol) & (L < lat.hi - tol), axis=1)
        keep = interior | (outside <= collar_factor * h + tol)
        role = np.where(interior, BULK, DIRICHLET).astype(np.int8)[keep]
        V = np.full(role.size, h**d)
        sub_lat = Lattice(lat.lo, lat.hi, h, collar_factor * h, logical.shape[:d], L[keep].copy())
        out.append(PointCloud(Xk[keep].copy(), V, role, h_avg=h,
                              domain_tag=f"perturbed-L{k}", lattice=sub_lat))
    return out


def _quad_area_centroid(p0, p1, p2, p3):
    """Shoelace area and centroid for stacks of quadrilaterals (CCW)."""
    pts = np.stack([p0, p1, p2, p3], axis=1)  # (m, 4, 2)
    x, y = pts[..., 0], pts[..., 1]
    xn, yn = np.roll(x, -1, axis=1), np.roll(y, -1, axis=1)
    cross = x * yn - xn * y
    A = 0.5 * cross.sum(axis=1)
    cx = ((x + xn) * cross).sum(axis=1) / (6.0 * A)
    cy = ((y + yn) * cross).sum(axis=1) / (6.0 * A)
    return A, np.stack([cx, cy], axis=1)


def generate_polar_grid(a, L, n_r, n_theta, collar_cells):
    """Quarter plate ``[0, L]^2`` minus a hole of radius ``a``.

    Cell vertices lie on rays from the origin, uniformly spaced in angle,
    and uniformly spaced along each ray between the circle and the square
    boundary. One node sits at each cell centroid with the cell area as its
    volume and the cell index (plus 1/2) as its parametric coordinate.

    The logical lattice is continued by ``collar_cells`` rings on every side:
    rings outside the square and across the two symmetry lines become
    Dirichlet nodes, rings inside the hole become free-surface nodes.
    """
    if not (L > a > 0):
        raise ValueError("need L > a > 0")
    if n_r < 2 or n_theta < 2:
        raise ValueError("need at least 2 cells per direction")
    c = int(collar_cells)
    if c < 0 or c > n_theta // 2:
        raise ValueError("collar_cells must lie in [0, n_theta/2]")

    i = np.arange(-c, n_r + c + 1)
    j = np.arange(-c, n_theta + c + 1)
    s = i / n_r
    theta = j * (0.5 * np.pi / n_theta)
    R = L / np.maximum(np.cos(theta), np.sin(theta))
    r = a + np.outer(s, R - a)  # (len(i), len(j))
    if np.any(r <= 0):
        raise ValueError("free-surface rings reach the origin; use fewer collar cells")
    VX = r * np.cos(theta)[None, :]
    VY = r * np.sin(theta)[None, :]
    V = np.stack([VX, VY], axis=-1)

    p0 = V[:-1, :-1].reshape(-1, 2)
    p1 = V[1:, :-1].reshape(-1, 2)
    p2 = V[1:, 1:].reshape(-1, 2)
    p3 = V[:-1, 1:].reshape(-1, 2)
    area, centroid = _quad_area_centroid(p0, p1, p2, p3)

    ci, cj = np.meshgrid(i[:-1], j[:-1], indexing="ij")
    ci, cj = ci.ravel(), cj.ravel()
    role = np.full(ci.size, BULK, dtype=np.int8)
    role[(ci >= n_r) | (cj < 0) | (cj >= n_theta)] = DIRICHLET
    role[ci < 0] = FREE_SURFACE
    P = np.stack([ci + 0.5, cj + 0.5], axis=1).astype(float)
    return PointCloud(centroid, area, role, P, domain_tag="polar")


# ---------------------------------------------------------------------------
# CSV interchange

_HEADER = ["id", "x", "y", "volume", "role"]
_HEADER_P = _HEADER + ["px", "py"]


def load_pointcloud(path):
    """Read a pointset CSV (``id,x,y,volume,role[,px,py]``)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise PointCloudParseError(1, "empty file") from None
        if header not in (_HEADER, _HEADER_P):
            raise PointCloudParseError(1, f"unexpected header {','.join(header)}")
        has_p = header == _HEADER_P
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise PointCloudParseError(lineno, f"expected {len(header)} fields, got {len(row)}")
            try:
                nid = int(row[0])
                vals = [float(c) for c in row[1:4]]
                pvals = [float(c) for c in row[5:7]] if has_p else None
            except ValueError as exc:
                raise PointCloudParseError(lineno, str(exc)) from None
            role = row[4].strip()
            if role not in _ROLE_CODES:
                raise PointCloudParseError(lineno, f"unknown role {role!r}")
            if vals[2] <= 0:
                raise ValidationError(f"line {lineno}: node {nid} has non-positive volume")
            rows.append((nid, vals, _ROLE_CODES[role], pvals))

    if not rows:
        raise ValidationError(f"{path}: no nodes")
    ids = np.array([r[0] for r in rows])
    uniq, counts = np.unique(ids, return_counts=True)
    if np.any(counts > 1):
        raise ValidationError(f"duplicate node id {int(uniq[counts > 1][0])}")
    order = np.argsort(ids)
    if not np.array_equal(ids[order], np.arange(ids.size)):
        raise ValidationError("node ids must be dense 0..N-1")
    rows = [rows[k] for k in order]
    X = np.array([r[1][:2] for r in rows])
    V = np.array([r[1][2] for r in rows])
    role = np.array([r[2] for r in rows], dtype=np.int8)
    P = np.array([r[3] for r in rows]) if has_p else None
    return PointCloud(X, V, role, P, domain_tag=f"file:{path.name}")


def save_pointcloud(cloud, path):
    path = Path(path)
    has_p = cloud.P is not None
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_HEADER_P if has_p else _HEADER)
        for i in range(cloud.N):
            row = [i, repr(float(cloud.X[i, 0])), repr(float(cloud.X[i, 1])),
                   repr(float(cloud.V[i])), ROLE_NAMES[cloud.role[i]]]
            if has_p:
                row += [repr(float(cloud.P[i, 0])), repr(float(cloud.P[i, 1]))]
            w.writerow(row)


# ---------------------------------------------------------------------------
# families


@dataclass
class FamilyGraph:
    """Symmetric closed-ball neighborhoods in CSR layout.

    ``indptr``/``indices`` hold the force families; ``kin_indptr``/
    ``kin_indices`` the kinematic ones. Bond vectors are always physical.
    """

    delta: float
    space: str
    X: np.ndarray
    role: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    kin_indptr: np.ndarray
    kin_indices: np.ndarray

    @property
    def N(self):
        return self.indptr.size - 1

    def force_family(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def kinematic_family(self, i):
        return self.kin_indices[self.kin_indptr[i]:self.kin_indptr[i + 1]]

    def bonds(self, i, kinematic=False):
        fam = self.kinematic_family(i) if kinematic else self.force_family(i)
        return self.X[fam] - self.X[i]

    def counts(self, kinematic=False):
        return np.diff(self.kin_indptr if kinematic else self.indptr)


def _csr_from_pairs(n, rows, cols):
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols.astype(np.int64)


def build_families(cloud, delta, space="physical"):
    """Neighbors with ``0 < dist <= delta`` in physical or parametric space."""
    if delta <= 0:
        raise ValueError("horizon must be positive")
    if space == "physical":
        coords = cloud.X
    elif space == "parametric":
        if cloud.P is None:
            raise ValueError("parametric families need parametric coordinates")
        coords = cloud.P
    else:
        raise ValueError(f"unknown family space {space!r}")

    tree = cKDTree(coords)
    pairs = tree.query_pairs(delta * (1.0 + _TOL), output_type="ndarray")
    if pairs.size == 0:
        pairs = np.empty((0, 2), dtype=np.int64)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    indptr, indices = _csr_from_pairs(cloud.N, rows, cols)

    fs = cloud.role == FREE_SURFACE
    keep = ~fs[rows] & ~fs[cols]
    kin_indptr, kin_indices = _csr_from_pairs(cloud.N, rows[keep], cols[keep])
    return FamilyGraph(float(delta), space, cloud.X, cloud.role,
                       indptr, indices, kin_indptr, kin_indices)
