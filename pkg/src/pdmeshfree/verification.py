"""Exact solutions, body forces, error norms and convergence rates."""

import math
from dataclasses import dataclass, field

import numpy as np

from .bond_associated import bond_deformation_gradient
from .material import Material, first_pk_stress
from .weights import apply_gradient


@dataclass(frozen=True)
class ManufacturedConstants:
    A: float = 0.2
    B: float = -0.15
    C: float = -0.15
    D: float = 0.1


DEFAULT_CONSTANTS = ManufacturedConstants()


def manufactured_solution(x, y, consts=DEFAULT_CONSTANTS):
    """Trigonometric plus exponential displacement on ``[-1, 1]^2``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = 0.5 * np.pi
    e = np.exp(x) * np.exp(y)
    u1 = consts.A * np.sin(k * x) * np.cos(k * y) + consts.B * e
    u2 = consts.C * np.cos(k * x) * np.sin(k * y) + consts.D * e
    return u1, u2


def manufactured_gradient(x, y, consts=DEFAULT_CONSTANTS):
    """Displacement gradient ``du_a/dX_b`` as ``(..., 2, 2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = 0.5 * np.pi
    e = np.exp(x) * np.exp(y)
    sx, cx, sy, cy = np.sin(k * x), np.cos(k * x), np.sin(k * y), np.cos(k * y)
    H = np.empty(np.broadcast(x, y).shape + (2, 2))
    H[..., 0, 0] = consts.A * k * cx * cy + consts.B * e
    H[..., 0, 1] = -consts.A * k * sx * sy + consts.B * e
    H[..., 1, 0] = -consts.C * k * sx * sy + consts.D * e
    H[..., 1, 1] = consts.C * k * cx * cy + consts.D * e
    return H


def manufactured_body_force(x, y, consts=DEFAULT_CONSTANTS, material=None):
    """Body force ``b = -div P(u)`` that balances the manufactured field."""
    if material is None:
        material = Material(1e5, 0.3)
    lam, mu = material.lame
    A, B, C, D = consts.A, consts.B, consts.C, consts.D
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = 0.5 * np.pi
    q = np.pi**2 / 4.0
    e = np.exp(x) * np.exp(y)
    b1 = (q * ((A + C) * lam + (3 * A + C) * mu) * np.sin(k * x) * np.cos(k * y)
          - ((B + D) * lam + (3 * B + D) * mu) * e)
    b2 = (q * ((A + C) * lam + (A + 3 * C) * mu) * np.cos(k * x) * np.sin(k * y)
          - ((B + D) * lam + (B + 3 * D) * mu) * e)
    return b1, b2


def airy_coefficient(nu, plane="strain"):
    """Far-field stretch factor: ``1 - 2 nu`` (plane strain) or ``(1-nu)/(1+nu)``."""
    if plane == "strain":
        return 1.0 - 2.0 * nu
    if plane == "stress":
        return (1.0 - nu) / (1.0 + nu)
    raise ValueError(f"unknown plane condition {plane!r}")


def airy_hole_displacement(r, theta, T=1.0, a=1.0, material=None, plane="strain"):
    """Displacement around a traction-free hole under bi-axial tension ``T``.

    ``u_r = (T a / 2 mu) [c r/a + a/r]`` with ``c`` from
    :func:`airy_coefficient`. The plane-strain factor matches the Lame
    parameters of :class:`Material`; ``plane="stress"`` gives the
    ``(1-nu)/(1+nu)`` variant.
    """
    if material is None:
        material = Material(1e5, 0.3)
    r = np.asarray(r, dtype=float)
    if np.any(r < a * (1.0 - 1e-12)):
        raise ValueError("point lies inside the hole")
    mu = material.mu
    c = airy_coefficient(material.nu, plane)
    ur = T * a / (2.0 * mu) * (c * r / a + a / r)
    return ur * np.cos(theta), ur * np.sin(theta)


def airy_cartesian(X, T=1.0, a=1.0, material=None, plane="strain"):
    X = np.asarray(X, dtype=float)
    r = np.hypot(X[:, 0], X[:, 1])
    th = np.arctan2(X[:, 1], X[:, 0])
    u1, u2 = airy_hole_displacement(r, th, T, a, material, plane)
    return np.stack([u1, u2], axis=1)


def airy_gradient(X, T=1.0, a=1.0, material=None, plane="strain"):
    """Displacement gradient of the hole field, ``(N, 2, 2)``.

    ``u = (c r/a + a/r) (T a / 2 mu) e_r`` is ``k (c X / a + a X / r^2)``.
    """
    if material is None:
        material = Material(1e5, 0.3)
    X = np.asarray(X, dtype=float)
    k = T * a / (2.0 * material.mu)
    c = airy_coefficient(material.nu, plane)
    r2 = np.sum(X * X, axis=1)
    I = np.eye(2)
    return k * (c / a * I + a * (I / r2[:, None, None]
                                 - 2.0 * X[:, :, None] * X[:, None, :] / r2[:, None, None] ** 2))


# ---------------------------------------------------------------------------
# finite-difference oracles


def fd_stress_divergence(displacement, X, material, step=1e-4):
    """Central-difference ``div P(u)`` at points ``X`` for ``u(X) -> (N, 2)``.

    Second derivatives come from nested central differences of ``u``, so the
    result is independent of any closed-form body force. Round-off grows
    like ``eps |u| / step^2``, which is why the default step is 1e-4.
    """
    X = np.asarray(X, dtype=float)
    lam, mu = material.lame
    d = X.shape[1]

    def grad(P):
        G = np.empty((P.shape[0], d, d))
        for b in range(d):
            e = np.zeros(d)
            e[b] = step
            G[:, :, b] = (displacement(P + e) - displacement(P - e)) / (2 * step)
        return G

    def stress(P):
        H = grad(P)
        eps = 0.5 * (H + np.swapaxes(H, 1, 2))
        tr = np.trace(eps, axis1=1, axis2=2)
        return lam * tr[:, None, None] * np.eye(d) + 2 * mu * eps

    div = np.zeros((X.shape[0], d))
    for b in range(d):
        e = np.zeros(d)
        e[b] = step
        div += (stress(X + e)[:, :, b] - stress(X - e)[:, :, b]) / (2 * step)
    return div


def bond_gradient_errors(cloud, weights, displacement, gradient, nodes=None):
    """``|F_JI - F(X_J)|`` (Frobenius) for the kinematic bonds of ``nodes``.

    ``weights`` are kinematic bond weights; ``displacement`` and ``gradient``
    map ``(M, d)`` positions to ``(M, d)`` and ``(M, d, d)``. Measures how
    well the bond-level deformation gradient tracks the exact one at the
    neighbor end of each bond.
    """
    X = cloud.X
    d = cloud.d
    u = displacement(X)
    F = np.eye(d) + apply_gradient(u, weights)
    x = X + u
    I, J = weights.rows, weights.indices
    if nodes is not None:
        keep = np.zeros(cloud.N, dtype=bool)
        keep[nodes] = True
        m = keep[I]
        I, J = I[m], J[m]
    FJI = bond_deformation_gradient(F[I], F[J], x[I], x[J], X[I], X[J])
    exact = np.eye(d) + gradient(X[J])
    return np.linalg.norm(FJI - exact, axis=(1, 2))


# ---------------------------------------------------------------------------
# norms and rates


def rms_error(numeric, exact, nodes=None):
    """``sqrt(sum e_i^2 / N)`` over every component of the selected nodes.

    ``exact`` may be an array or a callable evaluated by the caller's
    convention (already-evaluated arrays are the common case).
    """
    numeric = np.asarray(numeric, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if nodes is not None:
        numeric = numeric[nodes]
        exact = exact[nodes]
    e = (numeric - exact).ravel()
    if e.size == 0:
        raise ValueError("no nodes to measure the error on")
    return float(np.sqrt(np.mean(e * e)))


def convergence_rate(errors, spacings):
    """Pairwise rates ``log(e_k/e_{k+1}) / log(h_k/h_{k+1})``.

    Undefined entries (non-positive errors) come back as ``nan``.
    """
    errors = np.asarray(errors, dtype=float)
    spacings = np.asarray(spacings, dtype=float)
    if errors.shape != spacings.shape or errors.size < 2:
        raise ValueError("need matching error and spacing lists of length >= 2")
    if np.any(np.diff(spacings) >= 0):
        raise ValueError("spacings must be strictly decreasing")
    rates = []
    for k in range(errors.size - 1):
        e0, e1 = errors[k], errors[k + 1]
        if e0 <= 0 or e1 <= 0 or not (np.isfinite(e0) and np.isfinite(e1)):
            rates.append(float("nan"))
        else:
            rates.append(math.log(e0 / e1) / math.log(spacings[k] / spacings[k + 1]))
    return rates


# ---------------------------------------------------------------------------
# benchmark descriptions


@dataclass
class BenchmarkCase:
    """A benchmark: exact field, body force, material and expectations."""

    name: str
    exact: object            # X (N, d) -> (N, d)
    body_force: object       # X (N, d) -> (N, d)
    material: Material
    exact_gradient: object = None
    expected_rates: dict = field(default_factory=dict)

    def check_consistency(self, X, step=1e-4):
        """Max relative mismatch between ``body_force`` and ``-div P(exact)``.

        The mismatch is scaled by the larger of ``max |b|`` and
        ``max |P| / extent``, so fields in equilibrium without body force
        (``b = 0``) are still measured against a meaningful size.
        """
        X = np.asarray(X, dtype=float)
        fd = -fd_stress_divergence(self.exact, X, self.material, step)
        b = self.body_force(X)
        H = np.empty((X.shape[0], X.shape[1], X.shape[1]))
        for k in range(X.shape[1]):
            e = np.zeros(X.shape[1])
            e[k] = step
            H[:, :, k] = (self.exact(X + e) - self.exact(X - e)) / (2 * step)
        P = first_pk_stress(0.5 * (H + np.swapaxes(H, 1, 2)), self.material)
        extent = max(float(np.max(np.ptp(X, axis=0))), step)
        scale = max(float(np.max(np.abs(b))), float(np.max(np.abs(P))) / extent, 1e-300)
        return float(np.max(np.abs(fd - b)) / scale)


def manufactured_case(material=None, consts=DEFAULT_CONSTANTS):
    material = material or Material(1e5, 0.3)

    def exact(X):
        return np.stack(manufactured_solution(X[:, 0], X[:, 1], consts), axis=1)

    def body(X):
        return np.stack(manufactured_body_force(X[:, 0], X[:, 1], consts, material), axis=1)

    def grad(X):
        return manufactured_gradient(X[:, 0], X[:, 1], consts)

    return BenchmarkCase("manufactured", exact, body, material, grad,
                         expected_rates={("ba_rk", 2): 1.7, ("ba_gmls", 2): 1.7})


def plate_hole_case(material=None, T=1.0, a=1.0, plane="strain"):
    material = material or Material(1e5, 0.3)

    def exact(X):
        return airy_cartesian(X, T, a, material, plane)

    def body(X):
        return np.zeros_like(np.asarray(X, dtype=float))

    def grad(X):
        return airy_gradient(X, T, a, material, plane)

    return BenchmarkCase("plate_hole", exact, body, material, grad,
                         expected_rates={("ba_rk", 2): 0.8, ("ba_gmls", 2): 0.8})


PATCH_GRADIENT = np.array([[2.0e-3, -1.0e-3], [0.5e-3, 1.5e-3]])
PATCH_SHIFT = np.array([1.0e-4, -2.0e-4])


def patch_test_case(material=None, gradient=PATCH_GRADIENT, shift=PATCH_SHIFT):
    material = material or Material(1e5, 0.3)

    def exact(X):
        return np.asarray(X, dtype=float) @ gradient.T + shift

    def body(X):
        return np.zeros_like(np.asarray(X, dtype=float))

    def grad(X):
        return np.broadcast_to(gradient, (len(X), 2, 2)).copy()

    return BenchmarkCase("patch_test", exact, body, material, grad)


@dataclass
class ConvergenceRow:
    case: str
    formulation: str
    order: int
    level: int
    h: float
    rms: float
    rate: float = float("nan")
    grid: str = ""
    delta: float = float("nan")
    seed: int = 0
    status: str = "ok"


@dataclass
class ConvergenceReport:
    rows: list = field(default_factory=list)

    def extend(self, other):
        self.rows.extend(other.rows)
        return self

    def series(self, formulation, order, grid=None, delta=None):
        rows = [r for r in self.rows if r.formulation == formulation and r.order == order
                and (grid is None or r.grid == grid)
                and (delta is None or math.isclose(r.delta, delta))
                and r.status == "ok"]
        return sorted(rows, key=lambda r: r.level)

    def final_rate(self, formulation, order, **kw):
        rows = self.series(formulation, order, **kw)
        return rows[-1].rate if len(rows) >= 2 else float("nan")

    def check(self, expected):
        """``{(formulation, order): (rate, minimum, passed)}`` for ``expected``."""
        out = {}
        for key, minimum in expected.items():
            rate = self.final_rate(*key)
            out[key] = (rate, minimum, bool(np.isfinite(rate) and rate >= minimum))
        return out
