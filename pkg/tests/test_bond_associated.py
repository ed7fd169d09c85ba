import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdmeshfree.bond_associated import (ba_divergence, bond_deformation_gradient, bond_stresses,
                                        nonhomogeneous_correction)
from pdmeshfree.material import Material, first_pk_stress, small_strain
from pdmeshfree.pointcloud import build_families, generate_uniform_grid
from pdmeshfree.solver import build_weights
from pdmeshfree.verification import manufactured_case, rms_error
from pdmeshfree.weights import apply_divergence, apply_gradient

matrices = st.lists(st.floats(-0.5, 0.5), min_size=4, max_size=4).map(
    lambda v: np.eye(2) + np.array(v).reshape(2, 2))
points = st.lists(st.floats(-2, 2), min_size=2, max_size=2).map(np.array)


@given(matrices, points, points)
def test_homogeneous_deformation_has_no_correction(F, XI, XJ):
    if np.linalg.norm(XJ - XI) < 1e-3:
        return
    dF = nonhomogeneous_correction(F, F, F @ XI, F @ XJ, XI, XJ)
    assert np.allclose(dF, 0.0, atol=1e-14)
    assert np.allclose(bond_deformation_gradient(F, F, F @ XI, F @ XJ, XI, XJ), F, atol=1e-14)


def test_correction_oracle():
    FI = np.eye(2)
    FJ = np.array([[1.1, 0.0], [0.0, 1.0]])
    XI, XJ = np.zeros(2), np.array([1.0, 0.0])
    xI, xJ = XI, np.array([1.3, 0.2])
    # mismatch = (1.3, 0.2) - 1.05 * (1, 0) = (0.25, 0.2), times xi^T/|xi|^2
    expected = FJ + np.array([[0.25, 0.0], [0.2, 0.0]])
    assert np.allclose(bond_deformation_gradient(FI, FJ, xI, xJ, XI, XJ), expected)


def test_coincident_points_rejected():
    with pytest.raises(ValueError):
        nonhomogeneous_correction(np.eye(2), np.eye(2), np.zeros(2), np.zeros(2),
                                  np.zeros(2), np.zeros(2))


@pytest.fixture(scope="module", params=["ba_rk", "ba_gmls"])
def grid_weights(request):
    h = 0.2
    g = generate_uniform_grid((-1, -1), (1, 1), h, 0.7)
    fam = build_families(g, 3.5 * h)
    return g, build_weights(g, fam, request.param, 2)


def test_affine_field_gives_uniform_stress(grid_weights, material):
    g, w = grid_weights
    A = np.array([[1e-3, 2e-3], [-5e-4, 4e-4]])
    u = g.X @ A.T
    F = np.eye(2) + apply_gradient(u, w.kinematic)
    P = first_pk_stress(small_strain(F), material)
    Pb = bond_stresses(F, g.X + u, g.X, w.force, material)
    assert np.allclose(Pb, first_pk_stress(small_strain(np.eye(2) + A), material), atol=1e-9)
    div = ba_divergence(P, Pb, w.force)[g.bulk]
    assert np.allclose(div, 0.0, atol=1e-9)


def test_reduces_to_base_divergence_bitwise(grid_weights, material):
    g, w = grid_weights
    u = 1e-3 * np.c_[np.sin(2 * g.X[:, 0]) * g.X[:, 1], g.X[:, 0] ** 3]
    F = np.eye(2) + apply_gradient(u, w.kinematic)
    P = first_pk_stress(small_strain(F), material)
    Pb = bond_stresses(F, g.X + u, g.X, w.force, material, drop_correction=True)
    assert np.array_equal(ba_divergence(P, Pb, w.force), apply_divergence(P, w.force))


def test_single_node_divergence(grid_weights, material):
    g, w = grid_weights
    u = 1e-3 * np.cos(g.X)
    F = np.eye(2) + apply_gradient(u, w.kinematic)
    P = first_pk_stress(small_strain(F), material)
    Pb = bond_stresses(F, g.X + u, g.X, w.force, material)
    i = g.bulk[17]
    assert np.allclose(ba_divergence(P, Pb, w.force, I=i), ba_divergence(P, Pb, w.force)[i])


def test_free_surface_bonds_carry_no_stress(material):
    h = 0.2
    g = generate_uniform_grid((-1, -1), (1, 1), h, 0.7)
    fam = build_families(g, 3.5 * h)
    w = build_weights(g, fam, "ba_rk", 1)
    fs = np.zeros(g.N, dtype=bool)
    fs[g.role != 0] = True
    F = np.broadcast_to(np.eye(2) * 1.01, (g.N, 2, 2)).copy()
    Pb = bond_stresses(F, 1.01 * g.X, g.X, w.force, material, free_surface=fs)
    assert np.all(Pb[fs[w.force.indices]] == 0.0)
    assert np.all(Pb[~fs[w.force.indices], 0, 0] > 0.0)


@pytest.mark.slow
def test_consistency_of_stabilized_divergence():
    """Residual of the exact field against -b shrinks at least linearly."""
    m = Material(1e5, 0.3)
    case = manufactured_case(m)
    errs = []
    for h in (0.2, 0.1, 0.05):
        g = generate_uniform_grid((-1, -1), (1, 1), h, 3.5 * h)
        fam = build_families(g, 3.5 * h)
        w = build_weights(g, fam, "ba_rk", 2)
        u = case.exact(g.X)
        F = np.eye(2) + apply_gradient(u, w.kinematic)
        P = first_pk_stress(small_strain(F), m)
        Pb = bond_stresses(F, g.X + u, g.X, w.force, m)
        div = ba_divergence(P, Pb, w.force)
        errs.append(rms_error(div, -case.body_force(g.X), g.bulk) / m.E)
    rates = np.log(np.array(errs[:-1]) / errs[1:]) / np.log(2)
    assert np.all(rates >= 1.0)
