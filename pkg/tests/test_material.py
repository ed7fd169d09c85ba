import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdmeshfree.material import Material, first_pk_stress, lame_from_engineering, small_strain


def test_plane_strain_lame_values():
    lam, mu = lame_from_engineering(1e5, 0.3)
    assert lam == pytest.approx(1e5 * 0.3 / (1.3 * 0.4))
    assert mu == pytest.approx(1e5 / 2.6)


@pytest.mark.parametrize("E, nu", [(0.0, 0.3), (-1.0, 0.3), (1e5, 0.5), (1e5, -1.0), (1e5, 0.499)])
def test_invalid_parameters_rejected(E, nu):
    with pytest.raises(ValueError):
        lame_from_engineering(E, nu)


def test_near_incompressible_limit_allowed():
    lam, mu = Material(1e5, 0.495).lame
    assert lam / mu > 90


def test_identity_gives_zero_stress(material):
    eps = small_strain(np.eye(2))
    assert np.all(first_pk_stress(eps, material) == 0.0)


def test_uniaxial_strain_oracle(material):
    F = np.array([[1.001, 0.0], [0.0, 1.0]])
    P = first_pk_stress(small_strain(F), material)
    lam, mu = material.lame
    assert P[0, 0] == pytest.approx((lam + 2 * mu) * 1e-3)
    assert P[1, 1] == pytest.approx(lam * 1e-3)
    assert P[0, 1] == 0.0


@given(st.lists(st.floats(-1e-2, 1e-2), min_size=4, max_size=4))
def test_stiffness_matches_stress_law(h):
    m = Material(2.0e5, 0.25)
    H = np.array(h).reshape(2, 2)
    P = first_pk_stress(small_strain(np.eye(2) + H), m)
    assert np.allclose(m.stiffness(2) @ H.ravel(), P.ravel(), rtol=1e-12, atol=1e-9)
    assert np.allclose(P, P.T)


def test_rotation_part_is_stress_free(material):
    W = np.array([[0.0, 1e-3], [-1e-3, 0.0]])
    assert np.allclose(first_pk_stress(small_strain(np.eye(2) + W), material), 0.0)
