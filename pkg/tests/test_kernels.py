import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdmeshfree.kernels import InfluenceFunction, cubic_bspline, inverse_square


def test_bspline_reference_values():
    assert cubic_bspline(0.0) == pytest.approx(2 / 3)
    assert cubic_bspline(0.5) == pytest.approx(1 / 6)
    assert cubic_bspline(1.0) == pytest.approx(0.0, abs=1e-15)
    assert cubic_bspline(1.3) == 0.0


def test_bspline_is_continuous_at_the_joint():
    eps = 1e-9
    assert cubic_bspline(0.5 - eps) == pytest.approx(cubic_bspline(0.5 + eps), abs=1e-8)


@given(st.floats(0.0, 0.999, allow_nan=False))
def test_bspline_positive_inside_support(q):
    assert cubic_bspline(q) > 0


@given(st.floats(0.0, 0.99), st.floats(0.0, 0.99))
def test_bspline_non_increasing(a, b):
    lo, hi = sorted((a, b))
    assert cubic_bspline(hi) <= cubic_bspline(lo) + 1e-15


def test_bspline_vectorized_matches_scalar():
    q = np.linspace(0, 1.2, 13)
    assert np.allclose(cubic_bspline(q), [cubic_bspline(v) for v in q])


def test_bspline_rejects_negative_distance():
    with pytest.raises(ValueError):
        cubic_bspline(-0.1)


def test_inverse_square():
    assert inverse_square([3.0, 4.0]) == pytest.approx(1 / 25)
    assert np.allclose(inverse_square(np.array([[1.0, 0.0], [0.0, 2.0]])), [1.0, 0.25])
    with pytest.raises(ValueError):
        inverse_square([0.0, 0.0])


def test_influence_function_scales_by_horizon():
    f = InfluenceFunction("cubic_bspline", 2.0)
    assert f(np.array([1.0, 0.0])) == pytest.approx(1 / 6)
    with pytest.raises(ValueError):
        InfluenceFunction("gaussian", 1.0)
    with pytest.raises(ValueError):
        InfluenceFunction("cubic_bspline", 0.0)
