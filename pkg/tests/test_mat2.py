import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocycle_lab.exceptions import InvalidInputError, SingularMatrixError
from cocycle_lab.mat2 import Mat2, condition, inverse, spectral_norm, spectral_norm_batch

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
mats = st.builds(Mat2, finite, finite, finite, finite)


@st.composite
def sl2_mats(draw):
    # Product of a diagonal, a shear and a rotation.
    s = draw(st.floats(0.05, 20))
    t = draw(st.floats(-10, 10))
    th = draw(st.floats(-math.pi, math.pi))
    c, sn = math.cos(th), math.sin(th)
    return Mat2.diag(s, 1 / s) @ Mat2(1, t, 0, 1) @ Mat2(c, -sn, sn, c)


# -- oracle examples ---------------------------------------------------------

def test_norm_identity():
    assert spectral_norm(Mat2.identity()) == 1.0


def test_norm_diagonal():
    assert spectral_norm(Mat2.diag(4, 0.25)) == pytest.approx(4, rel=1e-15)


def test_norm_shear_is_golden_ratio():
    assert spectral_norm(Mat2(1, 0, 1, 1)) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-14)


def test_norm_matches_svd():
    rng = np.random.default_rng(3)
    for arr in rng.normal(size=(200, 2, 2)) * 10:
        want = np.linalg.svd(arr, compute_uv=False)[0]
        assert spectral_norm(Mat2.from_array(arr)) == pytest.approx(want, rel=1e-13)


def test_inverse_examples():
    assert inverse(Mat2.identity()) == Mat2.identity()
    assert inverse(Mat2.diag(0.5, 2)) == Mat2.diag(2, 0.5)
    eps = 0.3
    assert inverse(Mat2(1, 0, eps, 1)) == Mat2(1, 0, -eps, 1)


def test_inverse_singular():
    with pytest.raises(SingularMatrixError):
        inverse(Mat2(1, 2, 2, 4))


def test_non_finite_rejected():
    with pytest.raises(InvalidInputError):
        Mat2(math.nan, 0, 0, 1)
    with pytest.raises(InvalidInputError):
        Mat2(math.inf, 0, 0, 1)


def test_batch_agrees_with_scalar():
    rng = np.random.default_rng(0)
    arr = rng.normal(size=(50, 2, 2))
    got = spectral_norm_batch(arr)
    want = [spectral_norm(Mat2.from_array(a)) for a in arr]
    np.testing.assert_allclose(got, want, rtol=1e-15)


# -- properties --------------------------------------------------------------

@given(mats)
def test_norm_dominates_vectors(m):
    n = spectral_norm(m)
    for th in np.linspace(0, math.pi, 17):
        x, y = m.apply((math.cos(th), math.sin(th)))
        assert math.hypot(x, y) <= n * (1 + 1e-12) + 1e-300


@given(mats, mats)
def test_submultiplicative(a, b):
    assert spectral_norm(a @ b) <= spectral_norm(a) * spectral_norm(b) * (1 + 1e-12) + 1e-12


@given(sl2_mats())
def test_sl2_inverse_has_same_norm(m):
    inv = inverse(m)
    assert spectral_norm(inv) == pytest.approx(spectral_norm(m), rel=1e-9)
    assert condition(m) >= 1 - 1e-12


@settings(max_examples=50)
@given(sl2_mats())
def test_inverse_roundtrip(m):
    prod = (m @ inverse(m)).to_array()
    scale = max(1.0, spectral_norm(m) ** 2)
    np.testing.assert_allclose(prod, np.eye(2), atol=1e-12 * scale)
