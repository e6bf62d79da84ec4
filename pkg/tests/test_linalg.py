import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gifsdim.linalg import (
    SingularMatrixError,
    abs_det,
    inf_norm,
    is_conformal,
    min_quasiregular_K,
    op_norm,
    singular_values,
)
from gifsdim.r3 import r3_matrix


def rotation_scale(a, b):
    return np.array([[a, -b], [b, a]])


def test_op_norm_examples():
    assert op_norm(np.diag([0.5, 0.25])) == 0.5
    assert op_norm([[3.0, 4.0], [0.0, 0.0]]) == pytest.approx(5.0, rel=1e-15)
    assert op_norm(r3_matrix(0.0)) == pytest.approx(0.5, rel=1e-15)


def test_inf_norm_examples():
    for d in range(1, 9):
        assert inf_norm(np.eye(d)) == pytest.approx(1.0, rel=1e-15)
    assert inf_norm(np.diag([2.0, 3.0])) == 2.0
    assert inf_norm(r3_matrix(0.1)) == pytest.approx(0.525, rel=1e-14)


def test_min_quasiregular_K_examples():
    assert min_quasiregular_K(0.37 * np.eye(3)) == pytest.approx(1.0, abs=1e-14)
    assert min_quasiregular_K(np.diag([0.5, 0.25])) == pytest.approx(2.0, rel=1e-14)
    # sigma_1 = sigma_2 = sqrt(1.11)/2, sigma_3 = 0.525; K = (sigma_1/sigma_3)^2
    ratio = math.sqrt(1.11) / 2 / 0.525
    assert min_quasiregular_K(r3_matrix(0.1)) == pytest.approx(ratio**2, rel=1e-13)
    assert min_quasiregular_K(r3_matrix(0.1)) == pytest.approx(1.00680, abs=1e-5)


def test_min_quasiregular_K_singular():
    with pytest.raises(SingularMatrixError, match="non-invertible derivative"):
        min_quasiregular_K([[1.0, 2.0], [2.0, 4.0]])


def test_is_conformal_examples():
    assert is_conformal(rotation_scale(0.3, 0.2), 1e-9)
    assert not is_conformal(np.diag([0.5, 0.25]), 1e-9)
    assert is_conformal(r3_matrix(0.0), 1e-9)
    with pytest.raises(ValueError):
        is_conformal(np.eye(2), 0.0)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        singular_values(np.ones((2, 3)))
    with pytest.raises(ValueError):
        singular_values(np.eye(9))
    with pytest.raises(ValueError):
        singular_values([[np.nan]])


@pytest.mark.parametrize("d", range(1, 9))
def test_singular_values_match_lapack(d):
    rng = np.random.default_rng(d)
    for _ in range(50):
        M = rng.normal(size=(d, d))
        ref = np.linalg.svd(M, compute_uv=False)
        np.testing.assert_allclose(singular_values(M), ref, rtol=1e-12, atol=1e-14 * ref[0])


def test_small_singular_value_keeps_relative_accuracy():
    # graded matrix: the normal-equations route would lose about 8 digits here
    U, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(4, 4)))
    V, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 4)))
    s = np.array([1.0, 1e-2, 1e-4, 1e-7])
    M = U @ np.diag(s) @ V.T
    np.testing.assert_allclose(singular_values(M), s, rtol=1e-8)


square = st.integers(1, 4).flatmap(
    lambda d: arrays(np.float64, (d, d), elements=st.floats(-3, 3, allow_nan=False, width=64))
)


@settings(max_examples=200, deadline=None)
@given(square)
def test_spectrum_invariants(M):
    sv = singular_values(M)
    assert np.all(np.diff(sv) <= 0)
    assert sv[-1] >= 0
    assert abs_det(M) == pytest.approx(abs(np.linalg.det(M)), rel=1e-9, abs=1e-12 * max(1, sv[0]) ** len(sv))


@settings(max_examples=200, deadline=None)
@given(square, st.integers(0, 2**32 - 1))
def test_norm_submultiplicativity(M, seed):
    N = np.random.default_rng(seed).normal(size=M.shape)
    assert op_norm(M @ N) <= op_norm(M) * op_norm(N) * (1 + 1e-9) + 1e-12


def _well_conditioned(rng, d):
    while True:
        M = rng.normal(size=(d, d))
        if np.linalg.cond(M) < 1e8:
            return M


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_inf_norm_supermultiplicative_and_inverse(d):
    rng = np.random.default_rng(100 + d)
    for _ in range(200):
        M, L = _well_conditioned(rng, d), _well_conditioned(rng, d)
        assert inf_norm(M @ L) >= inf_norm(M) * inf_norm(L) * (1 - 1e-9)
        assert inf_norm(L) * op_norm(np.linalg.inv(L)) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("d", [2, 3])
def test_inf_norm_over_super_unit_vectors(d):
    rng = np.random.default_rng(7)
    M = rng.normal(size=(d, d))
    lo = inf_norm(M)
    x = rng.normal(size=(5000, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= rng.uniform(1.0, 3.0, size=(5000, 1))
    assert np.min(np.linalg.norm(x @ M.T, axis=1)) >= lo - 1e-9


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_minimal_K_satisfies_both_inequalities(d):
    rng = np.random.default_rng(d)
    for _ in range(100):
        M = _well_conditioned(rng, d)
        K = min_quasiregular_K(M)
        det = abs(np.linalg.det(M))
        assert op_norm(M) ** d / K <= det * (1 + 1e-12)
        assert det <= K * inf_norm(M) ** d * (1 + 1e-12)
        # and it is the smallest such constant
        assert max(op_norm(M) ** d / det, det / inf_norm(M) ** d) == pytest.approx(K, rel=1e-9)
