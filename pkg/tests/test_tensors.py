"""Invariants of the small dense matrix kernels.

Plan:
  1. decompose: frozen example, reconstruction, orthogonality of the parts
  2. mat_exp / mat_log: agreement with the scipy oracle, roundtrip within
     1e-11, unimodularity of exponentials of trace-free arguments
  3. rotation_distance: zero exactly on rotations, invariance under left and
     right rotation within 1e-12, agreement with a direct minimization oracle
"""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

import plastlim as pl

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


def mat2(bound=3.0):
    elems = st.floats(-bound, bound, allow_nan=False, allow_infinity=False)
    return arrays(np.float64, (2, 2), elements=elems)


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def devsym(a, b):
    # orthonormal basis: E1 = diag(1,-1)/sqrt(2), E2 = offdiag(1,1)/sqrt(2)
    return np.array([[a, b], [b, -a]]) / np.sqrt(2.0)


class TestDecompose:
    def test_frozen_example(self):
        d = pl.decompose(np.array([[1.0, 2.0], [0.0, 3.0]]))
        np.testing.assert_allclose(d.sym, [[1.0, 1.0], [1.0, 3.0]])
        np.testing.assert_allclose(d.anti, [[0.0, 1.0], [-1.0, 0.0]])
        np.testing.assert_allclose(d.dev, [[-1.0, 1.0], [1.0, 1.0]])
        assert d.trace == 4.0

    @given(mat2())
    def test_reconstruction(self, a):
        d = pl.decompose(a)
        np.testing.assert_allclose(d.sym + d.anti, a, atol=1e-12)
        np.testing.assert_allclose(
            d.dev + (d.trace / 2.0) * np.eye(2), d.sym, atol=1e-12
        )

    @given(mat2())
    def test_parts_orthogonal(self, a):
        d = pl.decompose(a)
        assert abs(np.tensordot(d.sym, d.anti)) <= 1e-10
        assert abs(np.trace(d.dev)) <= 1e-12


class TestExpLog:
    @given(mat2(bound=1.0))
    def test_exp_matches_scipy(self, a):
        np.testing.assert_allclose(
            pl.mat_exp(a), scipy.linalg.expm(a), atol=1e-12, rtol=1e-12
        )

    @given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
    def test_log_matches_scipy(self, a, b):
        q = pl.mat_exp(devsym(a, b))
        oracle = np.real(scipy.linalg.logm(q))
        np.testing.assert_allclose(pl.mat_log(q), oracle, atol=1e-11)

    @given(mat2(bound=0.5))
    def test_roundtrip_exp_then_log(self, a):
        # keep arguments inside the principal branch
        a = 0.5 * a
        assert pl.frobenius(pl.mat_log(pl.mat_exp(a)) - a) <= 1e-11

    @given(st.floats(-0.55, 0.55), st.floats(-0.55, 0.55))
    def test_roundtrip_log_then_exp(self, a, b):
        q = pl.mat_exp(devsym(a, b))
        assert pl.frobenius(pl.mat_exp(pl.mat_log(q)) - q) <= 1e-11

    @given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
    def test_tracefree_exp_is_unimodular(self, a, b, c):
        zeta = np.array([[a, b], [c, -a]])
        assert abs(np.linalg.det(pl.mat_exp(zeta)) - 1.0) <= 1e-11

    def test_log_rejects_nonpositive_spectrum(self):
        with pytest.raises(pl.DomainError):
            pl.mat_log(np.array([[-1.0, 0.0], [0.0, 1.0]]))


class TestRotationDistance:
    @given(st.floats(-np.pi, np.pi))
    def test_zero_on_rotations(self, angle):
        assert pl.rotation_distance(rotation(angle)) <= 1e-12

    @given(mat2(bound=2.0), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
    def test_rotation_invariance(self, f, a1, a2):
        d0 = pl.rotation_distance(f)
        d1 = pl.rotation_distance(rotation(a1) @ f @ rotation(a2))
        assert abs(d0 - d1) <= 1e-12 * (1.0 + d0)

    def test_frozen_diagonal_example(self):
        # singular values 2 and 0.5: distance sqrt(1^2 + 0.5^2)
        f = np.diag([2.0, 0.5])
        assert abs(pl.rotation_distance(f) - np.sqrt(1.25)) <= 1e-12

    @given(mat2(bound=2.0))
    def test_direct_minimization_oracle(self, f):
        angles = np.linspace(-np.pi, np.pi, 3001)
        dists = [np.linalg.norm(f - rotation(t)) for t in angles]
        # the angle grid is 2e-3 fine; the true minimum sits at most
        # O(grid^2) * ||f|| below the sampled one
        assert pl.rotation_distance(f) <= min(dists) + 1e-5 * (1 + np.linalg.norm(f))
        assert pl.rotation_distance(f) >= min(dists) - 1e-5 * (1 + np.linalg.norm(f))
