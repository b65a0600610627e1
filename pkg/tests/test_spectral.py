"""Unit and property tests for the generalized spectral algebra."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdpclab.spectral import (
    RANK_TOL,
    SpectralError,
    eig_sym,
    gen_det,
    gen_inv_sqrt,
    gen_inverse,
    gram_schmidt,
    rank,
    sqrt_psd,
)


def random_psd(rng, n, rank_=None):
    rank_ = n if rank_ is None else rank_
    b = rng.standard_normal((n, rank_))
    return b @ b.T


class TestEigSym:
    def test_reconstructs_input(self):
        rng = np.random.default_rng(0)
        a = random_psd(rng, 4)
        d = eig_sym(a)
        assert np.allclose(d.reconstruct(), a, atol=1e-10)

    def test_eigenvalues_descending(self):
        rng = np.random.default_rng(1)
        d = eig_sym(random_psd(rng, 5))
        assert np.all(np.diff(d.lam) <= 0.0)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(SpectralError):
            eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(SpectralError):
            eig_sym(np.zeros((2, 3)))

    def test_rejects_nonfinite(self):
        with pytest.raises(SpectralError):
            eig_sym(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestGenInverse:
    def test_full_rank_matches_inv(self):
        rng = np.random.default_rng(2)
        a = random_psd(rng, 4) + np.eye(4)
        assert np.allclose(gen_inverse(eig_sym(a)), np.linalg.inv(a), atol=1e-8)

    def test_rank_deficient_is_pseudoinverse(self):
        rng = np.random.default_rng(3)
        a = random_psd(rng, 5, rank_=2)
        assert np.allclose(gen_inverse(eig_sym(a)), np.linalg.pinv(a), atol=1e-8)

    def test_zero_matrix_maps_to_zero(self):
        assert np.allclose(gen_inverse(eig_sym(np.zeros((3, 3)))), 0.0)


class TestGenDet:
    def test_full_rank_matches_det(self):
        rng = np.random.default_rng(4)
        a = random_psd(rng, 3) + np.eye(3)
        assert gen_det(eig_sym(a)) == pytest.approx(np.linalg.det(a), rel=1e-10)

    def test_zero_matrix_gives_one(self):
        assert gen_det(eig_sym(np.zeros((4, 4)))) == 1.0

    def test_rank_deficient_is_product_of_positive_eigenvalues(self):
        d = eig_sym(np.diag([3.0, 2.0, 0.0]))
        assert gen_det(d) == pytest.approx(6.0)


class TestRank:
    def test_counts_positive_eigenvalues(self):
        assert rank(eig_sym(np.diag([2.0, 1.0, 0.0, 0.0]))) == 2

    def test_ignores_float_noise(self):
        assert rank(eig_sym(np.diag([1.0, RANK_TOL / 10.0]))) == 1


class TestSqrtPsd:
    def test_squares_back(self):
        rng = np.random.default_rng(5)
        a = random_psd(rng, 4)
        r = sqrt_psd(a)
        assert np.allclose(r @ r, a, atol=1e-8)
        assert np.allclose(r, r.T)

    def test_clamps_tiny_negative_eigenvalues(self):
        a = np.diag([1.0, -1e-14])
        r = sqrt_psd(a)
        assert np.all(np.isfinite(r))

    def test_rejects_indefinite(self):
        with pytest.raises(SpectralError):
            sqrt_psd(np.diag([1.0, -0.5]))


class TestGenInvSqrt:
    def test_inverse_square_root_on_full_rank(self):
        rng = np.random.default_rng(6)
        a = random_psd(rng, 3) + np.eye(3)
        r = gen_inv_sqrt(eig_sym(a))
        assert np.allclose(r @ a @ r, np.eye(3), atol=1e-8)

    def test_null_space_stays_null(self):
        r = gen_inv_sqrt(eig_sym(np.diag([4.0, 0.0])))
        assert r[1, 1] == 0.0
        assert r[0, 0] == pytest.approx(0.5)


class TestGramSchmidt:
    def test_output_is_orthonormal(self):
        rng = np.random.default_rng(7)
        q = gram_schmidt(rng.standard_normal((6, 6)))
        assert np.allclose(q.T @ q, np.eye(6), atol=1e-12)

    def test_first_column_is_normalized_input(self):
        rng = np.random.default_rng(8)
        m = rng.standard_normal((4, 4))
        q = gram_schmidt(m)
        expected = m[:, 0] / np.linalg.norm(m[:, 0])
        assert np.allclose(q[:, 0], expected)

    def test_rejects_dependent_columns(self):
        m = np.ones((3, 3))
        with pytest.raises(SpectralError):
            gram_schmidt(m)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=6))
def test_pinv_property(seed, n):
    """A A+ A = A for the generalized inverse on random PSD matrices."""
    rng = np.random.default_rng(seed)
    a = random_psd(rng, n, rank_=rng.integers(1, n + 1))
    ainv = gen_inverse(eig_sym(a))
    assert np.allclose(a @ ainv @ a, a, atol=1e-6 * max(1.0, np.abs(a).max()))


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=6))
def test_sqrt_property(seed, n):
    """sqrt(A) @ sqrt(A) = A on random PSD matrices of any rank."""
    rng = np.random.default_rng(seed)
    a = random_psd(rng, n, rank_=rng.integers(1, n + 1))
    r = sqrt_psd(a)
    assert np.allclose(r @ r, a, atol=1e-6 * max(1.0, np.abs(a).max()))
