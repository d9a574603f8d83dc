import numpy as np
import pytest

from scnpower.numerics import (
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveDefiniteError,
    check_hermitian,
    hpd_inv_sqrt,
    hpd_solve,
    quad_form,
)


def random_hpd(rng, n, scale=1.0):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (x @ x.conj().T) + scale * n * np.eye(n)


class TestHpdSolve:
    def test_scaled_identity(self):
        rng = np.random.default_rng(0)
        h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        x = hpd_solve(2.5 * np.eye(5), h)
        assert np.allclose(x, h / 2.5, rtol=1e-14)

    def test_identity(self):
        b = np.array([1.0 + 2j, -3.0, 0.5j])
        assert np.allclose(hpd_solve(np.eye(3), b), b, rtol=0, atol=0)

    def test_residual_random_hpd(self):
        rng = np.random.default_rng(1)
        for n in (2, 4, 8, 16):
            a = random_hpd(rng, n)
            b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            x = hpd_solve(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_round_trip_up_to_16(self):
        rng = np.random.default_rng(2)
        for n in (3, 16):
            a = random_hpd(rng, n, scale=1e-6)
            x_true = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            x = hpd_solve(a, a @ x_true)
            assert np.linalg.norm(x - x_true) <= 1e-10 * np.linalg.norm(x_true)

    def test_error_types_are_distinct(self):
        a = np.eye(3)
        with pytest.raises(DimensionMismatchError):
            hpd_solve(a, np.ones(4, dtype=complex))
        with pytest.raises(NotPositiveDefiniteError):
            hpd_solve(-np.eye(3), np.ones(3, dtype=complex))
        with pytest.raises(NotHermitianError):
            hpd_solve(np.triu(np.ones((3, 3))) + 1j, np.ones(3, dtype=complex))


class TestHpdInvSqrt:
    def test_scaled_identity(self):
        assert np.allclose(hpd_inv_sqrt(4.0 * np.eye(3)), 0.5 * np.eye(3), rtol=1e-14)

    def test_diagonal(self):
        b = hpd_inv_sqrt(np.diag([1.0, 9.0]).astype(complex))
        assert np.allclose(b, np.diag([1.0, 1.0 / 3.0]), rtol=1e-14)

    def test_defining_identity(self):
        rng = np.random.default_rng(3)
        for n in (2, 5, 16):
            a = random_hpd(rng, n)
            b = hpd_inv_sqrt(a)
            assert np.linalg.norm(b @ a @ b - np.eye(n)) <= 1e-9
            assert np.allclose(b, b.conj().T, atol=1e-12)

    def test_commutes_with_input(self):
        rng = np.random.default_rng(4)
        a = random_hpd(rng, 6)
        b = hpd_inv_sqrt(a)
        comm = b @ a - a @ b
        assert np.linalg.norm(comm) <= 1e-9 * np.linalg.norm(a)

    def test_rejects_singular(self):
        with pytest.raises(NotPositiveDefiniteError):
            hpd_inv_sqrt(np.diag([1.0, 0.0]).astype(complex))


class TestQuadForm:
    def test_scaled_identity(self):
        rng = np.random.default_rng(5)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        sigma2 = 0.3
        assert quad_form(h, sigma2 * np.eye(4)) == pytest.approx(
            np.vdot(h, h).real / sigma2, rel=1e-12
        )

    def test_zero_vector(self):
        assert quad_form(np.zeros(3, dtype=complex), np.eye(3)) == 0.0

    def test_matches_dense_inverse(self):
        rng = np.random.default_rng(6)
        for n in (2, 8):
            a = random_hpd(rng, n, scale=1e-3)
            h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            expected = (h.conj() @ np.linalg.inv(a) @ h).real
            assert quad_form(h, a) == pytest.approx(expected, rel=1e-10)

    def test_nonnegative(self):
        rng = np.random.default_rng(7)
        a = random_hpd(rng, 5)
        for _ in range(20):
            h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
            assert quad_form(h, a) >= 0.0


class TestCheckHermitian:
    def test_accepts_hermitian(self):
        rng = np.random.default_rng(8)
        a = random_hpd(rng, 4)
        check_hermitian(a)

    def test_rejects_asymmetric(self):
        a = np.eye(3, dtype=complex)
        a[0, 1] = 1e-6
        with pytest.raises(NotHermitianError):
            check_hermitian(a)
