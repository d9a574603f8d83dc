"""Small linear-algebra kernels on Hermitian positive-definite matrices.

The solver never inverts a matrix explicitly; everything goes through a
Cholesky solve or an eigendecomposition, wrapped here with explicit error
types so callers can tell a bad matrix from a bad shape.
"""

import numpy as np
import scipy.linalg

HERMITIAN_ATOL = 1e-12
QUAD_FORM_IMAG_RTOL = 1e-12


class NumericsError(Exception):
    """A linear-algebra kernel failed or detected inconsistent input."""


class DimensionMismatchError(NumericsError):
    """Operand shapes do not line up."""


class NotHermitianError(NumericsError):
    """Matrix is not Hermitian within tolerance."""


class NotPositiveDefiniteError(NumericsError):
    """Matrix is Hermitian but not positive definite."""


def check_hermitian(a, atol=HERMITIAN_ATOL):
    """Validate that `a` is a square Hermitian matrix; returns it as ndarray."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.conj().T)) > atol:
        raise NotHermitianError(f"matrix is not Hermitian within {atol:g}")
    return a


def hpd_solve(a, b):
    """Solve A x = b for Hermitian positive-definite A via Cholesky.

    Raises DimensionMismatchError on shape problems and
    NotPositiveDefiniteError when the factorization fails.
    """
    a = check_hermitian(a)
    b = np.asarray(b)
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatchError(
            f"right-hand side of length {b.shape[0]} does not match matrix of size {a.shape[0]}"
        )
    try:
        factor = scipy.linalg.cho_factor(a, check_finite=False)
        return scipy.linalg.cho_solve(factor, b, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc


def hpd_inv_sqrt(a):
    """Inverse matrix square root of a Hermitian positive-definite matrix.

    Computed by eigendecomposition; the result B satisfies B A B = I and is
    re-symmetrized before returning.
    """
    a = check_hermitian(a)
    eigvals, eigvecs = np.linalg.eigh(a)
    if eigvals[0] <= 0:
        raise NotPositiveDefiniteError(
            f"smallest eigenvalue {eigvals[0]:.6e} is not positive"
        )
    b = (eigvecs * (1.0 / np.sqrt(eigvals))) @ eigvecs.conj().T
    return 0.5 * (b + b.conj().T)


def quad_form(h, a):
    """Real quadratic form h^H A^{-1} h for Hermitian positive-definite A.

    The imaginary residue of the computed value must be negligible relative
    to its magnitude; anything larger indicates a corrupted input and raises.
    """
    h = np.asarray(h)
    x = hpd_solve(a, h)
    val = np.vdot(h, x)
    tol = QUAD_FORM_IMAG_RTOL * max(1.0, abs(val.real))
    if abs(val.imag) > tol:
        raise NumericsError(
            f"quadratic form has imaginary residue {val.imag:.3e} (value {val.real:.3e})"
        )
    return float(max(val.real, 0.0))
