"""Dense complex linear algebra helpers.

Thin wrappers around LAPACK (through numpy/scipy) that add the input checks
and error types used throughout the package.
"""
import warnings

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence, NotHermitian, NotPositiveDefinite, SingularMatrix

PIVOT_RTOL = 1e-14


def _square(M):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def hermitian_eigenvalues(M, tol=None):
    """Ascending eigenvalues of a Hermitian matrix.

    ``tol`` bounds max |M_ij - conj(M_ji)|; by default it is 1e-12 times the
    largest entry magnitude. The symmetrised matrix (M + M^H)/2 is used.
    """
    M = _square(M)
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.max(np.abs(M))))
    asym = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    if asym > tol:
        raise NotHermitian(f"asymmetry {asym:.3g} exceeds tol {tol:.3g}")
    try:
        return np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def lu_det_and_solve(M, rhs=None):
    """Determinant via partial-pivot LU and, optionally, the solution of M x = rhs.

    Raises SingularMatrix when a pivot falls below 1e-14 times the largest
    row norm of M.
    """
    M = _square(M)
    n = M.shape[0]
    dtype = np.result_type(M.dtype, np.float64)
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrix
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M.astype(dtype), check_finite=False)
    scale = float(np.max(np.linalg.norm(M, axis=1))) if n else 0.0
    d = np.diag(lu)
    small = np.abs(d) < PIVOT_RTOL * scale
    if scale == 0.0 or np.any(small):
        k = int(np.argmax(small)) if scale else 0
        raise SingularMatrix(f"pivot {k} has magnitude {abs(d[k]):.3g} (row scale {scale:.3g})")
    nswaps = int(np.count_nonzero(piv != np.arange(n)))
    det = np.prod(d) * (-1.0) ** nswaps
    x = None
    if rhs is not None:
        x = sla.lu_solve((lu, piv), np.asarray(rhs, dtype=np.result_type(dtype, np.asarray(rhs).dtype)),
                         check_finite=False)
    return det, x


def cholesky_sqrt(S):
    """Lower-triangular L with L L^H = S."""
    S = _square(S)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.conj().T)) > tol:
        raise NotHermitian("covariance matrix is not Hermitian")
    try:
        L = np.linalg.cholesky(0.5 * (S + S.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return np.tril(L)
