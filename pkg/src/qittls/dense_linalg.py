"""Small dense kernels: SVD with a fixed sign convention, pseudoinverse, norms."""

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from .errors import NonFiniteInputError, SvdConvergenceError
from .models import SvdFactors

DenseMatrix = np.ndarray


def as_dense(M: ArrayLike) -> DenseMatrix:
    """Validate and convert to a finite float64 2-D array."""
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got {arr.ndim} dimensions")
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise NonFiniteInputError((i, j), float(arr[i, j]))
    return arr


def _fix_signs(U: np.ndarray, V: np.ndarray, r: int) -> None:
    # largest-magnitude entry of each V column is made nonnegative (first index on ties)
    if V.size == 0:
        return
    pivots = np.argmax(np.abs(V), axis=0)
    flip = V[pivots, np.arange(V.shape[1])] < 0
    V[:, flip] *= -1.0
    U[:, flip[:r]] *= -1.0


def svd(M: ArrayLike, full_v: bool = False) -> SvdFactors:
    """Thin SVD with descending singular values and deterministic signs.

    Args:
        M: Input matrix.
        full_v: Return a square right factor even when M is wide.

    Raises:
        SvdConvergenceError: If both LAPACK drivers fail.
    """
    A = as_dense(M)
    rows, cols = A.shape
    full = full_v and rows < cols
    try:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=full, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        try:
            U, s, Vt = scipy.linalg.svd(A, full_matrices=full, lapack_driver="gesvd", check_finite=False)
        except np.linalg.LinAlgError as e:
            raise SvdConvergenceError(f"SVD of {rows}x{cols} matrix did not converge") from e
    r = s.shape[0]
    U = np.ascontiguousarray(U[:, :r])
    V = np.ascontiguousarray(Vt.T)
    _fix_signs(U, V, r)
    return SvdFactors(U=U, sigma=s, V=V)


def pinv(M: ArrayLike, rel_tol: float | None = None) -> DenseMatrix:
    """Moore-Penrose pseudoinverse; singular values <= rel_tol * sigma_1 are dropped.

    A zero matrix maps to the zero matrix of transposed shape.
    """
    A = as_dense(M)
    if rel_tol is None:
        rel_tol = max(A.shape) * np.finfo(np.float64).eps
    if not 0 < rel_tol < 1:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    if A.size == 0 or not np.any(A):
        return np.zeros((A.shape[1], A.shape[0]))
    f = svd(A)
    keep = f.sigma > rel_tol * f.sigma[0]
    inv = np.zeros_like(f.sigma)
    inv[keep] = 1.0 / f.sigma[keep]
    return (f.V[:, : f.rank_count] * inv) @ f.U.T


def penrose_residuals(M: ArrayLike, M_pinv: ArrayLike) -> tuple[float, float, float, float]:
    """Frobenius residuals of the four Penrose identities."""
    A = as_dense(M)
    X = as_dense(M_pinv)
    AX = A @ X
    XA = X @ A
    return (
        float(np.linalg.norm(AX @ A - A)),
        float(np.linalg.norm(XA @ X - X)),
        float(np.linalg.norm(AX.T - AX)),
        float(np.linalg.norm(XA.T - XA)),
    )


def matmul(A: ArrayLike, B: ArrayLike) -> DenseMatrix:
    left = as_dense(A)
    right = as_dense(B)
    if left.shape[1] != right.shape[0]:
        raise ValueError(f"cannot multiply {left.shape} by {right.shape}")
    return left @ right


def transpose(A: ArrayLike) -> DenseMatrix:
    return np.ascontiguousarray(as_dense(A).T)


def frob_norm(A: ArrayLike) -> float:
    return float(np.linalg.norm(as_dense(A), "fro"))


def spectral_norm(A: ArrayLike) -> float:
    M = as_dense(A)
    if M.size == 0 or not np.any(M):
        return 0.0
    return float(svd(M).sigma[0])


def inf_norm_vec(x: ArrayLike) -> float:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    return float(np.max(np.abs(v))) if v.size else 0.0


def subspace_angle(X: ArrayLike, Y: ArrayLike) -> float:
    """Largest principal angle (radians) between the column spaces of X and Y."""
    angles = scipy.linalg.subspace_angles(as_dense(X), as_dense(Y))
    return float(np.max(angles))
