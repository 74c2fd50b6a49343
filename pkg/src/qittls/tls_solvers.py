"""Total least squares solvers and error-bound evaluators.

All solvers work on the augmented matrix C = [A, b] of shape m x (n+1) and
partition a (possibly approximate) right singular basis as

    V = [[V11, v12],
         [v21, v22]]

with V11 of shape n x d and v21 of shape 1 x d. The truncated solution is
x = (V11^T)^+ v21^T; with d = n and an exact basis it reduces to the classical
x = -v12 / v22.
"""

import logging
import math
import time

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from .dense_linalg import as_dense, pinv, svd
from .errors import NongenericProblemError, RankDeficiencyError, TruncationRankError
from .models import BoundReport, Method, QiSvdParams, SubspaceBound, SvdFactors, TtlsSolution
from .qisvd import qisvd
from .sample_model import SampleMatrix

logger = logging.getLogger(__name__)

NONGENERIC_TOL = 1e-12
ZERO_SINGULAR_VALUE_TOL = 1e-8
DEFAULT_RTTLS_SKETCH = 20


def augment(A: ArrayLike, b: ArrayLike) -> np.ndarray:
    """C = [A, b]."""
    A_ = as_dense(A)
    b_ = np.asarray(b, dtype=np.float64).reshape(-1)
    if b_.shape[0] != A_.shape[0]:
        raise ValueError(f"b has {b_.shape[0]} entries but A has {A_.shape[0]} rows")
    return as_dense(np.column_stack([A_, b_]))


def _partition_solve(V: np.ndarray, d: int, rel_tol: float | None) -> tuple[np.ndarray, float, float]:
    """Returns (x, tau_d, tolerance) where tau_d is the smallest singular value of V11."""
    n = V.shape[0] - 1
    V11 = V[:n, :d]
    v21 = V[n, :d]
    tau = svd(V11).sigma
    tau_d = float(tau[-1]) if tau.size >= d else 0.0
    tol = (rel_tol if rel_tol is not None else max(V11.shape) * np.finfo(np.float64).eps) * float(tau[0])
    x = pinv(V11.T, rel_tol) @ v21
    return x, tau_d, tol


def tls_solve(A: ArrayLike, b: ArrayLike, tol: float = NONGENERIC_TOL) -> TtlsSolution:
    """Classical TLS solution x = -v12 / v22 from the full SVD of [A, b].

    Raises:
        NongenericProblemError: If sigma_n(A) <= sigma_{n+1}(C) or |v22| < tol.
    """
    start = time.perf_counter()
    A_ = as_dense(A)
    m, n = A_.shape
    if m < n:
        raise ValueError(f"TLS needs m >= n, got {m}x{n}")
    C = augment(A_, b)
    sigma_a_n = float(svd(A_).sigma[n - 1])
    factors = svd(C, full_v=True)
    sigma_c_n1 = float(factors.sigma[n]) if factors.sigma.shape[0] > n else 0.0
    if not sigma_a_n > sigma_c_n1:
        raise NongenericProblemError(
            f"genericity fails: sigma_n(A)={sigma_a_n:.6e} <= sigma_(n+1)(C)={sigma_c_n1:.6e}",
            sigma_a_n=sigma_a_n,
            sigma_c_n1=sigma_c_n1,
        )
    v = factors.V[:, n]
    v22 = float(v[n])
    if abs(v22) < tol:
        raise NongenericProblemError(
            f"|v22|={abs(v22):.3e} below tolerance {tol:.1e}", sigma_a_n=sigma_a_n, sigma_c_n1=sigma_c_n1
        )
    x = -v[:n] / v22
    return TtlsSolution(
        x=x, method=Method.TLS, d=n, v22=v22, generic=True, wall_time=time.perf_counter() - start
    )


def tls_correction(A: ArrayLike, b: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Minimal correction [E, f] = -C v v^T with v the last right singular vector.

    (A + E) x_TLS = b + f holds and ||[E, f]||_F = sigma_{n+1}.
    """
    C = augment(A, b)
    n = C.shape[1] - 1
    v = svd(C, full_v=True).V[:, n]
    correction = -np.outer(C @ v, v)
    return correction[:, :n], correction[:, n]


def ttls_solve(A: ArrayLike, b: ArrayLike, d: int, rel_tol: float | None = None) -> TtlsSolution:
    """Truncated TLS from the exact SVD of [A, b].

    A numerically rank-deficient V11 is logged and flagged; the pseudoinverse
    solution is still returned.
    """
    start = time.perf_counter()
    C = augment(A, b)
    n = C.shape[1] - 1
    if not 1 <= d <= n:
        raise ValueError(f"d must satisfy 1 <= d <= n={n}, got {d}")
    V = svd(C, full_v=True).V
    x, tau_d, tol = _partition_solve(V, d, rel_tol)
    deficient = tau_d <= tol
    if deficient:
        logger.warning("V11 block is numerically rank deficient (tau_d=%.3e) at d=%d", tau_d, d)
    return TtlsSolution(
        x=x,
        method=Method.TTLS,
        d=d,
        tau_d=tau_d,
        rank_deficient=deficient,
        wall_time=time.perf_counter() - start,
    )


def qittls_solve(
    C_model: SampleMatrix,
    params: QiSvdParams,
    d: int,
    rng: np.random.Generator,
    rel_tol: float | None = None,
    row_indices: np.ndarray | None = None,
    col_indices: np.ndarray | None = None,
) -> TtlsSolution:
    """Quantum-inspired TTLS: partition the sketched V_hat instead of the exact V.

    Raises:
        TruncationRankError: If d exceeds the retained sketch rank l.
        RankDeficiencyError: If the V11 block of V_hat is numerically singular.
    """
    start = time.perf_counter()
    approx = qisvd(C_model, params, rng, row_indices=row_indices, col_indices=col_indices)
    if d > approx.l:
        raise TruncationRankError(d, approx.l)
    x, tau_d, tol = _partition_solve(approx.V_hat, d, rel_tol)
    deficient = tau_d <= tol
    if deficient:
        raise RankDeficiencyError(tau_d, tol)
    return TtlsSolution(
        x=x,
        method=Method.QITTLS,
        d=d,
        tau_d=tau_d,
        l=approx.l,
        wall_time=time.perf_counter() - start,
    )


def rttls_solve(
    A: ArrayLike,
    b: ArrayLike,
    d: int,
    sketch_size: int = DEFAULT_RTTLS_SKETCH,
    rng: np.random.Generator | None = None,
    power_iterations: int = 1,
    rel_tol: float | None = None,
) -> TtlsSolution:
    """Randomized-SVD TTLS comparator (Gaussian range finder with power iterations)."""
    start = time.perf_counter()
    C = augment(A, b)
    m, n1 = C.shape
    if not 1 <= d <= sketch_size <= n1:
        raise ValueError(f"need 1 <= d <= sketch_size <= n+1, got d={d}, sketch_size={sketch_size}, n+1={n1}")
    if sketch_size > m:
        raise ValueError(f"sketch_size={sketch_size} exceeds the row count m={m}")
    rng = rng if rng is not None else np.random.default_rng()
    omega = rng.standard_normal((n1, sketch_size))
    Q, _ = scipy.linalg.qr(C @ omega, mode="economic")
    for _ in range(power_iterations):
        Q, _ = scipy.linalg.qr(C @ (C.T @ Q), mode="economic")
    V = svd(Q.T @ C).V
    x, tau_d, tol = _partition_solve(V, d, rel_tol)
    deficient = tau_d <= tol
    if deficient:
        logger.warning("RTTLS V11 block is numerically rank deficient (tau_d=%.3e)", tau_d)
    return TtlsSolution(
        x=x,
        method=Method.RTTLS,
        d=d,
        tau_d=tau_d,
        rank_deficient=deficient,
        wall_time=time.perf_counter() - start,
    )


def _padded_sigma(C_svd: SvdFactors) -> np.ndarray:
    n1 = C_svd.V.shape[0]
    sigma = np.zeros(n1)
    r = min(n1, C_svd.sigma.shape[0])
    sigma[:r] = C_svd.sigma[:r]
    return sigma


def subspace_error_bound(C_svd: SvdFactors, params: QiSvdParams, q: int) -> SubspaceBound:
    """epsilon_v = sqrt(40 k eps / eta) ||C||_F + xi with eta = min_{i<=q} (sigma_i^2 - sigma_{i+1}^2).

    A vanishing gap gives epsilon_v = inf and a failed hypothesis.
    """
    sigma = _padded_sigma(C_svd)
    n = sigma.shape[0] - 1
    if not 1 <= q <= n:
        raise ValueError(f"q must satisfy 1 <= q <= n={n}, got {q}")
    sq = sigma * sigma
    eta = float(np.min(sq[:q] - sq[1 : q + 1]))
    frob2 = float(sq.sum())
    # gaps at rounding level count as vanished
    if eta <= 16 * np.finfo(np.float64).eps * sq[0]:
        return SubspaceBound(epsilon_v=math.inf, eta=eta, q=q, hypothesis_ok=False)
    epsilon_v = math.sqrt(40 * params.k * params.epsilon / eta) * math.sqrt(frob2) + params.xi
    return SubspaceBound(
        epsilon_v=epsilon_v, eta=eta, q=q, hypothesis_ok=eta >= 20 * params.epsilon * frob2
    )


def solution_error_bound(
    C_svd: SvdFactors,
    d: int,
    epsilon_v: float,
    tau_d: float,
    b_norm: float,
    subspace: SubspaceBound | None = None,
    x_ttls_norm: float | None = None,
) -> BoundReport:
    """Right-hand side of the relative solution error bound.

    rhs = (sqrt(2) eps_v + tau_d + 1) / (tau_d - eps_v) * 2 sigma_1 / (||b|| - sigma_{d+1});
    infinite when tau_d <= eps_v or ||b|| <= sigma_{d+1}.
    """
    sigma = _padded_sigma(C_svd)
    sigma_1 = float(sigma[0])
    sigma_d1 = float(sigma[d]) if d < sigma.shape[0] else 0.0
    tau_ok = tau_d > epsilon_v
    b_ok = b_norm > sigma_d1
    x_nonzero = x_ttls_norm is None or x_ttls_norm != 0.0
    gap_ok = subspace.hypothesis_ok if subspace is not None else True
    if tau_ok and b_ok:
        rhs = (math.sqrt(2) * epsilon_v + tau_d + 1) / (tau_d - epsilon_v) * (2 * sigma_1 / (b_norm - sigma_d1))
    else:
        rhs = math.inf
    return BoundReport(
        epsilon_v=epsilon_v,
        gap_eta=subspace.eta if subspace is not None else None,
        gap_ok=gap_ok,
        tau_d=tau_d,
        tau_ok=tau_ok,
        b_ok=b_ok,
        x_nonzero=x_nonzero,
        hypothesis_ok=gap_ok and tau_ok and b_ok and x_nonzero,
        rhs=rhs,
    )


def singular_value_profile(A: ArrayLike, b: ArrayLike) -> np.ndarray:
    """All n+1 singular values of [A, b], zero-padded when m < n+1."""
    C = augment(A, b)
    sigma = np.zeros(C.shape[1])
    s = svd(C).sigma
    sigma[: s.shape[0]] = s
    return sigma


def numerical_rank(sigma: ArrayLike, rel_tol: float = ZERO_SINGULAR_VALUE_TOL) -> int:
    """Count singular values above rel_tol * sigma_1."""
    s = np.asarray(sigma, dtype=np.float64)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def subspace_distance(V_exact: ArrayLike, V_hat: ArrayLike) -> float:
    """||V_l - V_hat||_F after aligning the sign of each column pair."""
    X = as_dense(V_exact)
    Y = as_dense(V_hat)
    l = Y.shape[1]  # noqa: E741
    X = X[:, :l]
    signs = np.where(np.einsum("ij,ij->j", X, Y) < 0, -1.0, 1.0)
    return float(np.linalg.norm(X - Y * signs))
