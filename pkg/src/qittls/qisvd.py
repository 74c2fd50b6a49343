"""Two-stage length-squared sketch of the right singular subspace of C = [A, b].

Pipeline: derive the (xi, alpha, theta, p) cascade, sample p rows of C into S,
sample p columns of S into W, take the SVD of W, pick the truncation rank l and
assemble V_hat = S^T U_bar Sigma_bar^{-1}.

Cost model per run with a p x p sketch: O(p log m) row draws, O(p log n) column
draws, O(p * (n+1)) to materialize S, O(p^3) for the sketch SVD and
O(p * (n+1) * l) to assemble V_hat.
"""

import logging
import math
from fractions import Fraction
from typing import Literal

import numpy as np

from .dense_linalg import as_dense, spectral_norm, svd
from .errors import DegenerateSketchError, EmptySupportError, InfeasibleSketchError
from .models import ApproxRightSingular, OrthogonalityReport, QiSvdParams, SketchState
from .sample_model import SampleMatrix

logger = logging.getLogger(__name__)

ALGORITHM_ALPHA_DENOMINATOR = 100.0
ANALYSIS_ALPHA_DENOMINATOR = 16.0
DEFAULT_FEASIBILITY_CAP = 10**7


def derive_params(
    epsilon: float,
    k: int,
    delta: float,
    p_override: int | None = None,
    alpha_denominator: float = ALGORITHM_ALPHA_DENOMINATOR,
    feasibility_cap: int = DEFAULT_FEASIBILITY_CAP,
) -> QiSvdParams:
    """Compute xi = eps/(2 eps + 4), alpha = xi/(c k^4), theta = alpha xi, p = ceil(1/(theta^2 delta)).

    The cascade is evaluated in exact rational arithmetic on the float inputs, so
    p_theory is the exact ceiling. ``alpha_denominator`` is c: 100 in the stated
    algorithm, 16 in the accuracy analysis.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if p_override is not None and p_override < 1:
        raise ValueError(f"p_override must be at least 1, got {p_override}")

    eps = Fraction(epsilon)
    xi = eps / (2 * eps + 4)
    alpha = xi / (Fraction(alpha_denominator) * k**4)
    theta = alpha * xi
    p_theory = math.ceil(1 / (theta * theta * Fraction(delta)))

    warnings: list[str] = []
    if p_theory > feasibility_cap:
        message = (
            f"theoretical sketch size p ({len(str(p_theory))} digits) exceeds feasibility cap {feasibility_cap}"
        )
        warnings.append(message)
        if p_override is None:
            logger.warning("%s; pass p_override to use a practical size", message)
    return QiSvdParams(
        epsilon=epsilon,
        k=k,
        delta=delta,
        xi=float(xi),
        alpha=float(alpha),
        theta=float(theta),
        p_theory=p_theory,
        p_used=p_override if p_override is not None else p_theory,
        p_overridden=p_override is not None,
        feasibility_cap=feasibility_cap,
        alpha_denominator=alpha_denominator,
        warnings=warnings,
    )


def sample_rows(
    C: SampleMatrix,
    p: int,
    rng: np.random.Generator,
    indices: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw p rows i_t with P_i = ||C_i||^2 / ||C||_F^2 and scale them by 1/sqrt(p P_i).

    Returns:
        (row_indices, row_probs, S) where row_probs[t] = P_{i_t}.
    """
    if C.frob2() <= 0.0:
        raise EmptySupportError("cannot sketch a zero matrix")
    if indices is None:
        row_indices = C.sample_rows(rng, p)
    else:
        row_indices = np.asarray(indices, dtype=np.int64)
        p = row_indices.shape[0]
    probs = C.row_probabilities()[row_indices]
    if np.any(probs <= 0):
        raise EmptySupportError("forced row index selects a zero row")
    S = C.rows(row_indices) / np.sqrt(p * probs)[:, np.newaxis]
    return row_indices, probs, S


def column_probabilities(S: np.ndarray) -> np.ndarray:
    """P'_j = ||S_{:,j}||^2 / ||S||_F^2."""
    col2 = np.einsum("ij,ij->j", S, S)
    total = col2.sum()
    if total <= 0:
        raise EmptySupportError("cannot sample columns of a zero sketch")
    return col2 / total


def column_probabilities_by_definition(C: SampleMatrix, row_indices: np.ndarray) -> np.ndarray:
    """P'_j = (1/p) sum_t |C_{i_t, j}|^2 / ||C_{i_t,:}||^2."""
    rows = C.rows(np.asarray(row_indices))
    norms = np.einsum("ij,ij->i", rows, rows)
    return ((rows * rows) / norms[:, np.newaxis]).mean(axis=0)


def sample_cols(
    C: SampleMatrix,
    row_indices: np.ndarray,
    S: np.ndarray,
    p: int,
    rng: np.random.Generator,
    indices: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw p columns j_t from P'_j and scale S_{:,j_t} by 1/sqrt(p P'_{j_t}).

    A draw picks t uniformly in [p] and then j from the row distribution of
    C_{i_t,:}; the mixture equals P'_j.

    Returns:
        (col_indices, col_probs, W) with W of shape p x p.
    """
    col_probs_all = column_probabilities(S)
    if indices is None:
        picks = rng.integers(0, row_indices.shape[0], size=p)
        col_indices = np.array([C.sample_in_row(int(row_indices[t]), rng) for t in picks], dtype=np.int64)
    else:
        col_indices = np.asarray(indices, dtype=np.int64)
        p = col_indices.shape[0]
    probs = col_probs_all[col_indices]
    if np.any(probs <= 0):
        raise EmptySupportError("forced column index selects a zero column of S")
    W = S[:, col_indices] / np.sqrt(p * probs)[np.newaxis, :]
    return col_indices, probs, W


def truncation_rank(sigma_bar_all: np.ndarray, k: int, alpha: float, frob2_W: float) -> int:
    """l = min(k, max{t : sigma_bar_t^2 >= alpha ||W||_F^2})."""
    sigma = np.asarray(sigma_bar_all, dtype=np.float64)
    if sigma.size > 1 and np.any(np.diff(sigma) > 0):
        raise ValueError("sketch singular values must be in descending order")
    threshold = alpha * frob2_W
    qualifying = np.flatnonzero(sigma * sigma >= threshold)
    if qualifying.size == 0:
        raise DegenerateSketchError(
            f"no sketch singular value satisfies sigma^2 >= {threshold:.3e}"
        )
    return min(k, int(qualifying[-1]) + 1)


def assemble_v_hat(
    S: np.ndarray,
    U_bar: np.ndarray,
    sigma_bar: np.ndarray,
    l: int,  # noqa: E741
    xi: float | None = None,
    sigma_bar_all: np.ndarray | None = None,
    sketch: SketchState | None = None,
) -> ApproxRightSingular:
    """V_hat = S^T U_bar[:, :l] diag(sigma_bar[:l])^{-1}."""
    retained = np.asarray(sigma_bar[:l], dtype=np.float64)
    if retained.shape[0] < l:
        raise ValueError(f"requested l={l} but only {retained.shape[0]} singular values given")
    if np.any(retained <= 0):
        raise DegenerateSketchError("cannot invert a zero retained sketch singular value")
    V_hat = (S.T @ U_bar[:, :l]) / retained
    gram = V_hat.T @ V_hat
    deviation = float(np.linalg.norm(gram - np.eye(l)))
    return ApproxRightSingular(
        V_hat=V_hat,
        sigma_bar=retained,
        sigma_bar_all=np.asarray(sigma_bar_all if sigma_bar_all is not None else sigma_bar),
        l=l,
        orthogonality_frob=deviation,
        xi=xi,
        sketch=sketch,
    )


def qisvd(
    C: SampleMatrix,
    params: QiSvdParams,
    rng: np.random.Generator,
    row_indices: np.ndarray | None = None,
    col_indices: np.ndarray | None = None,
) -> ApproxRightSingular:
    """Approximate the dominant right singular subspace of C.

    Args:
        C: Sample model of the augmented matrix.
        params: Parameter cascade; ``p_used`` is the sketch size.
        rng: Random stream; the output is a pure function of (C, params, seed).
        row_indices: Force the row draws (exhaustive-sample oracles).
        col_indices: Force the column draws.

    Raises:
        InfeasibleSketchError: ``p_used`` is the theoretical size, above the cap.
    """
    p = params.p_used
    if row_indices is None and not params.p_overridden and p > params.feasibility_cap:
        raise InfeasibleSketchError(p, params.feasibility_cap)
    rows, row_probs, S = sample_rows(C, p, rng, indices=row_indices)
    cols, col_probs, W = sample_cols(C, rows, S, p, rng, indices=col_indices)
    factors = svd(W)
    frob2_W = float(np.einsum("ij,ij->", W, W))
    l = truncation_rank(factors.sigma, params.k, params.alpha, frob2_W)  # noqa: E741
    sketch = SketchState(
        row_indices=rows, row_probs=row_probs, S=S, col_indices=cols, col_probs=col_probs, W=W
    )
    logger.debug("sketch %dx%d retained l=%d of k=%d", W.shape[0], W.shape[1], l, params.k)
    return assemble_v_hat(
        S, factors.U, factors.sigma, l, xi=params.xi, sigma_bar_all=factors.sigma, sketch=sketch
    )


def vhat_orthogonality_report(V_hat: np.ndarray) -> OrthogonalityReport:
    """||V^T V - I||_2, ||V^T V - I||_F, ||V||_F^2 and ||V||_2."""
    V = as_dense(V_hat)
    deviation = V.T @ V - np.eye(V.shape[1])
    return OrthogonalityReport(
        spectral_deviation=spectral_norm(deviation),
        frobenius_deviation=float(np.linalg.norm(deviation)),
        frobenius_norm2=float(np.einsum("ij,ij->", V, V)),
        spectral_norm=spectral_norm(V),
    )


def sketch_gram_deviation(
    M: SampleMatrix,
    p: int,
    rng: np.random.Generator,
    form: Literal["rows", "cols"] = "rows",
) -> float:
    """Relative deviation ||M^T M - N^T N||_F / ||M||_F^2 (rows) or ||M M^T - N N^T||_F / ||M||_F^2 (cols).

    N holds p length-squared draws of rows (or columns) of M, each scaled by
    1/sqrt(p P).
    """
    dense = M.dense()
    frob2 = M.frob2()
    if form == "rows":
        picks = M.sample_rows(rng, p)
        probs = M.row_probabilities()[picks]
        N = dense[picks] / np.sqrt(p * probs)[:, np.newaxis]
        diff = dense.T @ dense - N.T @ N
    elif form == "cols":
        picks = M.sample_cols(rng, p)
        probs = M.col_probabilities()[picks]
        N = dense[:, picks] / np.sqrt(p * probs)[np.newaxis, :]
        diff = dense @ dense.T - N @ N.T
    else:
        raise ValueError(f"form must be 'rows' or 'cols', got {form!r}")
    return float(np.linalg.norm(diff)) / frob2
