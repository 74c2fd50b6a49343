"""Benchmark inputs: Fredholm test problems, the uniform noise model and Prony systems.

Each Fredholm generator discretizes a first-kind equation

    int_a^b K(s, t) f(t) dt = g(s)

on an m x m grid. Generators whose right-hand side is computed as A @ x are
exactly consistent; quadrature generators carry the documented relative
tolerance on ||A x - b|| / ||b|| (valid for m >= 32).
"""

import logging
import math
from collections.abc import Callable

import numpy as np
import scipy.linalg

from .dense_linalg import svd
from .errors import NonConjugatePolesError
from .models import NoiseSpec, PronySpec, TestProblem
from .tls_solvers import numerical_rank

logger = logging.getLogger(__name__)

MIN_SIZE = 8
EXACT_TOL = 1e-12
PRONY_RANK_TOL = 1e-8

# upper half-plane poles; each is paired with its conjugate, all residues 1
DAMPED_SINUSOID_POLES: list[tuple[float, float]] = [
    (-0.082, 0.926),
    (-0.147, 2.874),
    (-0.188, 4.835),
    (-0.220, 6.800),
    (-0.247, 8.767),
    (-0.270, 10.733),
]


def _midpoints(a: float, b: float, m: int) -> np.ndarray:
    h = (b - a) / m
    return a + h * (np.arange(m) + 0.5)


def foxgood(m: int) -> TestProblem:
    """Severely ill-posed problem.

    K(s, t) = sqrt(s^2 + t^2) on [0, 1]^2, f(t) = t,
    g(s) = ((1 + s^2)^1.5 - s^3) / 3. Midpoint quadrature; tolerance 1e-2.
    """
    h = 1.0 / m
    t = _midpoints(0.0, 1.0, m)
    A = h * np.sqrt(t[:, np.newaxis] ** 2 + t[np.newaxis, :] ** 2)
    b = ((1.0 + t**2) ** 1.5 - t**3) / 3.0
    return TestProblem(name="foxgood", A_tilde=A, b_tilde=b, x_true=t.copy(), consistency_tol=1e-2)


def gravity(m: int, depth: float = 0.25) -> TestProblem:
    """One-dimensional gravity surveying.

    K(s, t) = depth / (depth^2 + (s - t)^2)^1.5 on [0, 1]^2,
    f(t) = sin(pi t) + 0.5 sin(2 pi t). Midpoint quadrature, b = A x.
    """
    t = _midpoints(0.0, 1.0, m)
    diff = t[:, np.newaxis] - t[np.newaxis, :]
    A = (1.0 / m) * depth / (depth**2 + diff**2) ** 1.5
    x = np.sin(np.pi * t) + 0.5 * np.sin(2 * np.pi * t)
    return TestProblem(name="gravity", A_tilde=A, b_tilde=A @ x, x_true=x, consistency_tol=EXACT_TOL)


def heat(m: int, kappa: float = 1.0) -> TestProblem:
    """Inverse heat equation (Volterra kernel on [0, 1]).

    K(s, t) = k(s - t) with k(u) = u^-1.5 exp(-1/(4 kappa^2 u)) / (2 kappa sqrt(pi)),
    discretized as a lower-triangular Toeplitz matrix by the midpoint rule.
    The solution is a smooth bump on the first half of the interval and zero
    on the second; b = A x.
    """
    h = 1.0 / m
    t = _midpoints(0.0, 1.0, m)
    c = h / (2.0 * kappa * math.sqrt(math.pi))
    kernel = c * t**-1.5 * np.exp(-1.0 / (4.0 * kappa**2 * t))
    first_row = np.zeros(m)
    first_row[0] = kernel[0]
    A = scipy.linalg.toeplitz(kernel, first_row)
    x = np.zeros(m)
    for i in range(1, m // 2 + 1):
        ti = i * 20.0 / m
        if ti < 2:
            x[i - 1] = 0.75 * ti**2 / 4.0
        elif ti < 3:
            x[i - 1] = 0.75 + (ti - 2.0) * (3.0 - ti)
        else:
            x[i - 1] = 0.75 * math.exp(-(ti - 3.0) * 2.0)
    return TestProblem(name="heat", A_tilde=A, b_tilde=A @ x, x_true=x, consistency_tol=EXACT_TOL)


def _phillips_bump(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) < 3.0, 1.0 + np.cos(np.pi * u / 3.0), 0.0)


def phillips(m: int) -> TestProblem:
    """Phillips' test problem.

    K(s, t) = phi(s - t), f(t) = phi(t) with phi(u) = 1 + cos(pi u / 3) for |u| < 3
    and 0 otherwise, on [-6, 6]^2;
    g(s) = (6 - |s|)(1 + cos(pi s / 3) / 2) + 9 / (2 pi) sin(pi |s| / 3).
    Midpoint quadrature; tolerance 5e-2.
    """
    h = 12.0 / m
    t = _midpoints(-6.0, 6.0, m)
    A = h * _phillips_bump(t[:, np.newaxis] - t[np.newaxis, :])
    x = _phillips_bump(t)
    s = np.abs(t)
    b = (6.0 - s) * (1.0 + 0.5 * np.cos(np.pi * t / 3.0)) + 9.0 / (2.0 * np.pi) * np.sin(np.pi * s / 3.0)
    return TestProblem(name="phillips", A_tilde=A, b_tilde=b, x_true=x, consistency_tol=5e-2)


def baart(m: int) -> TestProblem:
    """Baart's problem.

    K(s, t) = exp(s cos t), s in [0, pi/2], t in [0, pi], f(t) = sin t,
    g(s) = 2 sinh(s) / s. Midpoint quadrature in t, collocation at cell
    midpoints in s; tolerance 1e-2.
    """
    s = _midpoints(0.0, math.pi / 2.0, m)
    t = _midpoints(0.0, math.pi, m)
    A = (math.pi / m) * np.exp(s[:, np.newaxis] * np.cos(t[np.newaxis, :]))
    x = np.sin(t)
    b = 2.0 * np.sinh(s) / s
    return TestProblem(name="baart", A_tilde=A, b_tilde=b, x_true=x, consistency_tol=1e-2)


def deriv2(m: int) -> TestProblem:
    """Second-derivative problem.

    K(s, t) is the Green's function of u'' on [0, 1] with homogeneous boundary
    values: s (t - 1) for s < t and t (s - 1) for s >= t. Galerkin
    discretization with orthonormal box functions; f(t) = t and
    g(s) = (s^3 - s) / 6 are projected exactly. Symmetric; tolerance 1e-2.
    """
    h = 1.0 / m
    i = np.arange(1, m + 1, dtype=np.float64)
    A = np.tril(h**2 * np.outer((i - 0.5) * h - 1.0, i - 0.5), -1)
    A = A + A.T
    A[np.diag_indices(m)] = h**2 * ((i**2 - i + 0.25) * h - (i - 2.0 / 3.0))
    x = h**1.5 * (i - 0.5)

    def antiderivative(u: np.ndarray) -> np.ndarray:
        return u**4 / 24.0 - u**2 / 12.0

    b = (antiderivative(i * h) - antiderivative((i - 1.0) * h)) / math.sqrt(h)
    return TestProblem(name="deriv2", A_tilde=A, b_tilde=b, x_true=x, consistency_tol=1e-2)


GENERATORS: dict[str, Callable[[int], TestProblem]] = {
    "foxgood": foxgood,
    "gravity": gravity,
    "heat": heat,
    "phillips": phillips,
    "baart": baart,
    "deriv2": deriv2,
}


def gen_problem(name: str, m: int) -> TestProblem:
    """Square m x m discretization of a named Fredholm test problem."""
    try:
        generator = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {', '.join(GENERATORS)}") from None
    if m < MIN_SIZE:
        raise ValueError(f"problem size m={m} is below the minimum {MIN_SIZE}")
    return generator(m)


def add_noise(
    problem: TestProblem, spec: NoiseSpec, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """A = A~ + eta ||A~||_F G / ||G||_F, b = b~ + eta ||b~||_2 z / ||z||_2 with G, z uniform on [-1, 1]."""
    A_tilde = problem.A_tilde
    b_tilde = problem.b_tilde
    if spec.eta == 0:
        return A_tilde.copy(), b_tilde.copy()
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    G = rng.uniform(-1.0, 1.0, size=A_tilde.shape)
    zeta = rng.uniform(-1.0, 1.0, size=b_tilde.shape)
    A = A_tilde + spec.eta * np.linalg.norm(A_tilde) * G / np.linalg.norm(G)
    b = b_tilde + spec.eta * np.linalg.norm(b_tilde) * zeta / np.linalg.norm(zeta)
    return A, b


def standard_prony_spec(m: int, n: int, t_step: float = 0.2) -> PronySpec:
    """Six conjugate pole pairs with unit residues."""
    poles: list[tuple[float, float]] = []
    for re, im in DAMPED_SINUSOID_POLES:
        poles.extend([(re, im), (re, -im)])
    return PronySpec(poles=poles, residues=[(1.0, 0.0)] * len(poles), t_step=t_step, m=m, n=n)


def _check_conjugate_closed(poles: np.ndarray, residues: np.ndarray, tol: float = 1e-12) -> None:
    unmatched = list(range(poles.shape[0]))
    while unmatched:
        i = unmatched.pop(0)
        if abs(poles[i].imag) <= tol:
            if abs(residues[i].imag) > tol:
                raise NonConjugatePolesError(f"real pole {poles[i]} has complex residue {residues[i]}")
            continue
        partner = next(
            (
                j
                for j in unmatched
                if abs(poles[j] - poles[i].conjugate()) <= tol
                and abs(residues[j] - residues[i].conjugate()) <= tol
            ),
            None,
        )
        if partner is None:
            raise NonConjugatePolesError(f"pole {poles[i]} (residue {residues[i]}) has no conjugate partner")
        unmatched.remove(partner)


def gen_prony(spec: PronySpec, verify_rank: bool = True) -> TestProblem:
    """Hankel linear-prediction system A_n x = b_n.

    y_l = sum_j gamma_j z_j^l with z_j = exp(lambda_j t), a_j = (y_{j-1}, ..., y_{j+m-2}),
    A_n = [a_1, ..., a_n] (m x n) and b_n = -a_{n+1}. The exact solution is not
    unique, so ``x_true`` is left empty.
    """
    poles = spec.pole_array()
    residues = spec.residue_array()
    if np.any(residues == 0):
        raise ValueError("residues must be nonzero")
    _check_conjugate_closed(poles, residues)
    m, n = spec.m, spec.n
    if m < n:
        raise ValueError(f"Prony system needs m >= n, got m={m}, n={n}")
    if m < poles.shape[0]:
        raise ValueError(f"Prony system needs m >= number of poles ({poles.shape[0]}), got m={m}")

    powers = np.arange(m + n, dtype=np.float64)
    y_complex = np.exp(np.outer(powers, poles * spec.t_step)) @ residues
    scale = max(1.0, float(np.max(np.abs(y_complex.real))))
    if float(np.max(np.abs(y_complex.imag))) > 1e-10 * scale:
        raise NonConjugatePolesError("synthesized signal is not real")
    y = y_complex.real

    A = scipy.linalg.hankel(y[:m], y[m - 1 : m + n - 1])
    b = -y[n : n + m]
    rank = None
    if verify_rank:
        rank = numerical_rank(svd(A).sigma, PRONY_RANK_TOL)
        expected = min(n, poles.shape[0])
        if rank != expected:
            logger.warning("Prony matrix has numerical rank %d, expected %d", rank, expected)
    return TestProblem(name="prony", A_tilde=A, b_tilde=b, rank=rank)


def rel_err_inf(x: np.ndarray, x_ref: np.ndarray) -> float:
    """||x - x_ref||_inf / ||x_ref||_inf."""
    ref = np.asarray(x_ref, dtype=np.float64).reshape(-1)
    denom = float(np.max(np.abs(ref))) if ref.size else 0.0
    if denom == 0:
        raise ValueError("reference vector has zero infinity norm")
    diff = np.asarray(x, dtype=np.float64).reshape(-1) - ref
    return float(np.max(np.abs(diff))) / denom
