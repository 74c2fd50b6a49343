"""Experiment harness: benchmark sweeps, the concentration suite and the bound audit.

Every trial draws from its own streams,

    SeedSequence(seed, spawn_key=(trial,)).spawn(3) -> (noise, QiTTLS, RTTLS),

so results do not depend on the worker count or on completion order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg

from .dense_linalg import svd
from .errors import QittlsError
from .loaders import load_poles
from .models import (
    AuditConfig,
    BenchConfig,
    BenchRun,
    BoundReport,
    ConcentrationSummary,
    Method,
    NoiseSpec,
    PronySpec,
    TestProblem,
    TrialRecord,
    TtlsSolution,
)
from .problems import add_noise, gen_problem, gen_prony, rel_err_inf, standard_prony_spec
from .qisvd import derive_params, sketch_gram_deviation
from .sample_model import sm_build
from .tls_solvers import (
    augment,
    qittls_solve,
    rttls_solve,
    singular_value_profile,
    solution_error_bound,
    subspace_error_bound,
    ttls_solve,
)

logger = logging.getLogger(__name__)


def trial_streams(seed: int, trial: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (noise, QiTTLS, RTTLS) generators for one trial."""
    noise, qi, rt = np.random.SeedSequence(seed, spawn_key=(trial,)).spawn(3)
    return np.random.default_rng(noise), np.random.default_rng(qi), np.random.default_rng(rt)


def build_problem(config: BenchConfig) -> TestProblem:
    """Exact system for a sweep: a Fredholm discretization or a Prony system."""
    if config.is_prony:
        n = config.n if config.n is not None else config.m
        if config.pole_file is not None:
            poles, residues = load_poles(config.pole_file)
            spec = PronySpec(poles=poles, residues=residues, t_step=config.t_step, m=config.m, n=n)
        else:
            spec = standard_prony_spec(config.m, n, t_step=config.t_step)
        return gen_prony(spec)
    if config.n is not None and config.n != config.m:
        raise ValueError(f"problem {config.problem!r} is square; got m={config.m}, n={config.n}")
    return gen_problem(config.problem, config.m)


def _solve(
    method: Method,
    A: np.ndarray,
    b: np.ndarray,
    config: BenchConfig,
    qi_rng: np.random.Generator,
    rt_rng: np.random.Generator,
) -> TtlsSolution:
    if method is Method.TTLS:
        return ttls_solve(A, b, config.d)
    if method is Method.RTTLS:
        return rttls_solve(A, b, config.d, sketch_size=config.rttls_sketch, rng=rt_rng)
    if method is Method.QITTLS:
        params = derive_params(
            config.epsilon,
            config.effective_k,
            config.delta,
            p_override=config.p,
            alpha_denominator=config.alpha_denominator,
        )
        return qittls_solve(sm_build(augment(A, b)), params, config.d, qi_rng)
    raise ValueError(f"unsupported benchmark method {method}")


def _run_trial(
    config: BenchConfig,
    problem: TestProblem,
    trial: int,
    fixed_reference: np.ndarray | None,
) -> tuple[list[TrialRecord], dict[str, np.ndarray], np.ndarray | None]:
    noise_rng, qi_rng, rt_rng = trial_streams(config.seed, trial)
    eta = config.eta
    A, b = add_noise(problem, NoiseSpec(eta=eta, seed=config.seed), rng=noise_rng)

    if problem.x_true is not None:
        reference, label = problem.x_true, "x_true"
    else:
        reference = fixed_reference if fixed_reference is not None else ttls_solve(A, b, config.d).x
        label = "x_TTLS"

    records: list[TrialRecord] = []
    solutions: dict[str, np.ndarray] = {}
    for method in config.methods:
        try:
            solution = _solve(method, A, b, config, qi_rng, rt_rng)
            error: float | None = rel_err_inf(solution.x, reference)
            wall_time = solution.wall_time
            status = "ok"
            solutions[method.value] = solution.x
        except (QittlsError, ValueError) as e:
            logger.warning("trial %d: %s failed: %s", trial, method.value, e)
            error, wall_time, status = None, 0.0, type(e).__name__
        records.append(
            TrialRecord(
                problem=problem.name,
                m=config.m,
                d=config.d,
                method=method,
                trial=trial,
                seed=config.seed,
                eta=eta,
                error=error,
                reference=label,
                wall_time=wall_time,
                status=status,
            )
        )
    return records, solutions, reference


def run_bench(config: BenchConfig) -> BenchRun:
    """Run every trial of a sweep and collect one record per (trial, method).

    Solver failures are recorded with ``status`` set to the exception name and
    an empty error; the remaining records are unaffected.
    """
    problem = build_problem(config)
    logger.info(
        "running %s m=%d d=%d methods=%s trials=%d",
        problem.name,
        config.m,
        config.d,
        ",".join(m.value for m in config.methods),
        config.trials,
    )
    fixed_reference = None
    if problem.x_true is None and config.eta == 0:
        # noiseless systems share one reference across trials
        fixed_reference = ttls_solve(problem.A_tilde, problem.b_tilde, config.d).x

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [
            pool.submit(_run_trial, config, problem, trial, fixed_reference) for trial in range(config.trials)
        ]
        results = [future.result() for future in futures]

    records = [record for trial_records, _, _ in results for record in trial_records]
    _, first_solutions, first_reference = results[0]
    return BenchRun(
        config=config,
        records=records,
        decay=singular_value_profile(problem.A_tilde, problem.b_tilde),
        reference=first_reference,
        reference_label="x_true" if problem.x_true is not None else "x_TTLS",
        solutions=first_solutions,
    )


def concentration_suite(
    rows: int, cols: int, p: int, theta: float, trials: int, seed: int
) -> ConcentrationSummary:
    """Empirical frequency of ||M^T M - N^T N||_F >= theta ||M||_F^2 (and the column form).

    M is a fixed Gaussian matrix drawn from ``seed``; each trial resamples N.
    The probability of either event is at most 1 / (theta^2 p).
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    M = sm_build(np.random.default_rng(seed).standard_normal((rows, cols)))
    row_dev = np.empty(trials)
    col_dev = np.empty(trials)
    for t in range(trials):
        row_seq, col_seq = np.random.SeedSequence(seed, spawn_key=(t,)).spawn(2)
        row_dev[t] = sketch_gram_deviation(M, p, np.random.default_rng(row_seq), form="rows")
        col_dev[t] = sketch_gram_deviation(M, p, np.random.default_rng(col_seq), form="cols")
    return ConcentrationSummary(
        rows=rows,
        cols=cols,
        p=p,
        theta=theta,
        trials=trials,
        seed=seed,
        bound=1.0 / (theta * theta * p),
        row_violation_fraction=float(np.mean(row_dev >= theta)),
        col_violation_fraction=float(np.mean(col_dev >= theta)),
        row_mean_deviation=float(row_dev.mean()),
        col_mean_deviation=float(col_dev.mean()),
    )


def default_audit_sigma(m: int) -> np.ndarray:
    """Two dominant values, one moderate, then a geometric tail."""
    head = [10.0, 9.0, 0.5]
    tail = [0.05 * 0.5**i for i in range(m - len(head))]
    return np.array(head + tail)[:m]


def hadamard_instance(sigma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """C = H1 diag(sigma) H2^T with signed, permuted normalized Hadamard factors.

    Every row and every column of C has squared norm ||sigma||^2 / m, so
    sketching all m rows and all m columns reproduces C exactly.
    """
    m = sigma.shape[0]
    H = scipy.linalg.hadamard(m).astype(np.float64) / np.sqrt(m)
    H1 = rng.choice([-1.0, 1.0], size=m)[:, np.newaxis] * H[:, rng.permutation(m)]
    H2 = rng.choice([-1.0, 1.0], size=m)[:, np.newaxis] * H[:, rng.permutation(m)]
    return (H1 * sigma) @ H2.T


def bound_audit(config: AuditConfig) -> list[BoundReport]:
    """Compare the observed QiTTLS-vs-TTLS error with the solution error bound on toy instances.

    Inapplicable bounds are flagged through the hypothesis fields; a failing
    QiTTLS run leaves ``observed`` empty.
    """
    m = config.m
    sigma = np.asarray(config.sigma, dtype=np.float64) if config.sigma is not None else default_audit_sigma(m)
    p = m if config.exhaustive else (config.p if config.p is not None else 4 * m)
    params = derive_params(config.epsilon, config.k, config.delta, p_override=p)
    forced = np.arange(m) if config.exhaustive else None

    reports: list[BoundReport] = []
    for t in range(config.trials):
        instance_rng, qi_rng, _ = trial_streams(config.seed, t)
        C = hadamard_instance(sigma, instance_rng)
        A, b = C[:, : m - 1], C[:, m - 1]
        C_svd = svd(C, full_v=True)
        exact = ttls_solve(A, b, config.d)
        x_norm = float(np.linalg.norm(exact.x))

        subspace = subspace_error_bound(C_svd, params, config.effective_q)
        report = solution_error_bound(
            C_svd,
            config.d,
            subspace.epsilon_v,
            exact.tau_d if exact.tau_d is not None else 0.0,
            float(np.linalg.norm(b)),
            subspace=subspace,
            x_ttls_norm=x_norm,
        )
        observed: float | None = None
        try:
            approx = qittls_solve(sm_build(C), params, config.d, qi_rng, row_indices=forced, col_indices=forced)
            if x_norm > 0:
                observed = float(np.linalg.norm(approx.x - exact.x)) / x_norm
        except QittlsError as e:
            logger.warning("audit trial %d: QiTTLS failed: %s", t, e)
        reports.append(report.model_copy(update={"observed": observed, "trial": t}))
    return reports
