"""Tests for the benchmark harness, concentration suite and bound audit."""

import math

import numpy as np
import pytest

from qittls.bench import (
    bound_audit,
    concentration_suite,
    default_audit_sigma,
    hadamard_instance,
    run_bench,
    trial_streams,
)
from qittls.models import AuditConfig, BenchConfig, Method, PronyConfig
from qittls.problems import rel_err_inf
from qittls.reports import emit_csv


SKETCH_FAILURES = {"TruncationRankError", "RankDeficiencyError", "DegenerateSketchError"}

# (problem, d) pairs of the desk-scale sweep
DESK_SCALE_PROBLEMS = [
    ("foxgood", 4),
    ("gravity", 6),
    ("heat", 15),
    ("phillips", 10),
    ("baart", 4),
    ("deriv2", 6),
]


def test_foxgood_sweep_yields_one_record_per_trial_and_method():
    """foxgood, m = 256, d = 4, all methods, 5 trials gives 15 records in trial-major order."""
    run = run_bench(BenchConfig(problem="foxgood", m=256, d=4, trials=5))
    assert len(run.records) == 15
    assert [(r.trial, r.method) for r in run.records[:3]] == [
        (0, Method.TTLS),
        (0, Method.RTTLS),
        (0, Method.QITTLS),
    ]
    for record in run.records:
        if record.method is Method.QITTLS and record.status != "ok":
            assert record.status in SKETCH_FAILURES
            assert record.error is None
        else:
            assert record.status == "ok"
            assert record.error is not None and math.isfinite(record.error)
    assert run.decay.shape == (257,)


def test_recorded_errors_match_stored_solutions():
    """Recomputing the first trial's errors from stored solutions reproduces the records."""
    run = run_bench(BenchConfig(problem="gravity", m=64, d=6, trials=2, p=100))
    assert run.reference is not None
    for record in run.records:
        if record.trial == 0 and record.error is not None:
            assert rel_err_inf(run.solutions[record.method.value], run.reference) == record.error


def test_same_seed_gives_identical_csv(tmp_path):
    """Two runs with equal config and seed write identical bytes."""
    config = BenchConfig(problem="foxgood", m=64, d=4, trials=1, p=80, seed=11)
    first = emit_csv(run_bench(config).records, tmp_path / "a.csv").read_bytes()
    second = emit_csv(run_bench(config).records, tmp_path / "b.csv").read_bytes()
    assert first == second


def test_worker_count_does_not_change_results():
    """Per-trial streams make the parallel pool deterministic."""
    base = dict(problem="phillips", m=64, d=10, trials=4, p=120, seed=2)
    serial = run_bench(BenchConfig(**base, workers=1))
    parallel = run_bench(BenchConfig(**base, workers=3))
    assert [r.model_dump(exclude={"wall_time"}) for r in serial.records] == [
        r.model_dump(exclude={"wall_time"}) for r in parallel.records
    ]


def test_prony_ttls_is_its_own_reference():
    """Errors of TTLS against the TTLS reference vanish."""
    run = run_bench(PronyConfig(m=60, n=60, methods=["TTLS"], trials=2))
    assert [r.error for r in run.records] == [0.0, 0.0]
    assert all(r.reference == "x_TTLS" for r in run.records)
    assert run.reference_label == "x_TTLS"


def test_prony_qittls_matches_ttls():
    """The noiseless Prony system has exact rank d, so any rank-d sketch recovers the TTLS solution."""
    run = run_bench(PronyConfig(m=200, n=200, methods=["QiTTLS"], trials=2))
    for record in run.records:
        assert record.status == "ok"
        assert record.error is not None and record.error <= 1e-6


def test_prony_full_size():
    """m = n = 1000, t = 0.2, d = 12 with the standard poles."""
    run = run_bench(PronyConfig(methods=["QiTTLS"], trials=1))
    assert run.records[0].error is not None
    assert run.records[0].error <= 1e-6


def test_prony_rttls_matches_ttls():
    """The range finder captures the exact rank-12 Prony system."""
    run = run_bench(PronyConfig(m=60, n=60, methods=["RTTLS"], trials=2))
    for record in run.records:
        assert record.status == "ok"
        assert record.error is not None and record.error <= 1e-4


def test_solver_failures_are_recorded_per_record():
    """A failing method is tagged while the other methods still report errors."""
    run = run_bench(BenchConfig(problem="foxgood", m=32, d=4, methods="TTLS,QiTTLS", p=2, trials=2))
    by_method = {(r.trial, r.method): r for r in run.records}
    assert len(run.records) == 4
    for trial in range(2):
        assert by_method[(trial, Method.TTLS)].status == "ok"
        failed = by_method[(trial, Method.QITTLS)]
        assert failed.status == "TruncationRankError"
        assert failed.error is None
    assert Method.QITTLS.value not in run.solutions


def test_trial_streams_are_independent_of_order():
    """Streams depend only on (seed, trial)."""
    a = [g.random() for g in trial_streams(3, 5)]
    b = [g.random() for g in trial_streams(3, 5)]
    c = [g.random() for g in trial_streams(3, 6)]
    assert a == b
    assert a != c
    assert len(set(a)) == 3


def test_unknown_problem_is_rejected():
    """Unknown names raise before any trial runs."""
    with pytest.raises(ValueError, match="unknown problem"):
        run_bench(BenchConfig(problem="nope", m=32))


def test_concentration_within_bound():
    """Fixed 20 x 10 matrix, p = 200, theta = 0.3, 500 trials stays under the bound plus slack."""
    summary = concentration_suite(20, 10, 200, 0.3, 500, seed=0)
    assert summary.bound == pytest.approx(1 / (0.09 * 200))
    assert summary.row_violation_fraction <= summary.bound + 0.02
    assert summary.col_violation_fraction <= summary.bound + 0.02
    assert summary == concentration_suite(20, 10, 200, 0.3, 500, seed=0)


def test_concentration_with_many_draws_never_violates():
    """p much larger than 1 / theta^2 gives a zero violation fraction."""
    summary = concentration_suite(20, 10, 20_000, 0.3, 20, seed=1)
    assert summary.row_violation_fraction == 0.0
    assert summary.col_violation_fraction == 0.0
    with pytest.raises(ValueError):
        concentration_suite(20, 10, 200, 0.0, 5, seed=1)


def test_hadamard_instance_has_uniform_norms():
    """Rows and columns share the squared norm ||sigma||^2 / m."""
    sigma = default_audit_sigma(8)
    C = hadamard_instance(sigma, np.random.default_rng(0))
    target = np.sum(sigma**2) / 8
    np.testing.assert_allclose(np.sum(C**2, axis=1), target)
    np.testing.assert_allclose(np.sum(C**2, axis=0), target)
    np.testing.assert_allclose(np.linalg.svd(C, compute_uv=False), np.sort(sigma)[::-1])


def test_bound_holds_on_exhaustive_toy_instances():
    """Every trial satisfies the hypotheses and the observed error stays below the bound."""
    reports = bound_audit(AuditConfig(trials=20))
    assert len(reports) == 20
    assert [r.trial for r in reports] == list(range(20))
    for r in reports:
        assert r.hypothesis_ok
        assert r.observed is not None
        assert r.observed <= r.rhs


def test_sampled_audit_reports_every_trial():
    """Sampled sketches still produce one report per trial."""
    reports = bound_audit(AuditConfig(m=16, trials=5, exhaustive=False, p=200))
    assert len(reports) == 5
    assert all(math.isfinite(r.rhs) for r in reports if r.hypothesis_ok)


def test_equal_singular_values_fail_the_gap_hypothesis():
    """Without a spectral gap the bound is flagged as inapplicable."""
    reports = bound_audit(AuditConfig(trials=3, sigma=[1.0] * 8))
    assert len(reports) == 3
    assert not any(r.hypothesis_ok for r in reports)
    assert all(not r.gap_ok and math.isinf(r.epsilon_v) for r in reports)


def test_foxgood_desk_scale_sweep_keeps_ttls_accurate():
    """m = 256, eta = 1e-3, p = 200: TTLS stays accurate and QiTTLS either solves or reports why."""
    run = run_bench(BenchConfig(problem="foxgood", m=256, d=4, methods="TTLS,QiTTLS", trials=10))
    ttls = [r.error for r in run.records if r.method is Method.TTLS]
    assert all(e is not None for e in ttls)
    assert float(np.median(ttls)) <= 0.3
    qi = [r for r in run.records if r.method is Method.QITTLS]
    assert len(qi) == 10
    assert all((r.status == "ok") == (r.error is not None) for r in qi)
    assert {r.status for r in qi} <= {"ok"} | SKETCH_FAILURES


@pytest.mark.parametrize(("problem", "d"), DESK_SCALE_PROBLEMS)
def test_desk_scale_sweep_over_every_problem(problem, d):
    """m = 256, eta = 1e-3, p = 200, 10 trials: every record is a finite error or a typed sketch failure."""
    run = run_bench(BenchConfig(problem=problem, m=256, d=d, methods="TTLS,QiTTLS", trials=10))
    assert len(run.records) == 20
    for record in run.records:
        if record.status == "ok":
            assert record.error is not None and math.isfinite(record.error)
        else:
            assert record.method is Method.QITTLS
            assert record.status in SKETCH_FAILURES


@pytest.mark.parametrize(("problem", "d"), [("heat", 15), ("deriv2", 6)])
def test_sketch_succeeds_when_b_does_not_dominate(problem, d):
    """heat and deriv2 keep rank d in the p = 200 sketch in most trials."""
    run = run_bench(BenchConfig(problem=problem, m=256, d=d, methods="QiTTLS", trials=10))
    ok = [r for r in run.records if r.status == "ok"]
    assert len(ok) >= 8


def test_infeasible_theoretical_sketch_is_recorded():
    """Without p the theoretical size is refused per record instead of exhausting memory."""
    run = run_bench(BenchConfig(problem="foxgood", m=32, d=4, methods="TTLS,QiTTLS", p=None, trials=2))
    statuses = [(r.method, r.status) for r in run.records]
    assert statuses == [
        (Method.TTLS, "ok"),
        (Method.QITTLS, "InfeasibleSketchError"),
    ] * 2
