"""Tests for the two-stage length-squared sketch."""

import math

import numpy as np
import pytest

from qittls.bench import default_audit_sigma, hadamard_instance
from qittls.dense_linalg import subspace_angle, svd
from qittls.errors import DegenerateSketchError, EmptySupportError, InfeasibleSketchError
from qittls.qisvd import (
    assemble_v_hat,
    column_probabilities,
    column_probabilities_by_definition,
    derive_params,
    qisvd,
    sample_cols,
    sample_rows,
    sketch_gram_deviation,
    truncation_rank,
    vhat_orthogonality_report,
)
from qittls.sample_model import sm_build
from qittls.tls_solvers import subspace_distance


def test_parameter_cascade_is_exact():
    """p is the exact ceiling of 1 / (theta^2 delta)."""
    params = derive_params(1.0, 1, 0.5, p_override=50)
    assert params.xi == pytest.approx(1 / 6)
    assert params.alpha == pytest.approx(1 / 600)
    assert params.theta == pytest.approx(1 / 3600)
    assert params.p_theory == 2 * 3600**2
    assert params.p_used == 50
    assert params.warnings


def test_analysis_constant_changes_alpha():
    """The constant c in alpha = xi / (c k^4) is selectable."""
    params = derive_params(1.0, 1, 0.5, alpha_denominator=16)
    assert params.alpha == pytest.approx(1 / 96)
    assert params.p_used == params.p_theory


def test_theoretical_p_is_infeasible_for_practical_epsilon(caplog):
    """Small epsilon yields an astronomically large p and a logged warning."""
    params = derive_params(0.1, 4, 0.1)
    assert params.xi == pytest.approx(0.1 / 4.2)
    assert params.p_theory > 10**12
    assert params.warnings
    assert "feasibility cap" in caplog.text


def test_parameter_validation():
    """Out-of-range inputs raise ValueError."""
    with pytest.raises(ValueError):
        derive_params(0.0, 1, 0.5)
    with pytest.raises(ValueError):
        derive_params(0.1, 0, 0.5)
    with pytest.raises(ValueError):
        derive_params(0.1, 1, 1.0)
    with pytest.raises(ValueError):
        derive_params(0.1, 1, 0.5, p_override=0)


def test_frobenius_chain():
    """||C||_F = ||S||_F = ||W||_F for every sample."""
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = int(rng.integers(2, 61))
        n = int(rng.integers(2, 41))
        p = int(rng.integers(1, 301))
        C = sm_build(rng.standard_normal((m, n)))
        rows, _, S = sample_rows(C, p, rng)
        _, _, W = sample_cols(C, rows, S, p, rng)
        frob = math.sqrt(C.frob2())
        assert S.shape == (p, n)
        assert W.shape == (p, p)
        assert np.linalg.norm(S) == pytest.approx(frob, rel=1e-10)
        assert np.linalg.norm(W) == pytest.approx(frob, rel=1e-10)


def test_column_probabilities_match_definition():
    """Column norms of S give the mixture distribution over sampled rows."""
    rng = np.random.default_rng(1)
    C = sm_build(rng.standard_normal((15, 9)))
    rows, probs, S = sample_rows(C, 40, rng)
    np.testing.assert_allclose(probs, C.row_probabilities()[rows])
    np.testing.assert_allclose(
        column_probabilities(S), column_probabilities_by_definition(C, rows), rtol=1e-12
    )
    assert column_probabilities(S).sum() == pytest.approx(1.0)


def test_zero_matrix_cannot_be_sketched():
    """Sketching a zero matrix raises EmptySupportError."""
    with pytest.raises(EmptySupportError):
        sample_rows(sm_build(np.zeros((3, 3))), 4, np.random.default_rng(0))


def test_truncation_rank():
    """l is the number of sketch values above the threshold, capped by k."""
    sigma = np.array([3.0, 2.0, 1.0])
    assert truncation_rank(sigma, 5, 1 / 14, 14.0) == 3
    assert truncation_rank(sigma, 5, 2 / 14, 14.0) == 2
    assert truncation_rank(sigma, 1, 1 / 14, 14.0) == 1
    with pytest.raises(DegenerateSketchError):
        truncation_rank(sigma, 5, 1.0, 14.0)
    with pytest.raises(ValueError):
        truncation_rank(sigma[::-1], 5, 1 / 14, 14.0)


def test_zero_retained_value_is_rejected():
    """A zero retained sketch singular value cannot be inverted."""
    with pytest.raises(DegenerateSketchError):
        assemble_v_hat(np.eye(2), np.eye(2), np.array([1.0, 0.0]), 2)


def test_exhaustive_sketch_recovers_exact_subspace():
    """With uniform row and column norms, forcing every index gives S = W = C and V_hat = V."""
    rng = np.random.default_rng(3)
    m = 8
    C = hadamard_instance(default_audit_sigma(m), rng)
    model = sm_build(C)
    params = derive_params(1e-6, 3, 0.1, p_override=m)
    forced = np.arange(m)
    approx = qisvd(model, params, rng, row_indices=forced, col_indices=forced)
    assert approx.l == 3
    assert approx.sketch is not None
    np.testing.assert_allclose(approx.sketch.S, C, atol=1e-12)
    np.testing.assert_allclose(approx.sketch.W, C, atol=1e-12)
    assert subspace_distance(svd(C).V, approx.V_hat) <= 1e-10
    assert approx.orthogonality_frob <= 1e-10


def test_orthogonality_bundle_with_sampled_sketch():
    """||V^T V - I||_F <= xi, ||V||_2 <= sqrt(1 + xi), ||V||_F^2 <= k + sqrt(k) xi in most trials."""
    m, k, delta = 16, 2, 0.1
    sigma = default_audit_sigma(m)
    params = derive_params(100.0, k, delta, p_override=300)
    xi = params.xi
    trials = 200
    passed = 0
    for t in range(trials):
        rng = np.random.default_rng([5, t])
        model = sm_build(hadamard_instance(sigma, rng))
        report = vhat_orthogonality_report(qisvd(model, params, rng).V_hat)
        if (
            report.frobenius_deviation <= xi
            and report.spectral_norm <= math.sqrt(1 + xi)
            and report.frobenius_norm2 <= k + math.sqrt(k) * xi
        ):
            passed += 1
    assert passed >= (1 - delta - 0.05) * trials


def test_orthogonality_report_of_orthonormal_columns():
    """An orthonormal basis has zero deviation."""
    Q = np.linalg.qr(np.random.default_rng(4).standard_normal((6, 3)))[0]
    report = vhat_orthogonality_report(Q)
    assert report.frobenius_deviation == pytest.approx(0.0, abs=1e-12)
    assert report.spectral_deviation == pytest.approx(0.0, abs=1e-12)
    assert report.frobenius_norm2 == pytest.approx(3.0)
    assert report.spectral_norm == pytest.approx(1.0)


def test_gram_deviation_shrinks_with_more_draws():
    """Many draws make the sampled Gram matrix close to the exact one in both forms."""
    rng = np.random.default_rng(6)
    M = sm_build(rng.standard_normal((20, 10)))
    assert sketch_gram_deviation(M, 20_000, rng, form="rows") < 0.05
    assert sketch_gram_deviation(M, 20_000, rng, form="cols") < 0.05
    with pytest.raises(ValueError):
        sketch_gram_deviation(M, 10, rng, form="diag")  # type: ignore[arg-type]


def test_sketch_is_seed_deterministic():
    """Equal seeds give identical sketches."""
    model = sm_build(np.random.default_rng(7).standard_normal((30, 12)))
    params = derive_params(0.5, 2, 0.1, p_override=25)
    a = qisvd(model, params, np.random.default_rng(9))
    b = qisvd(model, params, np.random.default_rng(9))
    np.testing.assert_array_equal(a.V_hat, b.V_hat)
    assert a.sketch is not None and b.sketch is not None
    np.testing.assert_array_equal(a.sketch.row_indices, b.sketch.row_indices)


def test_theoretical_size_above_cap_is_refused():
    """Without an override an oversized p raises before any draw is made."""
    model = sm_build(np.random.default_rng(8).standard_normal((12, 5)))
    params = derive_params(0.1, 4, 0.1)
    assert not params.p_overridden
    with pytest.raises(InfeasibleSketchError) as excinfo:
        qisvd(model, params, np.random.default_rng(0))
    assert excinfo.value.cap == params.feasibility_cap
    assert excinfo.value.p == params.p_theory
    assert isinstance(excinfo.value, ValueError)


def test_override_bypasses_feasibility_cap():
    """An override is used even above the cap; without it the lowered cap refuses p."""
    model = sm_build(np.random.default_rng(8).standard_normal((12, 5)))
    small_cap = derive_params(1.0, 1, 0.5, p_override=30, feasibility_cap=10)
    assert small_cap.p_overridden
    assert qisvd(model, small_cap, np.random.default_rng(0)).sketch.W.shape == (30, 30)
    with pytest.raises(InfeasibleSketchError):
        qisvd(model, derive_params(1.0, 1, 0.5, feasibility_cap=10), np.random.default_rng(0))


def test_truncation_rank_matches_linear_scan():
    """The threshold count agrees with a direct scan on random descending spectra."""
    rng = np.random.default_rng(14)
    for _ in range(1000):
        size = int(rng.integers(1, 30))
        sigma = np.sort(np.abs(rng.standard_normal(size)) * 10.0 ** rng.uniform(-3, 3, size))[::-1]
        sigma[rng.random(size) < 0.1] = 0.0
        sigma = np.sort(sigma)[::-1]
        k = int(rng.integers(1, size + 2))
        alpha = 10.0 ** rng.uniform(-6, 0)
        frob2 = float(np.sum(sigma**2)) if rng.random() < 0.8 else float(rng.uniform(0.1, 10.0))
        threshold = alpha * frob2
        last = 0
        for t in range(1, size + 1):
            if sigma[t - 1] ** 2 >= threshold:
                last = t
        if last == 0:
            with pytest.raises(DegenerateSketchError):
                truncation_rank(sigma, k, alpha, frob2)
        else:
            assert truncation_rank(sigma, k, alpha, frob2) == min(k, last)


def test_rank_one_sketch_recovers_frobenius_norm():
    """A rank-one C yields sigma_bar_1 within 5% of ||C||_F."""
    rng = np.random.default_rng(15)
    C = np.outer(rng.standard_normal(25), rng.standard_normal(9))
    params = derive_params(0.5, 1, 0.1, p_override=50)
    for t in range(10):
        approx = qisvd(sm_build(C), params, np.random.default_rng([15, t]))
        assert approx.l == 1
        assert approx.sigma_bar[0] == pytest.approx(np.linalg.norm(C), rel=0.05)


def test_planted_spectrum_subspace_is_recovered():
    """A 30 x 20 matrix with three dominant singular values keeps its leading subspace."""
    rng = np.random.default_rng(16)
    U = np.linalg.qr(rng.standard_normal((30, 20)))[0]
    V = np.linalg.qr(rng.standard_normal((20, 20)))[0]
    sigma = np.concatenate([[10.0, 6.0, 3.0], np.full(17, 1e-3)])
    C = (U * sigma) @ V.T
    model = sm_build(C)
    params = derive_params(0.5, 3, 0.1, p_override=200)
    trials = 50
    close = 0
    for t in range(trials):
        approx = qisvd(model, params, np.random.default_rng([16, t]))
        if approx.l == 3 and subspace_angle(V[:, :3], approx.V_hat) <= 0.2:
            close += 1
    assert close >= 0.9 * trials
