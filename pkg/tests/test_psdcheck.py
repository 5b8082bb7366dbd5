"""PSD verification by repeated top-eigenpair extraction and shaving, with a
factor certificate on acceptance."""

from __future__ import annotations

import numpy as np
import pytest

from dynev import psdcheck, sparse

from conftest import random_gram, rotated_diag, sym


# ---------------------------------------------------------------------------
# argument validation


def test_parameter_validation():
    A = sym(np.eye(2))
    with pytest.raises(ValueError):
        psdcheck.check_psd(0.0, 2.0, A, seed=0)
    with pytest.raises(ValueError):
        psdcheck.check_psd(1.0, 2.0, A, seed=0)
    with pytest.raises(ValueError):
        psdcheck.check_psd(0.1, 0.5, A, seed=0)
    with pytest.raises(ValueError):
        psdcheck.check_psd(0.1, float("nan"), A, seed=0)


# ---------------------------------------------------------------------------
# frozen verdicts


def test_identity_certified():
    v = psdcheck.check_psd(0.1, 1.0, sym(np.eye(10)), seed=0)
    assert isinstance(v, psdcheck.Certificate)
    assert v.X.shape == (10, v.config.T)
    resid = np.linalg.norm(np.eye(10) - v.X @ v.X.T, 2)
    assert resid <= 0.1  # delta * lambda_min = 0.1 * 1
    assert v.sigma is not None and v.sigma <= 0.1
    assert 300 <= v.steps <= v.config.T


def test_indefinite_diagonal_rejected():
    v = psdcheck.check_psd(0.1, 2.0, sym(np.diag([1.0, -1.0])), seed=0)
    assert isinstance(v, psdcheck.NotPsd)
    assert isinstance(v.reason, int) or v.reason == "final-check"


def test_harmonic_ladder_certified_to_relative_accuracy():
    rng = np.random.default_rng(0)
    n = 20
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    D = np.diag(1.0 / np.arange(1, n + 1))
    A = (Q @ D) @ Q.T
    A = (A + A.T) / 2
    v = psdcheck.check_psd(0.1, float(n), sym(A), seed=1)
    assert isinstance(v, psdcheck.Certificate)
    resid = np.linalg.norm(A - v.X @ v.X.T, 2)
    lam_min = 1.0 / n
    assert resid <= 0.1 * lam_min + 1e-8


# ---------------------------------------------------------------------------
# deflated matvec kernel


def test_deflated_matvec_no_deflations_is_plain():
    A = sym(np.diag([2.0, 3.0]))
    x = np.array([1.0, 1.0])
    out = psdcheck.deflated_matvec(A, [], x)
    assert np.array_equal(out, np.array([2.0, 3.0]))


def test_deflated_matvec_single_shave():
    A = sym(np.eye(2))
    w = np.array([1.0, 0.0])
    out = psdcheck.deflated_matvec(A, [(1.0, w)], np.array([1.0, 0.0]))
    assert np.allclose(out, np.array([0.9, 0.0]), atol=1e-15)


def test_deflated_matvec_zero_weight_is_noop():
    A = sym(np.eye(2))
    w = np.array([1.0, 0.0])
    x = np.array([1.0, 2.0])
    assert np.array_equal(psdcheck.deflated_matvec(A, [(0.0, w)], x), A.csr @ x)


def test_deflated_matvec_matches_dense_composition():
    rng = np.random.default_rng(4)
    n = 9
    A_dense = random_gram(n, 15, seed=2)
    deflations = []
    dense = A_dense.copy()
    for _ in range(3):
        w = rng.standard_normal(n)
        w /= np.linalg.norm(w)
        mu = float(rng.uniform(0.1, 1.0))
        deflations.append((mu, w))
        dense -= (mu / 10.0) * np.outer(w, w)
    x = rng.standard_normal(n)
    out = psdcheck.deflated_matvec(sym(A_dense), deflations, x)
    assert np.allclose(out, dense @ x, atol=1e-12)


# ---------------------------------------------------------------------------
# invariants


def test_psd_inputs_never_see_negative_extraction():
    for seed in range(6):
        A = random_gram(16, 25, seed=100 + seed)
        v = psdcheck.check_psd(0.1, 30.0, sym(A + 1e-3 * np.eye(16)), seed=seed)
        assert isinstance(v, psdcheck.Certificate)
        assert all(mu >= -1e-9 for mu in v.mu_trace)


def test_soundness_on_gram_matrices():
    for seed in range(8):
        rng = np.random.default_rng(200 + seed)
        n = int(rng.integers(8, 24))
        A = random_gram(n, n + 10, seed=300 + seed)
        A = A + 1e-2 * np.eye(n)  # keep kappa moderate
        lam = np.linalg.eigvalsh(A)
        kappa = min(50.0, float(lam[-1] / lam[0]) * 1.5)
        v = psdcheck.check_psd(0.1, max(1.0, kappa), sym(A), seed=seed)
        assert isinstance(v, psdcheck.Certificate)
        resid = np.linalg.norm(A - v.X @ v.X.T, 2)
        assert resid <= 0.1 * float(lam[0]) + 1e-8


def test_completeness_on_planted_negative_directions():
    for seed in range(5):
        rng = np.random.default_rng(400 + seed)
        n = 12
        kappa = 10.0
        vals = rng.uniform(0.3, 1.0, n)
        vals[0] = 1.0
        vals[-1] = -1.0 / kappa  # lambda_min = -lambda_max / kappa
        A, _ = rotated_diag(vals, seed=500 + seed)
        v = psdcheck.check_psd(0.1, kappa, sym(A), seed=seed)
        assert isinstance(v, psdcheck.NotPsd)


def test_verdict_determinism():
    A = random_gram(14, 20, seed=9) + 1e-2 * np.eye(14)
    a = psdcheck.check_psd(0.1, 40.0, sym(A), seed=5)
    b = psdcheck.check_psd(0.1, 40.0, sym(A), seed=5)
    assert type(a) is type(b)
    assert a.steps == b.steps
    assert a.sigma == b.sigma
    assert np.array_equal(a.X, b.X)


def test_budget_formula_and_cap():
    cfg = psdcheck.check_psd(0.1, 1.0, sym(np.eye(4)), seed=0).config
    assert cfg.delta == 0.1
    assert cfg.T >= 1
    assert cfg.eps_run <= 0.75
    assert cfg.K >= 1
