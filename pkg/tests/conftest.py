"""Shared helpers for the test suite.

Conventions used throughout:
  * every randomized check is seeded, so failures replay exactly;
  * frozen numeric targets were computed independently (numpy/mpmath oracles)
    and are asserted at the stated tolerances, never re-derived from the
    code under test.
"""

from __future__ import annotations

import numpy as np
import pytest

from dynev import sparse


def random_gram(n: int, m: int, seed: int, density: float = 0.3) -> np.ndarray:
    """Dense PSD Gram matrix X X^T with sparse-ish unit columns."""
    rng = np.random.default_rng(seed)
    k = max(1, round(density * n))
    X = np.zeros((n, m))
    for j in range(m):
        rows = rng.choice(n, size=k, replace=False)
        col = rng.standard_normal(k)
        col /= np.linalg.norm(col)
        X[rows, j] = col
    return X @ X.T


def rotated_diag(values, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Q diag(values) Q^T for a Haar-ish random orthogonal Q; returns (A, Q)."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * values) @ Q.T, Q


def sym(a: np.ndarray) -> sparse.SparseSymMatrix:
    return sparse.SparseSymMatrix.from_dense(a)


def e(n: int, i: int, scale: float = 1.0) -> sparse.SparseVector:
    v = np.zeros(n)
    v[i] = scale
    return sparse.SparseVector.from_dense(v)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
