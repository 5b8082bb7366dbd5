"""Sparse containers, the dynamic rank-one-update operator, and file IO."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynev import sparse

from conftest import e, sym


# ---------------------------------------------------------------------------
# matvec


def test_matvec_diag_minus_unit_update():
    op = sparse.DynamicOperator(sym(np.diag([2.0, 1.0])), scale=1.0)
    sparse.push_update(op, e(2, 1))
    out = sparse.matvec(op, np.array([1.0, 1.0]))
    assert np.array_equal(out, np.array([2.0, 0.0]))


def test_matvec_identity_passthrough():
    op = sparse.DynamicOperator(sym(np.eye(3)))
    x = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(sparse.matvec(op, x), x)


def test_matvec_fully_drained_is_zero():
    op = sparse.DynamicOperator(sym(np.diag([1.0, 1.0])))
    sparse.push_update(op, e(2, 0))
    sparse.push_update(op, e(2, 1))
    assert np.array_equal(sparse.matvec(op, np.array([1.0, 1.0])), np.zeros(2))


# ---------------------------------------------------------------------------
# quad_form


def test_quad_form_identity_basis_vector():
    op = sparse.DynamicOperator(sym(np.eye(2)))
    assert sparse.quad_form(op, np.array([1.0, 0.0])) == 1.0


def test_quad_form_after_update():
    op = sparse.DynamicOperator(sym(np.eye(2)))
    sparse.push_update(op, e(2, 1))
    w = np.array([1.0, 1.0]) / math.sqrt(2.0)
    assert sparse.quad_form(op, w) == pytest.approx(0.5, abs=1e-15)


def test_quad_form_scale_applied():
    op = sparse.DynamicOperator(sym(np.diag([4.0, 1.0])), scale=0.25)
    assert sparse.quad_form(op, np.array([1.0, 0.0])) == 1.0


# ---------------------------------------------------------------------------
# quad_form_increment


def test_increment_orthogonal_update_no_change():
    assert sparse.quad_form_increment(1.0, e(2, 1), np.array([1.0, 0.0]), 1.0) == 1.0


def test_increment_aligned_update_drains():
    assert sparse.quad_form_increment(1.0, e(2, 0), np.array([1.0, 0.0]), 1.0) == 0.0


def test_increment_general_dot():
    v = sparse.SparseVector.from_dense(np.array([1.0, 1.0]))
    assert sparse.quad_form_increment(2.0, v, np.array([1.0, 0.0]), 1.0) == 1.0


# ---------------------------------------------------------------------------
# push / updates log


def test_push_advances_time_and_preserves_order():
    op = sparse.DynamicOperator(sym(np.eye(3)))
    assert op.t == 0
    sparse.push_update(op, e(3, 2))
    assert op.t == 1
    sparse.push_update(op, e(3, 0))
    assert op.t == 2
    assert [int(v.idx[0]) for v in op.updates] == [2, 0]


def test_out_of_range_index_rejected():
    with pytest.raises(ValueError):
        sparse.SparseVector(dim=2, idx=np.array([5], dtype=np.int64), val=np.array([1.0]))


def test_push_dimension_mismatch_rejected():
    op = sparse.DynamicOperator(sym(np.eye(2)))
    with pytest.raises(ValueError):
        sparse.push_update(op, sparse.SparseVector.from_dense(np.zeros(3)))


def test_push_never_mutates_base():
    base = sym(np.diag([2.0, 3.0]))
    before = base.to_dense().copy()
    op = sparse.DynamicOperator(base)
    for i in range(2):
        sparse.push_update(op, e(2, i))
    assert np.array_equal(base.to_dense(), before)


def test_zero_nnz_update_advances_time():
    op = sparse.DynamicOperator(sym(np.eye(2)))
    sparse.push_update(op, sparse.SparseVector.from_dense(np.zeros(2)))
    assert op.t == 1
    assert np.array_equal(sparse.matvec(op, np.ones(2)), np.ones(2))


# ---------------------------------------------------------------------------
# gaussian_vector


def test_gaussian_vector_deterministic():
    a = sparse.gaussian_vector(64, 123)
    b = sparse.gaussian_vector(64, 123)
    assert np.array_equal(a, b)
    c = sparse.gaussian_vector(64, 124)
    assert not np.array_equal(a, c)


def test_gaussian_vector_norm_concentration():
    n = 10_000
    v = sparse.gaussian_vector(n, 7)
    assert abs(float(v @ v) - n) <= 0.3 * n


def test_gaussian_vector_mean_within_three_sigma():
    n = 100_000
    v = sparse.gaussian_vector(n, 11)
    assert abs(float(v.mean())) <= 3.0 / math.sqrt(n)


# ---------------------------------------------------------------------------
# consistency invariants


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_quad_form_matches_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    M = rng.standard_normal((n, n))
    A = M @ M.T
    op = sparse.DynamicOperator(sym(A), scale=float(rng.uniform(0.25, 4.0)))
    dense = op.scale * A.copy()
    for _ in range(int(rng.integers(0, 8))):
        v = np.zeros(n)
        k = int(rng.integers(1, n))
        rows = rng.choice(n, size=k, replace=False)
        v[rows] = rng.standard_normal(k) * 0.3
        sparse.push_update(op, sparse.SparseVector.from_dense(v))
        dense -= op.scale * np.outer(v, v)
    w = rng.standard_normal(n)
    got = sparse.quad_form(op, w)
    want = float(w @ dense @ w)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-12)
    x = rng.standard_normal(n)
    assert np.allclose(sparse.matvec(op, x), dense @ x, rtol=1e-10, atol=1e-12)


def test_chained_increments_match_fresh_quad():
    rng = np.random.default_rng(5)
    n = 40
    M = rng.standard_normal((n, n))
    A = M @ M.T
    op = sparse.DynamicOperator(sym(A))
    w = rng.standard_normal(n)
    w /= np.linalg.norm(w)
    q = sparse.quad_form(op, w)
    for _ in range(100):
        v = np.zeros(n)
        rows = rng.choice(n, size=3, replace=False)
        v[rows] = rng.standard_normal(3) * 0.2
        sv = sparse.SparseVector.from_dense(v)
        sparse.push_update(op, sv)
        q = sparse.quad_form_increment(q, sv, w, op.scale)
    fresh = sparse.quad_form(op, w)
    assert abs(q - fresh) <= 1e-8 * (1.0 + abs(fresh))


def test_matvec_cost_accounting():
    rng = np.random.default_rng(2)
    n = 30
    A = np.diag(rng.uniform(1.0, 2.0, n))
    op = sparse.DynamicOperator(sym(A))
    nnz_updates = 0
    for _ in range(10):
        v = np.zeros(n)
        rows = rng.choice(n, size=4, replace=False)
        v[rows] = 1.0
        sparse.push_update(op, sparse.SparseVector.from_dense(v))
        nnz_updates += 4
    assert op.nnz_updates_total == nnz_updates
    before = op.touched_nnz
    sparse.matvec(op, np.ones(n))
    assert op.touched_nnz - before == op.base.nnz + nnz_updates
    before = op.touched_nnz
    sparse.quad_form(op, np.ones(n))
    assert op.touched_nnz - before == op.base.nnz + nnz_updates


def test_operator_compact_preserves_value():
    rng = np.random.default_rng(9)
    n = 12
    M = rng.standard_normal((n, n))
    op = sparse.DynamicOperator(sym(M @ M.T), scale=0.5)
    for _ in range(5):
        v = rng.standard_normal(n) * 0.1
        sparse.push_update(op, sparse.SparseVector.from_dense(v))
    folded = op.compact()
    assert folded.t == op.t
    assert not folded.updates
    assert np.allclose(folded.to_dense(), op.to_dense(), atol=1e-9)


def test_set_scale_validation():
    op = sparse.DynamicOperator(sym(np.eye(2)))
    with pytest.raises(ValueError):
        op.set_scale(0.0)
    with pytest.raises(ValueError):
        op.set_scale(float("nan"))
    op.set_scale(0.5)
    assert sparse.quad_form(op, np.array([1.0, 0.0])) == 0.5


# ---------------------------------------------------------------------------
# symmetric-matrix container


def test_from_dense_rejects_asymmetric():
    with pytest.raises(ValueError):
        sparse.SparseSymMatrix.from_dense(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_sparse_vector_from_dense_drops_zeros():
    v = sparse.SparseVector.from_dense(np.array([0.0, -2.0, 0.0, 3.0]))
    assert list(v.idx) == [1, 3]
    assert list(v.val) == [-2.0, 3.0]
    assert v.nnz == 2
    assert v.dot(np.array([1.0, 1.0, 1.0, 1.0])) == 1.0


# ---------------------------------------------------------------------------
# file IO


def test_matrix_market_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    M = rng.standard_normal((8, 8))
    A = M @ M.T
    p = tmp_path / "a.mtx"
    sparse.write_matrix_market(p, sym(A))
    back = sparse.read_matrix_market(p)
    assert np.allclose(back.to_dense(), A, atol=1e-12)


def test_dense_matrix_market_writer(tmp_path):
    import scipy.io

    X = np.arange(6.0).reshape(3, 2)
    p = tmp_path / "x.mtx"
    sparse.write_dense_matrix_market(p, X)
    back = scipy.io.mmread(p)
    assert np.array_equal(np.asarray(back), X)


def test_stream_jsonl_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    updates = []
    for _ in range(6):
        v = np.zeros(10)
        rows = rng.choice(10, size=3, replace=False)
        v[rows] = rng.standard_normal(3)
        updates.append(sparse.SparseVector.from_dense(v))
    p = tmp_path / "s.jsonl"
    sparse.write_stream_jsonl(p, updates)
    back = sparse.read_stream_jsonl(p, dim=10)
    assert len(back) == len(updates)
    for u, b in zip(updates, back):
        assert np.array_equal(u.idx, b.idx)
        assert np.array_equal(u.val, b.val)


def test_stream_jsonl_rejects_bad_ordinals(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"t": 2, "idx": [0], "val": [1.0]}\n')
    with pytest.raises(ValueError):
        sparse.read_stream_jsonl(p, dim=4)
